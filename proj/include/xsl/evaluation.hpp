#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xsl/corpus.hpp"
#include "xsl/model.hpp"
#include "xsl/selection.hpp"

namespace xsl {

// A referent-selection trial: prompt word, candidate objects, and the subset
// that counts as correct.
struct TestScene {
  WordId prompt;
  std::vector<ObjectId> candidates;
  std::vector<ObjectId> correct;

  bool operator==(const TestScene&) const = default;
};

struct AccuracyResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t ties = 0;
  double chance = 0.0;  // expected accuracy of a uniform random chooser

  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
  double tie_rate() const { return total ? static_cast<double>(ties) / static_cast<double>(total) : 0.0; }
};

// ---- lexicon evaluation ----

struct ScoredPair {
  double score;
  bool gold;
};

/// Maximum F1 over the thresholded lexicons {pairs with score > t}, for t
/// below every score and t at every distinct score. `gold_total` is the size
/// of the gold lexicon (recall denominator).
double best_f(std::vector<ScoredPair> pairs, std::size_t gold_total);
/// Over every entry of the matrix.
double best_f(const SimilarityMatrix& sims, const GoldLexicon& gold);
/// Over familiar (non-novel) words and objects; gold pairs touching a novel
/// item are left out of the recall denominator as well.
double best_f(const Model& model, const Corpus& corpus);

// ---- test scene construction ----

/// Novel word i is paired with novel object i plus `familiar_per_scene`
/// distinct familiar objects drawn uniformly. Throws ConfigError when the
/// corpus lacks enough novel or familiar items.
std::vector<TestScene> build_novel_test_scenes(const Corpus& corpus, std::size_t n_novel_words = 5,
                                               std::size_t scenes_per_word = 20,
                                               std::size_t familiar_per_scene = 2,
                                               std::uint64_t seed = 0);

/// One trial per (scene, familiar gold word whose object is present) for
/// scenes with at least two objects. Diagnostic only.
std::vector<TestScene> gold_test_scenes(const Corpus& corpus);

/// For scenes with at least two objects: prompt each familiar instance label
/// that is also a known word; correct = instances carrying that label.
/// Duplicate trials (same prompt and object set) are dropped.
std::vector<TestScene> familiar_visual_test_scenes(const Corpus& corpus, std::span<const Scene> scenes);

struct NovelVisualScenes {
  std::vector<TestScene> scenes;
  std::size_t excluded_multi = 0;  // scenes with more than one held-out instance
};

/// Prompts every eval scene with each of `prompts`; correct = the held-out
/// instances. Scenes with several held-out instances are skipped when
/// `exclude_multi` is set.
NovelVisualScenes novel_visual_test_scenes(const Corpus& corpus, std::span<const Scene> eval_scenes,
                                           const std::set<std::string>& heldout_labels,
                                           std::span<const std::string> prompts,
                                           bool exclude_multi = true);

// ---- referent-selection accuracy ----

/// Scenes are scored in parallel (OpenMP); the serial variant is the reference.
AccuracyResult accuracy(const Model& model, std::span<const TestScene> scenes, SelectionStrategy strategy,
                        Normalization norm = Normalization::Shift);
AccuracyResult accuracy_serial(const Model& model, std::span<const TestScene> scenes,
                               SelectionStrategy strategy, Normalization norm = Normalization::Shift);

inline AccuracyResult novel_accuracy(const Model& model, std::span<const TestScene> scenes,
                                     SelectionStrategy strategy, Normalization norm = Normalization::Shift) {
  return accuracy(model, scenes, strategy, norm);
}

inline AccuracyResult familiar_accuracy(const Model& model, std::span<const TestScene> scenes,
                                        SelectionStrategy strategy, Normalization norm = Normalization::Shift) {
  return accuracy(model, scenes, strategy, norm);
}

/// Accuracy given a fixed choice per scene (used for oracle and random choosers).
AccuracyResult score_choices(std::span<const TestScene> scenes, std::span<const ObjectId> choices);

double chance_level(std::span<const TestScene> scenes);

// ---- results ----

// One CSV row: condition,loss,strategy,seed,metric,value
struct ResultRow {
  std::string condition;
  std::string loss;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;

  bool operator==(const ResultRow&) const = default;
};

struct Aggregate {
  std::string condition;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // sample SD (n - 1); 0 with sd_defined = false when n == 1
  std::size_t n = 0;
  bool sd_defined = false;
};

/// Groups by (condition, metric), sorted by key. Independent of row order.
std::vector<Aggregate> aggregate_runs(std::span<const ResultRow> rows);

void write_results_csv(std::span<const ResultRow> rows, std::ostream& out);
std::vector<ResultRow> read_results_csv(std::istream& in);
void write_aggregate_csv(std::span<const Aggregate> aggs, std::ostream& out);
std::vector<Aggregate> read_aggregate_csv(std::istream& in);

}  // namespace xsl
