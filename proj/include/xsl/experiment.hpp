#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "xsl/config.hpp"
#include "xsl/corpus.hpp"
#include "xsl/evaluation.hpp"
#include "xsl/model.hpp"
#include "xsl/selection.hpp"
#include "xsl/synthetic.hpp"
#include "xsl/training.hpp"

namespace xsl {

enum class CorpusSource { Symbolic, Synthetic, Visual, VisualSynthetic };

std::string_view to_string(CorpusSource s);
CorpusSource parse_corpus_source(std::string_view name);

struct ExperimentConfig {
  CorpusSource source = CorpusSource::Synthetic;
  std::filesystem::path corpus_path;    // symbolic
  std::filesystem::path scenes_path;    // visual
  std::filesystem::path features_path;  // visual
  SynthConfig synth;
  VisualSurrogateConfig surrogate;
  std::uint64_t data_seed = 1;  // generated corpora

  // symbolic novelty test
  std::size_t novel_words = 5;
  std::size_t novel_objects = 5;
  std::size_t scenes_per_word = 20;
  std::size_t familiar_per_scene = 2;

  // visual holdout
  std::set<std::string> holdout_words = {"dog", "puppy"};
  std::set<std::string> holdout_labels = {"dog", "puppy"};
  std::vector<std::string> prompts = {"dog"};
  bool exclude_multi = true;
  EncoderMode encoder = EncoderMode::Projection;

  TrainConfig train;
  std::vector<LossKind> losses = {LossKind::OverWords, LossKind::OverObjects, LossKind::Joint};
  std::vector<SelectionStrategy> strategies = {SelectionStrategy::Similarity, SelectionStrategy::Bayes};
  Normalization normalization = Normalization::Shift;

  std::size_t search_budget = 0;
  SearchSpace search;

  std::size_t runs = 25;
  std::uint64_t base_seed = 0;
  int workers = 1;
  std::filesystem::path out_dir = "results";
  std::string config_hash;

  bool visual() const { return source == CorpusSource::Visual || source == CorpusSource::VisualSynthetic; }

  /// Reads and validates every field; referenced input paths must exist.
  static ExperimentConfig from_config(const Config& cfg);
};

/// The corpus as read or generated, before novelty injection or holdout.
Corpus load_source_corpus(const ExperimentConfig& cfg);

struct PreparedData {
  Corpus train;
  bool visual = false;
  // Visual test sets are fixed by the data; symbolic novel scenes are drawn
  // per run from the run seed (see novel_scenes_for).
  std::vector<TestScene> novel_scenes;
  std::vector<TestScene> familiar_scenes;
  std::size_t excluded_multi = 0;
};

/// Symbolic: injects the novel words and objects. Visual: holds out the
/// configured category and builds both test sets.
PreparedData prepare_data(const ExperimentConfig& cfg);
PreparedData prepare_data(const ExperimentConfig& cfg, Corpus source);

std::vector<TestScene> novel_scenes_for(const ExperimentConfig& cfg, const PreparedData& data,
                                        std::uint64_t seed);

inline std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t run_index) {
  return cfg.base_seed + run_index;
}

/// Rows for one trained model. `trained` adds snapshot_loss and best_epoch.
std::vector<ResultRow> evaluate_model(const ExperimentConfig& cfg, const PreparedData& data,
                                      const Model& model, LossKind loss, std::uint64_t seed,
                                      const TrainResult* trained = nullptr);

/// Fresh init with the run seed, train, evaluate.
TrainResult train_one(const ExperimentConfig& cfg, const PreparedData& data, LossKind loss,
                      std::uint64_t seed);

struct RunOutcome {
  LossKind loss = LossKind::Joint;
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<ResultRow> rows;
};

RunOutcome run_one(const ExperimentConfig& cfg, const PreparedData& data, LossKind loss,
                   std::size_t run_index);

struct SweepResult {
  std::vector<RunOutcome> runs;  // loss-major, then run index
  std::vector<ResultRow> rows;
  std::vector<Aggregate> aggregates;
  std::size_t failures = 0;
};

/// Every (loss, run) pair, in parallel across cfg.workers threads. Failed runs
/// are recorded and the sweep continues.
SweepResult run_sweep(const ExperimentConfig& cfg, const PreparedData& data);

/// results.csv, aggregate.csv, seeds.csv and config.txt under `dir`.
void write_sweep(const SweepResult& sweep, const ExperimentConfig& cfg, const std::filesystem::path& dir);

struct PlotRow {
  std::string condition;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  double baseline = 0.0;
};

struct Report {
  std::string table;
  std::vector<PlotRow> plot;
};

/// Reads results.csv (and aggregate.csv when present, which must agree with
/// the recomputed aggregates to 1e-12). Throws DataError on a missing or
/// corrupt directory.
Report build_report(const std::filesystem::path& dir);
void write_plot_csv(std::span<const PlotRow> rows, std::ostream& out);

}  // namespace xsl
