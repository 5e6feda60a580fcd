#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xsl/corpus.hpp"
#include "xsl/model.hpp"

namespace xsl {

using Rng = std::mt19937_64;

enum class LossKind {
  OverObjects,  // anti-polysemy: negatives are objects
  OverWords,    // anti-synonymy: negatives are words
  Joint,        // sum of both
};

std::string_view to_string(LossKind kind);
/// Accepts "objects", "words", "joint". Throws ConfigError otherwise.
LossKind parse_loss_kind(std::string_view name);

struct TrainConfig {
  LossKind loss = LossKind::Joint;
  double learning_rate = 0.1;
  std::size_t negatives = 5;
  std::size_t max_epochs = 20;
  double margin = 1.0;
  double init_range = 0.1;
  std::size_t dim = 200;
  bool inverse_frequency = true;
  // Also exclude the other items of the current scene from negative sampling.
  bool exclude_scene_items = false;
  // Draw fresh negatives every epoch; otherwise one draw per pair is reused.
  bool resample_negatives = true;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct TrainResult {
  Model best;
  std::vector<double> trajectory;  // mean weighted loss per epoch
  std::size_t best_epoch = 0;      // 1-based index into trajectory
  TrainConfig config;
  std::size_t rejitter_events = 0;

  double best_loss() const { return trajectory.at(best_epoch - 1); }
};

double loss_over_objects(const Model& model, WordId w, ObjectId o, std::span<const ObjectId> negs,
                         double margin = 1.0);
double loss_over_words(const Model& model, WordId w, ObjectId o, std::span<const WordId> negs,
                       double margin = 1.0);
double loss_joint(const Model& model, WordId w, ObjectId o, std::span<const ObjectId> obj_negs,
                  std::span<const WordId> word_negs, double margin = 1.0);

// Loss of one positive pair with the gradient with respect to every word
// vector and object encoding it touches. Entries may repeat when a negative
// is drawn more than once; they add up.
struct PairGradient {
  double loss = 0.0;
  std::vector<std::pair<WordId, Vec>> words;
  std::vector<std::pair<ObjectId, Vec>> objects;
};

PairGradient loss_and_gradient(const Model& model, LossKind kind, WordId w, ObjectId o,
                               std::span<const ObjectId> obj_negs,
                               std::span<const WordId> word_negs, double margin = 1.0);

/// Gradient with respect to model.parameters(), scaled by `scale`.
std::vector<double> dense_gradient(const Model& model, const PairGradient& g, double scale = 1.0);

/// params -= lr * gradient, routed through the object encoder.
void apply_gradient(Model& model, const PairGradient& g, double lr);

/// k draws, uniform with replacement over [0, population) minus `exclude`.
/// Throws ConfigError when nothing is left to draw from.
std::vector<std::uint32_t> sample_negatives(std::size_t population, std::size_t k,
                                            std::span<const std::uint32_t> exclude, Rng& rng);
std::vector<ObjectId> sample_negative_objects(std::size_t population, std::size_t k,
                                              ObjectId exclude, Rng& rng);
std::vector<WordId> sample_negative_words(std::size_t population, std::size_t k, WordId exclude,
                                          Rng& rng);

/// Per-pair SGD over the expanded (word, object) pairs for cfg.max_epochs,
/// returning the parameters from the epoch with the lowest mean loss.
/// Throws NumericError if the loss turns non-finite.
TrainResult train(Model model, const Corpus& corpus, const TrainConfig& cfg);

/// `epoch,loss` CSV.
void write_trajectory(const TrainResult& result, std::ostream& out);

struct SearchSpace {
  double lr_min = 0.01, lr_max = 1.0;  // sampled log-uniformly
  double init_min = 0.01, init_max = 0.5;
  std::vector<std::size_t> dims = {200};
};

struct SearchTrial {
  TrainConfig config;
  double snapshot_loss = 0.0;
  std::size_t best_epoch = 0;
};

struct SearchResult {
  TrainConfig best;
  std::vector<SearchTrial> trials;
};

/// Samples `budget` configurations (other fields from `base`), trains each
/// from a fresh init_model and keeps the one whose snapshot loss is lowest.
/// Trials run in parallel across `workers` threads.
SearchResult random_search(const Corpus& corpus, const TrainConfig& base, const SearchSpace& space,
                           std::size_t budget, std::uint64_t seed, int workers = 1);

/// One line per trial: lr,init_range,dim,loss,snapshot_loss,best_epoch.
void write_search_log(const SearchResult& result, std::ostream& out);

}  // namespace xsl
