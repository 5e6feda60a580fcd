#include "xsl/selection.hpp"

#include <algorithm>
#include <cmath>

#include "xsl/error.hpp"

namespace xsl {

std::string_view to_string(SelectionStrategy s) {
  return s == SelectionStrategy::Similarity ? "similarity" : "bayes";
}

SelectionStrategy parse_strategy(std::string_view name) {
  if (name == "similarity") return SelectionStrategy::Similarity;
  if (name == "bayes") return SelectionStrategy::Bayes;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected similarity|bayes)");
}

std::string_view to_string(Normalization n) { return n == Normalization::Shift ? "shift" : "softmax"; }

Normalization parse_normalization(std::string_view name) {
  if (name == "shift") return Normalization::Shift;
  if (name == "softmax") return Normalization::Softmax;
  throw ConfigError("unknown normalization '" + std::string(name) + "' (expected shift|softmax)");
}

double speaker_score(double cos, Normalization n) {
  return n == Normalization::Shift ? (cos + 1.0) / 2.0 : std::exp(cos);
}

SelectionOutcome pick_max(std::span<const ObjectId> objects, std::vector<double> scores) {
  if (objects.empty()) throw ConfigError("cannot select from an empty scene");
  const double best = *std::max_element(scores.begin(), scores.end());
  const double tol = kTieTolerance * std::abs(best);
  SelectionOutcome out;
  std::size_t n_tied = 0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (best - scores[i] > tol) continue;
    if (n_tied == 0 || objects[i] < out.chosen) out.chosen = objects[i];
    ++n_tied;
  }
  out.tie = n_tied > 1;
  out.scores = std::move(scores);
  return out;
}

namespace {

void check_ids(const SimilarityMatrix& sims, WordId w, std::span<const ObjectId> scene) {
  if (w.index() >= sims.rows()) throw ConfigError("unknown word ID " + std::to_string(w.value));
  for (auto o : scene)
    if (o.index() >= sims.cols()) throw ConfigError("unknown object ID " + std::to_string(o.value));
}

double column_normalizer(const SimilarityMatrix& sims, std::size_t col, Normalization n) {
  double z = 0.0;
  for (std::size_t r = 0; r < sims.rows(); ++r) z += speaker_score(sims(r, col), n);
  return z;
}

double checked_ratio(double num, double z) {
  if (!(z > 0.0)) throw NumericError("speaker normalizer is zero");
  return num / z;
}

}  // namespace

SelectionOutcome select_by_similarity(const SimilarityMatrix& sims, WordId w,
                                      std::span<const ObjectId> scene) {
  check_ids(sims, w, scene);
  std::vector<double> scores;
  for (auto o : scene) scores.push_back(sims(w.index(), o.index()));
  return pick_max(scene, std::move(scores));
}

double speaker_normalizer(const SimilarityMatrix& sims, ObjectId o, Normalization n) {
  if (o.index() >= sims.cols()) throw ConfigError("unknown object ID " + std::to_string(o.value));
  return column_normalizer(sims, o.index(), n);
}

std::vector<double> speaker_normalizers(const SimilarityMatrix& sims, Normalization n) {
  std::vector<double> z(sims.cols());
  const auto cols = static_cast<std::ptrdiff_t>(sims.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < cols; ++c)
    z[static_cast<std::size_t>(c)] = column_normalizer(sims, static_cast<std::size_t>(c), n);
  return z;
}

std::vector<double> speaker_normalizers_serial(const SimilarityMatrix& sims, Normalization n) {
  std::vector<double> z(sims.cols());
  for (std::size_t c = 0; c < sims.cols(); ++c) z[c] = column_normalizer(sims, c, n);
  return z;
}

double speaker_prob(const SimilarityMatrix& sims, WordId w, ObjectId o, Normalization n) {
  const ObjectId scene[1] = {o};
  check_ids(sims, w, scene);
  return checked_ratio(speaker_score(sims(w.index(), o.index()), n), column_normalizer(sims, o.index(), n));
}

SelectionOutcome select_by_bayes(const SimilarityMatrix& sims, std::span<const double> normalizers,
                                 WordId w, std::span<const ObjectId> scene, Normalization n) {
  check_ids(sims, w, scene);
  if (normalizers.size() != sims.cols()) throw ConfigError("normalizer table size mismatch");
  std::vector<double> scores;
  for (auto o : scene)
    scores.push_back(checked_ratio(speaker_score(sims(w.index(), o.index()), n), normalizers[o.index()]));
  return pick_max(scene, std::move(scores));
}

SelectionOutcome select_by_bayes(const SimilarityMatrix& sims, WordId w,
                                 std::span<const ObjectId> scene, Normalization n) {
  check_ids(sims, w, scene);
  std::vector<double> scores;
  for (auto o : scene)
    scores.push_back(checked_ratio(speaker_score(sims(w.index(), o.index()), n),
                                   column_normalizer(sims, o.index(), n)));
  return pick_max(scene, std::move(scores));
}

SelectionOutcome select_by_similarity(const Model& model, WordId w, std::span<const ObjectId> scene) {
  std::vector<double> scores;
  for (auto o : scene) scores.push_back(similarity(model, w, o));
  return pick_max(scene, std::move(scores));
}

double speaker_prob(const Model& model, WordId w, ObjectId o, Normalization n) {
  if (w.index() >= model.num_words()) throw ConfigError("unknown word ID " + std::to_string(w.value));
  const ObjectId col[1] = {o};
  const auto sims = similarity_columns(model, col);
  return checked_ratio(speaker_score(sims(w.index(), 0), n), column_normalizer(sims, 0, n));
}

SelectionOutcome select_by_bayes(const Model& model, WordId w, std::span<const ObjectId> scene,
                                 Normalization n) {
  if (w.index() >= model.num_words()) throw ConfigError("unknown word ID " + std::to_string(w.value));
  const auto sims = similarity_columns(model, scene);
  std::vector<double> scores;
  for (std::size_t c = 0; c < scene.size(); ++c)
    scores.push_back(checked_ratio(speaker_score(sims(w.index(), c), n), column_normalizer(sims, c, n)));
  return pick_max(scene, std::move(scores));
}

SelectionOutcome select(const Model& model, SelectionStrategy s, WordId w,
                        std::span<const ObjectId> scene, Normalization n) {
  return s == SelectionStrategy::Similarity ? select_by_similarity(model, w, scene)
                                            : select_by_bayes(model, w, scene, n);
}

ObjectId bayes_oracle(const SimilarityMatrix& sims, WordId w, std::span<const ObjectId> scene) {
  const std::size_t nw = sims.rows(), no = sims.cols();
  // Full speaker table p(w' | o).
  std::vector<std::vector<double>> speaker(no, std::vector<double>(nw));
  for (std::size_t o = 0; o < no; ++o) {
    double total = 0.0;
    for (std::size_t r = 0; r < nw; ++r) total += (sims(r, o) + 1.0) / 2.0;
    for (std::size_t r = 0; r < nw; ++r) speaker[o][r] = ((sims(r, o) + 1.0) / 2.0) / total;
  }
  const double prior = 1.0 / static_cast<double>(scene.size());
  std::vector<double> joint;
  double evidence = 0.0;
  for (auto o : scene) {
    joint.push_back(speaker[o.index()][w.index()] * prior);
    evidence += joint.back();
  }
  std::vector<double> posterior;
  for (double j : joint) posterior.push_back(j / evidence);

  double best = posterior[0];
  for (double p : posterior) best = std::max(best, p);
  const double tol = kTieTolerance * std::abs(best);
  ObjectId chosen = scene[0];
  bool found = false;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (best - posterior[i] > tol) continue;
    if (!found || scene[i] < chosen) chosen = scene[i];
    found = true;
  }
  return chosen;
}

}  // namespace xsl
