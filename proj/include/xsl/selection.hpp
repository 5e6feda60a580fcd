#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "xsl/corpus.hpp"
#include "xsl/model.hpp"

namespace xsl {

enum class SelectionStrategy { Similarity, Bayes };

std::string_view to_string(SelectionStrategy s);
SelectionStrategy parse_strategy(std::string_view name);

// How a column of cosines is turned into a speaker distribution p(. | o).
enum class Normalization {
  Shift,    // s = (cos + 1) / 2, then divide by the column sum
  Softmax,  // s = exp(cos), then divide by the column sum
};

std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view name);

/// Unnormalised speaker score of one cosine.
double speaker_score(double cos, Normalization n);

struct SelectionOutcome {
  ObjectId chosen;
  std::vector<double> scores;  // aligned with the scene's object list
  bool tie = false;
};

// Scores within kTieTolerance * |max| of the maximum count as tied; the
// lowest object ID among them wins.
inline constexpr double kTieTolerance = 1e-12;

/// Argmax helper shared by both strategies.
SelectionOutcome pick_max(std::span<const ObjectId> objects, std::vector<double> scores);

// ---- over a precomputed similarity matrix (columns indexed by object ID) ----

SelectionOutcome select_by_similarity(const SimilarityMatrix& sims, WordId w,
                                      std::span<const ObjectId> scene);

/// Sum over all words of speaker_score(sims(w', o)).
double speaker_normalizer(const SimilarityMatrix& sims, ObjectId o, Normalization n = Normalization::Shift);
/// Normalizers for every column. Parallel over columns (OpenMP).
std::vector<double> speaker_normalizers(const SimilarityMatrix& sims, Normalization n = Normalization::Shift);
std::vector<double> speaker_normalizers_serial(const SimilarityMatrix& sims,
                                               Normalization n = Normalization::Shift);

/// p(w | o). Throws NumericError when the normalizer is zero.
double speaker_prob(const SimilarityMatrix& sims, WordId w, ObjectId o,
                    Normalization n = Normalization::Shift);

/// argmax over the scene of p(w | o) under a uniform object prior.
SelectionOutcome select_by_bayes(const SimilarityMatrix& sims, WordId w,
                                 std::span<const ObjectId> scene,
                                 Normalization n = Normalization::Shift);
/// Same, with normalizers precomputed by speaker_normalizers().
SelectionOutcome select_by_bayes(const SimilarityMatrix& sims, std::span<const double> normalizers,
                                 WordId w, std::span<const ObjectId> scene,
                                 Normalization n = Normalization::Shift);

// ---- directly over a model ----

SelectionOutcome select_by_similarity(const Model& model, WordId w, std::span<const ObjectId> scene);
double speaker_prob(const Model& model, WordId w, ObjectId o, Normalization n = Normalization::Shift);
SelectionOutcome select_by_bayes(const Model& model, WordId w, std::span<const ObjectId> scene,
                                 Normalization n = Normalization::Shift);

SelectionOutcome select(const Model& model, SelectionStrategy s, WordId w,
                        std::span<const ObjectId> scene, Normalization n = Normalization::Shift);

/// Brute-force posterior p(o | w, S): builds the full speaker matrix
/// p(w' | o) for every column with the shift normalization, multiplies by the
/// uniform prior 1/|S|, renormalises over the scene and returns the argmax
/// (lowest ID among ties). Intended for small matrices as a check on
/// select_by_bayes.
ObjectId bayes_oracle(const SimilarityMatrix& sims, WordId w, std::span<const ObjectId> scene);

}  // namespace xsl
