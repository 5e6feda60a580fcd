#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "xsl/corpus.hpp"
#include "xsl/numerics.hpp"

namespace xsl {

// How objects are mapped into the shared space.
enum class EncoderMode : std::uint32_t {
  Symbolic = 0,    // one trainable vector per object
  Projection = 1,  // trainable linear map of fixed per-instance features
  Frozen = 2,      // fixed features used directly; requires dim == feature_dim
};

// Dense |V| x |O| (or |V| x selected columns) table of cosine similarities.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> data() const { return data_; }

  bool operator==(const SimilarityMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Word embedding table E and object encoder V. All trainable parameters
// live in one flat buffer: word rows first, then either object rows
// (symbolic) or the feature_dim x dim projection (row-major). Frozen mode
// has no object parameters.
class Model {
 public:
  Model() = default;

  std::size_t dim() const { return dim_; }
  std::size_t num_words() const { return n_words_; }
  std::size_t num_objects() const { return n_objects_; }
  std::size_t feature_dim() const { return feature_dim_; }
  EncoderMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> word(WordId w) const;
  std::span<double> word(WordId w);
  /// Symbolic mode only.
  std::span<double> object_row(ObjectId o);
  std::span<const double> object_row(ObjectId o) const;
  /// Projection mode only; feature_dim x dim, row-major.
  std::span<double> projection();
  std::span<const double> projection() const;
  std::span<const double> features(ObjectId o) const;

  /// Encoded object vector (length dim).
  Vec encode_object(ObjectId o) const;
  /// Encodings of every object, row-major |O| x dim.
  std::vector<double> encode_all_objects() const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Adds dL/d(encoding of o), scaled by `scale`, into the parameter
  /// gradient buffer `grad` (same layout as parameters()).
  void accumulate_object_grad(ObjectId o, std::span<const double> enc_grad, double scale,
                              std::span<double> grad) const;
  /// Applies params -= lr * dL/d(encoding of o) through the encoder.
  void apply_object_grad(ObjectId o, std::span<const double> enc_grad, double lr);

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Model load(std::istream& in);
  static Model load(const std::filesystem::path& path);

  bool operator==(const Model&) const = default;

  friend Model init_model(const Corpus&, std::size_t, double, std::uint64_t, EncoderMode);

 private:
  void check_word(WordId w) const;
  void check_object(ObjectId o) const;
  std::size_t object_offset() const { return n_words_ * dim_; }

  std::size_t dim_ = 0;
  std::size_t n_words_ = 0;
  std::size_t n_objects_ = 0;
  std::size_t feature_dim_ = 0;
  EncoderMode mode_ = EncoderMode::Symbolic;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
  std::vector<double> features_;  // n_objects x feature_dim, fixed
};

/// Word rows, symbolic object rows and the projection are drawn from
/// Uniform(-init_range, init_range) with a generator seeded by `seed`.
/// Corpora with feature vectors use `visual_mode` (Projection or Frozen);
/// symbolic corpora always use Symbolic.
Model init_model(const Corpus& corpus, std::size_t dim, double init_range, std::uint64_t seed,
                 EncoderMode visual_mode = EncoderMode::Projection);

/// Cosine similarity of the encoded word and object. Throws ConfigError on
/// unknown IDs.
double similarity(const Model& model, WordId w, ObjectId o);

// Parallel over words (OpenMP). The serial variant is the reference.
SimilarityMatrix similarity_matrix(const Model& model);
SimilarityMatrix similarity_matrix_serial(const Model& model);
/// Columns restricted to `objects`, in the given order.
SimilarityMatrix similarity_columns(const Model& model, std::span<const ObjectId> objects);

}  // namespace xsl
