#include "xsl/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "xsl/error.hpp"

namespace xsl {

static_assert(std::endian::native == std::endian::little,
              "model files are written in host byte order, which must be little-endian");

void Model::check_word(WordId w) const {
  if (w.index() >= n_words_) throw ConfigError("unknown word ID " + std::to_string(w.value));
}

void Model::check_object(ObjectId o) const {
  if (o.index() >= n_objects_) throw ConfigError("unknown object ID " + std::to_string(o.value));
}

std::span<const double> Model::word(WordId w) const {
  check_word(w);
  return std::span<const double>(params_).subspan(w.index() * dim_, dim_);
}

std::span<double> Model::word(WordId w) {
  check_word(w);
  return std::span<double>(params_).subspan(w.index() * dim_, dim_);
}

std::span<double> Model::object_row(ObjectId o) {
  check_object(o);
  if (mode_ != EncoderMode::Symbolic) throw ConfigError("object rows exist only in symbolic mode");
  return std::span<double>(params_).subspan(object_offset() + o.index() * dim_, dim_);
}

std::span<const double> Model::object_row(ObjectId o) const {
  return const_cast<Model*>(this)->object_row(o);
}

std::span<double> Model::projection() {
  if (mode_ != EncoderMode::Projection) throw ConfigError("model has no projection");
  return std::span<double>(params_).subspan(object_offset(), feature_dim_ * dim_);
}

std::span<const double> Model::projection() const { return const_cast<Model*>(this)->projection(); }

std::span<const double> Model::features(ObjectId o) const {
  check_object(o);
  return std::span<const double>(features_).subspan(o.index() * feature_dim_, feature_dim_);
}

Vec Model::encode_object(ObjectId o) const {
  switch (mode_) {
    case EncoderMode::Symbolic: {
      auto row = object_row(o);
      return Vec(row.begin(), row.end());
    }
    case EncoderMode::Frozen: {
      auto f = features(o);
      return Vec(f.begin(), f.end());
    }
    case EncoderMode::Projection: {
      auto f = features(o);
      auto p = projection();
      Vec out(dim_, 0.0);
      for (std::size_t r = 0; r < feature_dim_; ++r) {
        const double fr = f[r];
        if (fr == 0.0) continue;
        const double* prow = p.data() + r * dim_;
        for (std::size_t k = 0; k < dim_; ++k) out[k] += fr * prow[k];
      }
      return out;
    }
  }
  return {};
}

std::vector<double> Model::encode_all_objects() const {
  std::vector<double> out(n_objects_ * dim_);
  for (std::size_t o = 0; o < n_objects_; ++o) {
    const auto e = encode_object(object_id(o));
    std::copy(e.begin(), e.end(), out.begin() + static_cast<std::ptrdiff_t>(o * dim_));
  }
  return out;
}

void Model::accumulate_object_grad(ObjectId o, std::span<const double> enc_grad, double scale,
                                   std::span<double> grad) const {
  check_object(o);
  switch (mode_) {
    case EncoderMode::Symbolic: {
      double* g = grad.data() + object_offset() + o.index() * dim_;
      for (std::size_t k = 0; k < dim_; ++k) g[k] += scale * enc_grad[k];
      break;
    }
    case EncoderMode::Projection: {
      auto f = features(o);
      for (std::size_t r = 0; r < feature_dim_; ++r) {
        const double fr = scale * f[r];
        if (fr == 0.0) continue;
        double* g = grad.data() + object_offset() + r * dim_;
        for (std::size_t k = 0; k < dim_; ++k) g[k] += fr * enc_grad[k];
      }
      break;
    }
    case EncoderMode::Frozen:
      break;
  }
}

void Model::apply_object_grad(ObjectId o, std::span<const double> enc_grad, double lr) {
  check_object(o);
  switch (mode_) {
    case EncoderMode::Symbolic:
      sgd_update(object_row(o), enc_grad, lr);
      break;
    case EncoderMode::Projection: {
      auto f = features(o);
      auto p = projection();
      for (std::size_t r = 0; r < feature_dim_; ++r) {
        const double fr = lr * f[r];
        if (fr == 0.0) continue;
        double* prow = p.data() + r * dim_;
        for (std::size_t k = 0; k < dim_; ++k) prow[k] -= fr * enc_grad[k];
      }
      break;
    }
    case EncoderMode::Frozen:
      break;
  }
}

// ---- persistence ----
//
// Layout (little-endian):
//   char[4]  magic "XSLM"
//   u32      version (1)
//   u32      encoder mode
//   u64      dim, num_words, num_objects, feature_dim, seed, num_params
//   f64[num_params]                 trainable parameters
//   f64[num_objects * feature_dim]  fixed instance features

namespace {

constexpr char kMagic[4] = {'X', 'S', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated model file");
  return v;
}

void put_doubles(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

void get_doubles(std::istream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw DataError("truncated model file");
}

}  // namespace

void Model::save(std::ostream& out) const {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(mode_));
  put<std::uint64_t>(out, dim_);
  put<std::uint64_t>(out, n_words_);
  put<std::uint64_t>(out, n_objects_);
  put<std::uint64_t>(out, feature_dim_);
  put<std::uint64_t>(out, seed_);
  put<std::uint64_t>(out, params_.size());
  put_doubles(out, params_);
  put_doubles(out, features_);
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  save(out);
  if (!out) throw DataError("write failed for " + path.string());
}

Model Model::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a model file");
  if (get<std::uint32_t>(in) != kVersion) throw DataError("unsupported model file version");
  Model m;
  const auto mode = get<std::uint32_t>(in);
  if (mode > 2) throw DataError("unknown encoder mode in model file");
  m.mode_ = static_cast<EncoderMode>(mode);
  m.dim_ = get<std::uint64_t>(in);
  m.n_words_ = get<std::uint64_t>(in);
  m.n_objects_ = get<std::uint64_t>(in);
  m.feature_dim_ = get<std::uint64_t>(in);
  m.seed_ = get<std::uint64_t>(in);
  const auto n_params = get<std::uint64_t>(in);
  std::size_t expected = m.n_words_ * m.dim_;
  if (m.mode_ == EncoderMode::Symbolic) expected += m.n_objects_ * m.dim_;
  if (m.mode_ == EncoderMode::Projection) expected += m.feature_dim_ * m.dim_;
  if (n_params != expected) throw DataError("model file parameter count does not match header");
  m.params_.resize(n_params);
  get_doubles(in, m.params_);
  m.features_.resize(m.n_objects_ * m.feature_dim_);
  get_doubles(in, m.features_);
  return m;
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return load(in);
}

// ---- construction / scoring ----

Model init_model(const Corpus& corpus, std::size_t dim, double init_range, std::uint64_t seed,
                 EncoderMode visual_mode) {
  if (corpus.vocab.size() == 0) throw ConfigError("cannot initialise a model on an empty vocabulary");
  if (init_range <= 0.0) throw ConfigError("init_range must be positive");
  Model m;
  m.seed_ = seed;
  m.n_words_ = corpus.vocab.size();
  m.n_objects_ = corpus.inventory.size();
  if (corpus.inventory.has_features()) {
    if (visual_mode == EncoderMode::Symbolic)
      throw ConfigError("visual corpora need Projection or Frozen encoding");
    m.mode_ = visual_mode;
    m.feature_dim_ = corpus.inventory.feature_dim();
    if (m.mode_ == EncoderMode::Frozen) dim = m.feature_dim_;
    m.features_.reserve(m.n_objects_ * m.feature_dim_);
    for (std::size_t o = 0; o < m.n_objects_; ++o) {
      auto f = corpus.inventory.features(object_id(o));
      m.features_.insert(m.features_.end(), f.begin(), f.end());
    }
  }
  if (dim == 0) throw ConfigError("dim must be positive");
  m.dim_ = dim;

  std::size_t n = m.n_words_ * dim;
  if (m.mode_ == EncoderMode::Symbolic) n += m.n_objects_ * dim;
  if (m.mode_ == EncoderMode::Projection) n += m.feature_dim_ * dim;
  m.params_.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-init_range, init_range);
  for (auto& v : m.params_) v = u(rng);
  return m;
}

double similarity(const Model& model, WordId w, ObjectId o) {
  const auto enc = model.encode_object(o);
  return cosine(model.word(w), enc);
}

namespace {

// Unit-normalised rows; zero rows are reported as a NumericError.
std::vector<double> normalized_rows(std::vector<double> rows, std::size_t dim, const char* what) {
  const std::size_t n = dim ? rows.size() / dim : 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> r(rows.data() + i * dim, dim);
    const double len = norm(r);
    if (len == 0.0) throw NumericError(std::string("zero-norm ") + what + " encoding at row " + std::to_string(i));
    for (auto& v : r) v /= len;
  }
  return rows;
}

std::vector<double> word_rows(const Model& m) {
  auto all = m.parameters();
  return std::vector<double>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m.num_words() * m.dim()));
}

void fill_entry(SimilarityMatrix& out, const std::vector<double>& words,
                const std::vector<double>& objects, std::size_t dim, std::size_t w, std::size_t c) {
  const double* a = words.data() + w * dim;
  const double* b = objects.data() + c * dim;
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) s += a[k] * b[k];
  out(w, c) = std::clamp(s, -1.0, 1.0);
}

}  // namespace

SimilarityMatrix similarity_matrix(const Model& model) {
  const auto dim = model.dim();
  const auto words = normalized_rows(word_rows(model), dim, "word");
  const auto objects = normalized_rows(model.encode_all_objects(), dim, "object");
  SimilarityMatrix out(model.num_words(), model.num_objects());
  const auto nw = static_cast<std::ptrdiff_t>(model.num_words());
  const auto no = model.num_objects();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t w = 0; w < nw; ++w)
    for (std::size_t c = 0; c < no; ++c) fill_entry(out, words, objects, dim, static_cast<std::size_t>(w), c);
  return out;
}

SimilarityMatrix similarity_matrix_serial(const Model& model) {
  const auto dim = model.dim();
  const auto words = normalized_rows(word_rows(model), dim, "word");
  const auto objects = normalized_rows(model.encode_all_objects(), dim, "object");
  SimilarityMatrix out(model.num_words(), model.num_objects());
  for (std::size_t w = 0; w < model.num_words(); ++w)
    for (std::size_t c = 0; c < model.num_objects(); ++c) fill_entry(out, words, objects, dim, w, c);
  return out;
}

SimilarityMatrix similarity_columns(const Model& model, std::span<const ObjectId> objects) {
  const auto dim = model.dim();
  const auto words = normalized_rows(word_rows(model), dim, "word");
  std::vector<double> enc(objects.size() * dim);
  const auto ncols = static_cast<std::ptrdiff_t>(objects.size());
  for (auto o : objects)
    if (o.index() >= model.num_objects()) throw ConfigError("unknown object ID " + std::to_string(o.value));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < ncols; ++c) {
    const auto e = model.encode_object(objects[static_cast<std::size_t>(c)]);
    std::copy(e.begin(), e.end(), enc.begin() + c * static_cast<std::ptrdiff_t>(dim));
  }
  const auto ounit = normalized_rows(std::move(enc), dim, "object");
  SimilarityMatrix out(model.num_words(), objects.size());
  const auto nw = static_cast<std::ptrdiff_t>(model.num_words());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t w = 0; w < nw; ++w)
    for (std::size_t c = 0; c < objects.size(); ++c)
      fill_entry(out, words, ounit, dim, static_cast<std::size_t>(w), c);
  return out;
}

}  // namespace xsl
