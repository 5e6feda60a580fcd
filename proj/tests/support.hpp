#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xsl/corpus.hpp"
#include "xsl/model.hpp"
#include "xsl/selection.hpp"

namespace xsl::test {

inline Corpus symbolic(const std::string& text) {
  std::istringstream in(text);
  return parse_symbolic(in);
}

// n scenes over a one-to-one lexicon wN=ON, each with two objects.
inline Corpus one_to_one(std::size_t n) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += "#gold w" + std::to_string(i) + "=O" + std::to_string(i) + "\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = (i + 1) % n;
    text += "w" + std::to_string(i) + " w" + std::to_string(j) + " | O" + std::to_string(i) + " O" +
            std::to_string(j) + "\n";
  }
  return symbolic(text);
}

// Visual corpus with `n` instances over `labels` categories and random features.
inline Corpus small_visual(std::size_t n, std::size_t labels, std::size_t fdim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Corpus c;
  for (std::size_t l = 0; l < labels; ++l) c.vocab.add("w" + std::to_string(l));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(fdim);
    for (auto& v : f) v = g(rng);
    c.inventory.add("i" + std::to_string(i), "w" + std::to_string(i % labels), f);
  }
  for (std::size_t i = 0; i + 1 < n; i += 2)
    c.scenes.push_back({{word_id(i % labels), word_id((i + 1) % labels)}, {object_id(i), object_id(i + 1)}});
  c.recount();
  return c;
}

// Central differences of f with respect to every entry of x.
inline std::vector<double> finite_diff(std::span<double> x, const std::function<double()>& f, double h = 1e-5) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
  return std::sqrt(diff) / scale;
}

// Largest |sum_w p(w|o) - 1| over every object of the model.
inline double max_speaker_mass_error(const Model& model) {
  const auto sims = similarity_matrix(model);
  double worst = 0.0;
  for (std::size_t o = 0; o < sims.cols(); ++o) {
    double total = 0.0;
    for (std::size_t w = 0; w < sims.rows(); ++w)
      total += speaker_prob(sims, word_id(w), object_id(o));
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

}  // namespace xsl::test

namespace xsl::test {

// Two words {book, dax} and two objects {BOOK, DAX} with
//   cos(book, BOOK) = 0.9, cos(dax, BOOK) = 0.5,
//   cos(book, DAX)  = 0.1, cos(dax, DAX)  = 0.5.
// DAX occurs in no scene.
inline Model book_dax_model() {
  const auto c = symbolic("#vocab book dax\n#objects BOOK DAX\nbook | BOOK\n");
  auto m = init_model(c, 4, 0.1, 0);
  const auto put = [](std::span<double> row, std::initializer_list<double> v) { std::copy(v.begin(), v.end(), row.begin()); };
  put(m.object_row(object_id(0)), {1, 0, 0, 0});
  put(m.object_row(object_id(1)), {0, 1, 0, 0});
  put(m.word(word_id(0)), {0.9, 0.1, std::sqrt(0.18), 0});
  put(m.word(word_id(1)), {0.5, 0.5, 0, std::sqrt(0.5)});
  return m;
}

inline SimilarityMatrix book_dax_matrix() {
  SimilarityMatrix s(2, 2);
  s(0, 0) = 0.9;
  s(1, 0) = 0.5;
  s(0, 1) = 0.1;
  s(1, 1) = 0.5;
  return s;
}

}  // namespace xsl::test
