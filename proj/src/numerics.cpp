#include "xsl/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "xsl/error.hpp"

namespace xsl {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

void check_shapes(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw NumericError("cosine: length mismatch (" + std::to_string(u.size()) + " vs " +
                       std::to_string(v.size()) + ")");
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  check_shapes(u, v);
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine: zero-norm vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

CosineGrad cosine_grad(std::span<const double> u, std::span<const double> v) {
  check_shapes(u, v);
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine_grad: zero-norm vector");
  const double inv = 1.0 / (nu * nv);
  const double c = dot(u, v) * inv;
  const double cu = c / (nu * nu);
  const double cv = c / (nv * nv);
  CosineGrad g{Vec(u.size()), Vec(v.size())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    g.du[i] = v[i] * inv - cu * u[i];
    g.dv[i] = u[i] * inv - cv * v[i];
  }
  return g;
}

Vec sgd_step(std::span<const double> params, std::span<const double> grad, double lr) {
  Vec out(params.begin(), params.end());
  sgd_update(out, grad, lr);
  return out;
}

void sgd_update(std::span<double> params, std::span<const double> grad, double lr) {
  assert(params.size() == grad.size());
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
}

}  // namespace xsl
