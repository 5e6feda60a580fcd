#pragma once

#include <span>
#include <vector>

namespace xsl {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Cosine of the angle between u and v, clamped to [-1, 1].
/// Throws NumericError if either vector has zero norm.
double cosine(std::span<const double> u, std::span<const double> v);

struct CosineGrad {
  Vec du;
  Vec dv;
};

/// Partial derivatives of cosine(u, v):
///   d/du = v / (|u||v|) - cos(u, v) * u / |u|^2
/// and symmetrically for v. Uses the unclamped cosine.
CosineGrad cosine_grad(std::span<const double> u, std::span<const double> v);

/// params - lr * grad.
Vec sgd_step(std::span<const double> params, std::span<const double> grad, double lr);

/// In-place params -= lr * grad.
void sgd_update(std::span<double> params, std::span<const double> grad, double lr);

}  // namespace xsl
