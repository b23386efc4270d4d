#pragma once

#include <functional>

#include "hqf/metric.hpp"

namespace hqf {

/// Smooth exact solution with its gradient, and the Laplace-Beltrami image
/// under a pointwise metric.
struct Manufactured {
  std::function<double(const Vec3&)> u;
  std::function<Vec3(const Vec3&)> grad_u;  // coordinate partials
  MetricField::Sampler metric;

  /// g^{-1/2} d_i(sqrt(g) g^{ij} d_j u) at x. The outer derivative uses a
  /// fourth-order difference with step 1e-3, accurate to about 1e-10.
  double laplacian(const Vec3& x) const;
};

/// u = sin(pi x1) sin(pi x2) sin(pi x3) + x1 x2 + 0.5 x3^2 under `metric`.
Manufactured default_manufactured(MetricField::Sampler metric);

}  // namespace hqf
