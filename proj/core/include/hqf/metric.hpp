#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hqf/grid.hpp"

namespace hqf {

/// Riemannian metric g_ij sampled at every grid node, with cached inverse
/// and volume density sqrt(det g).
class MetricField {
 public:
  using Sampler = std::function<Mat3(const Vec3&)>;

  /// Samples `sampler` at every node; throws NumericalError naming the first
  /// node where the sample is not symmetric positive definite.
  MetricField(DomainPtr dom, const Sampler& sampler);
  /// From explicit per-node matrices (node_count entries).
  MetricField(DomainPtr dom, std::vector<Mat3> g);

  const DomainPtr& domain() const { return dom_; }
  const Mat3& at(NodeId n) const { return g_[n]; }
  const Mat3& inverse(NodeId n) const { return ginv_[n]; }
  double sqrt_det(NodeId n) const { return sqrt_det_[n]; }

  /// True when the metric is the same matrix at every node.
  bool is_constant() const { return constant_; }
  /// True when all off-diagonal entries vanish.
  bool is_diagonal() const { return diagonal_; }

  /// Returns c * g.
  MetricField scaled(const std::vector<double>& c) const;

 private:
  void finish();

  DomainPtr dom_;
  std::vector<Mat3> g_;
  std::vector<Mat3> ginv_;
  std::vector<double> sqrt_det_;
  bool constant_ = false;
  bool diagonal_ = false;
};

/// Throws NumericalError unless m is symmetric with positive leading minors.
void check_spd(const Mat3& m, NodeId node);

namespace metrics {

MetricField flat(DomainPtr dom);
MetricField diagonal(DomainPtr dom, const Vec3& d);
/// (1 + amplitude sin(pi x1) sin(pi x2)) I on the box coordinates.
MetricField conformal_sine(DomainPtr dom, double amplitude = 0.3);
/// (1 + 0.3 s(x)) diag(1, 1.2, 0.9) plus small smooth off-diagonal terms.
MetricField generic_smooth(DomainPtr dom);
/// c(x) * I for a positive scalar function c.
MetricField conformal(DomainPtr dom, const std::function<double(const Vec3&)>& c);

/// Pointwise formulas behind the presets (tests use them as oracles).
Mat3 conformal_sine_at(const Vec3& x, double amplitude = 0.3);
Mat3 generic_smooth_at(const Vec3& x);

/// Pointwise sampler of a preset.
MetricField::Sampler sampler_by_name(const std::string& name, const Vec3& diag = Vec3(1, 1, 1));

/// Builds a preset by name: flat | diag | conformal-sine | generic-smooth.
MetricField by_name(DomainPtr dom, const std::string& name, const Vec3& diag = Vec3(1, 1, 1));

}  // namespace metrics
}  // namespace hqf
