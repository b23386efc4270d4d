#include "hqf/metric.hpp"

#include <cmath>
#include <numbers>

#include "hqf/error.hpp"

namespace hqf {

void check_spd(const Mat3& m, NodeId node) {
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double m1 = m(0, 0);
  const double m2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double m3 = m.determinant();
  if (!(asym <= 1e-12 * m.cwiseAbs().maxCoeff()) || !(m1 > 0.0) || !(m2 > 0.0) || !(m3 > 0.0)) {
    throw NumericalError("metric is not symmetric positive definite at node " + std::to_string(node));
  }
}

MetricField::MetricField(DomainPtr dom, const Sampler& sampler) : dom_(std::move(dom)) {
  g_.resize(dom_->node_count());
  for (NodeId n = 0; n < g_.size(); ++n) g_[n] = sampler(dom_->position(n));
  finish();
}

MetricField::MetricField(DomainPtr dom, std::vector<Mat3> g) : dom_(std::move(dom)), g_(std::move(g)) {
  if (g_.size() != dom_->node_count()) throw PreconditionError("metric sample count does not match the domain");
  finish();
}

void MetricField::finish() {
  ginv_.resize(g_.size());
  sqrt_det_.resize(g_.size());
  constant_ = true;
  diagonal_ = true;
  for (NodeId n = 0; n < g_.size(); ++n) {
    check_spd(g_[n], n);
    ginv_[n] = g_[n].inverse();
    sqrt_det_[n] = std::sqrt(g_[n].determinant());
    if (g_[n] != g_[0]) constant_ = false;
    if (g_[n](0, 1) != 0.0 || g_[n](0, 2) != 0.0 || g_[n](1, 2) != 0.0) diagonal_ = false;
  }
}

MetricField MetricField::scaled(const std::vector<double>& c) const {
  if (c.size() != g_.size()) throw PreconditionError("scale field does not match the domain");
  std::vector<Mat3> out(g_.size());
  for (NodeId n = 0; n < g_.size(); ++n) {
    if (!(c[n] > 0.0)) throw PreconditionError("conformal factor must be positive (node " + std::to_string(n) + ")");
    out[n] = c[n] * g_[n];
  }
  return MetricField(dom_, std::move(out));
}

namespace metrics {

using std::numbers::pi;

MetricField flat(DomainPtr dom) {
  return MetricField(std::move(dom), [](const Vec3&) { return Mat3::Identity(); });
}

MetricField diagonal(DomainPtr dom, const Vec3& d) {
  const Mat3 m = d.asDiagonal();
  return MetricField(std::move(dom), [m](const Vec3&) { return m; });
}

Mat3 conformal_sine_at(const Vec3& x, double amplitude) {
  return (1.0 + amplitude * std::sin(pi * x[0]) * std::sin(pi * x[1])) * Mat3::Identity();
}

Mat3 generic_smooth_at(const Vec3& x) {
  const double s = std::sin(pi * x[0]) * std::sin(pi * x[1]) * std::cos(0.5 * pi * x[2]);
  Mat3 m = Mat3::Zero();
  m.diagonal() << 1.0, 1.2, 0.9;
  m *= 1.0 + 0.3 * s;
  const double o12 = 0.08 * std::sin(pi * x[2]);
  const double o13 = 0.05 * std::cos(pi * x[1]);
  const double o23 = 0.06 * std::sin(pi * (x[0] + x[1]));
  m(0, 1) = m(1, 0) = o12;
  m(0, 2) = m(2, 0) = o13;
  m(1, 2) = m(2, 1) = o23;
  return m;
}

MetricField conformal_sine(DomainPtr dom, double amplitude) {
  return MetricField(std::move(dom), [amplitude](const Vec3& x) { return conformal_sine_at(x, amplitude); });
}

MetricField generic_smooth(DomainPtr dom) {
  return MetricField(std::move(dom), [](const Vec3& x) { return generic_smooth_at(x); });
}

MetricField conformal(DomainPtr dom, const std::function<double(const Vec3&)>& c) {
  return MetricField(std::move(dom), [c](const Vec3& x) -> Mat3 { return c(x) * Mat3::Identity(); });
}

MetricField::Sampler sampler_by_name(const std::string& name, const Vec3& diag) {
  if (name == "flat") return [](const Vec3&) -> Mat3 { return Mat3::Identity(); };
  if (name == "diag") {
    const Mat3 m = diag.asDiagonal();
    return [m](const Vec3&) { return m; };
  }
  if (name == "conformal-sine") return [](const Vec3& x) { return conformal_sine_at(x); };
  if (name == "generic-smooth") return [](const Vec3& x) { return generic_smooth_at(x); };
  throw PreconditionError("unknown metric preset '" + name + "'");
}

MetricField by_name(DomainPtr dom, const std::string& name, const Vec3& diag) {
  return MetricField(std::move(dom), sampler_by_name(name, diag));
}

}  // namespace metrics
}  // namespace hqf
