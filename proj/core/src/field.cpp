#include "hqf/field.hpp"

#include <algorithm>
#include <cmath>

#include "hqf/error.hpp"

namespace hqf {

void require_same_domain(const DomainPtr& a, const DomainPtr& b, const char* what) {
  if (!a || !b || a.get() != b.get()) {
    throw PreconditionError(std::string(what) + ": fields are defined on different domains");
  }
}

ScalarField::ScalarField(DomainPtr dom, std::vector<double> values) : dom_(std::move(dom)), v_(std::move(values)) {
  if (v_.size() != dom_->node_count()) throw PreconditionError("scalar field size does not match domain");
}

ScalarField ScalarField::sample(DomainPtr dom, const std::function<double(const Vec3&)>& f) {
  ScalarField out(dom);
  for (NodeId n = 0; n < dom->node_count(); ++n) {
    if (dom->in_domain(n)) out[n] = f(dom->position(n));
  }
  return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_domain(dom_, o.dom_, "ScalarField +=");
  for (std::size_t n = 0; n < v_.size(); ++n) v_[n] += o.v_[n];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_domain(dom_, o.dom_, "ScalarField -=");
  for (std::size_t n = 0; n < v_.size(); ++n) v_[n] -= o.v_[n];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

VectorField::VectorField(DomainPtr dom, std::vector<Vec3> values) : dom_(std::move(dom)), v_(std::move(values)) {
  if (v_.size() != dom_->node_count()) throw PreconditionError("vector field size does not match domain");
}

VectorField VectorField::sample(DomainPtr dom, const std::function<Vec3(const Vec3&)>& f) {
  VectorField out(dom);
  for (NodeId n = 0; n < dom->node_count(); ++n) {
    if (dom->in_domain(n)) out[n] = f(dom->position(n));
  }
  return out;
}

VectorField VectorField::constant(DomainPtr dom, const Vec3& c) {
  return sample(std::move(dom), [c](const Vec3&) { return c; });
}

VectorField& VectorField::operator+=(const VectorField& o) {
  require_same_domain(dom_, o.dom_, "VectorField +=");
  for (std::size_t n = 0; n < v_.size(); ++n) v_[n] += o.v_[n];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  require_same_domain(dom_, o.dom_, "VectorField -=");
  for (std::size_t n = 0; n < v_.size(); ++n) v_[n] -= o.v_[n];
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  for (auto& x : v_) x *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }
VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

double sup_at_depth(const ScalarField& f, int min_depth) {
  const auto& dom = *f.domain();
  double m = 0.0;
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.depth(n) >= min_depth) m = std::max(m, std::abs(f[n]));
  }
  return m;
}

double sup_at_depth(const VectorField& u, int min_depth) {
  const auto& dom = *u.domain();
  double m = 0.0;
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.depth(n) >= min_depth) m = std::max(m, u[n].norm());
  }
  return m;
}

}  // namespace hqf
