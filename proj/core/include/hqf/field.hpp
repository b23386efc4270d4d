#pragma once

#include <functional>
#include <vector>

#include "hqf/grid.hpp"

namespace hqf {

/// Real value per grid node. Values at exterior nodes are carried but never read.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(DomainPtr dom, double fill = 0.0)
      : dom_(std::move(dom)), v_(dom_->node_count(), fill) {}
  ScalarField(DomainPtr dom, std::vector<double> values);

  /// Samples f at interior and boundary nodes (exterior nodes stay 0).
  static ScalarField sample(DomainPtr dom, const std::function<double(const Vec3&)>& f);

  const DomainPtr& domain() const { return dom_; }
  double operator[](NodeId n) const { return v_[n]; }
  double& operator[](NodeId n) { return v_[n]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }
  std::size_t size() const { return v_.size(); }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);

 private:
  DomainPtr dom_;
  std::vector<double> v_;
};

/// Three coordinate components (x1, x2, x3) per node.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(DomainPtr dom) : dom_(std::move(dom)), v_(dom_->node_count(), Vec3::Zero()) {}
  VectorField(DomainPtr dom, std::vector<Vec3> values);

  static VectorField sample(DomainPtr dom, const std::function<Vec3(const Vec3&)>& f);
  static VectorField constant(DomainPtr dom, const Vec3& c);

  const DomainPtr& domain() const { return dom_; }
  const Vec3& operator[](NodeId n) const { return v_[n]; }
  Vec3& operator[](NodeId n) { return v_[n]; }
  const std::vector<Vec3>& values() const { return v_; }
  std::size_t size() const { return v_.size(); }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s);

 private:
  DomainPtr dom_;
  std::vector<Vec3> v_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);

/// Throws PreconditionError when two fields live on different domains.
void require_same_domain(const DomainPtr& a, const DomainPtr& b, const char* what);

/// max |f| over nodes with depth >= min_depth (min_depth 0 includes the boundary).
double sup_at_depth(const ScalarField& f, int min_depth);
/// max Euclidean coordinate norm of u over nodes with depth >= min_depth.
double sup_at_depth(const VectorField& u, int min_depth);

}  // namespace hqf
