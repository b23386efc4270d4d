#pragma once

#include <array>
#include <filesystem>

#include "hqf/field.hpp"
#include "hqf/metric.hpp"

namespace hqf {

/// Geometric quaternion {alpha, u} in R + T_x, tied to the node whose metric
/// defines its products.
struct Quaternion {
  double alpha = 0.0;
  Vec3 u = Vec3::Zero();
  NodeId node = 0;
};

/// {a a' - g(u,u'), a u' + a' u + u ^ u'}
Quaternion qmul(const Quaternion& p, const Quaternion& q, const MetricField& g);

/// sqrt(alpha^2 + g(u,u))
double qnorm(const Quaternion& p, const MetricField& g);

/// Coefficients (1, i, j, k) of the image in the standard quaternions for a
/// positively oriented g-orthonormal frame at p.node. The frame is checked to
/// 1e-10 and a non-orthonormal or left-handed frame raises PreconditionError.
std::array<double, 4> to_standard(const Quaternion& p, const std::array<Vec3, 3>& frame, const MetricField& g);

/// Product in the standard quaternion algebra (coefficients on 1, i, j, k).
std::array<double, 4> hamilton_product(const std::array<double, 4>& a, const std::array<double, 4>& b);

/// Continuous quaternion field p = {alpha, u} on one grid.
class QuaternionField {
 public:
  QuaternionField() = default;
  QuaternionField(ScalarField alpha, VectorField u);
  explicit QuaternionField(DomainPtr dom) : alpha_(dom), u_(dom) {}

  const DomainPtr& domain() const { return alpha_.domain(); }
  const ScalarField& scalar() const { return alpha_; }
  const VectorField& vector() const { return u_; }
  ScalarField& scalar() { return alpha_; }
  VectorField& vector() { return u_; }

  Quaternion at(NodeId n) const { return {alpha_[n], u_[n], n}; }
  void set(NodeId n, const Quaternion& q) {
    alpha_[n] = q.alpha;
    u_[n] = q.u;
  }

  QuaternionField& operator+=(const QuaternionField& o);
  QuaternionField& operator*=(double s);

 private:
  ScalarField alpha_;
  VectorField u_;
};

/// Pointwise product.
QuaternionField field_mul(const QuaternionField& p, const QuaternionField& q, const MetricField& g);

/// {alpha, 0}
QuaternionField scalar_embed(const ScalarField& alpha);

/// max over interior and boundary nodes of |p(x)|.
double sup_norm(const QuaternionField& p, const MetricField& g);

struct QResidual {
  double curl_defect = 0.0;  // ||grad alpha - rot u||_inf
  double div_defect = 0.0;   // ||div u||_inf
};

/// Membership defects for Q(Omega), measured on interior nodes at depth >=
/// min_depth (at least 2, where the composed stencils are defined).
QResidual q_residual(const QuaternionField& p, const MetricField& g, int min_depth = 2);

/// Depth of a collar of fixed physical width: an eighth of the smallest
/// node count, at least 2. Residuals that inherit edge singularities of
/// Dirichlet solves converge at O(h^2) only outside such a collar.
int collar_depth(const GridDomain& dom);

namespace io {
/// 4-component field file, scalar part first.
void write_quaternion(const std::filesystem::path& stem, const QuaternionField& p, const std::string& extra_json = "");
QuaternionField read_quaternion(const std::filesystem::path& stem, const DomainPtr& dom);
}  // namespace io

}  // namespace hqf
