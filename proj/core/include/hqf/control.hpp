#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hqf/controls.hpp"
#include "hqf/elliptic.hpp"
#include "hqf/quaternion.hpp"

namespace hqf {

/// M_A: column m holds {w^{f_m}(a_i), grad w^{f_m}(a_i)} stacked over the
/// points (4 rows per point, scalar first).
struct ControlMatrix {
  std::vector<NodeId> points;
  ControlBasis basis;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd sigma;  // nonincreasing

  int rank(double ratio = 1e-3) const;
  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Builds M_A from precomputed harmonic extensions of the basis.
ControlMatrix ma_matrix(const MetricField& g, const std::vector<NodeId>& points, const ControlBasis& basis,
                        const std::vector<ScalarField>& harmonics);
/// Same, solving the extensions on up to `jobs` threads.
ControlMatrix ma_matrix(const DirichletOperator& op, const std::vector<NodeId>& points, const ControlBasis& basis,
                        int jobs = 1);

struct PointTarget {
  NodeId node = 0;
  double c = 0.0;
  Vec3 k = Vec3::Zero();
};

struct ControlSolution {
  BoundaryControl control;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd target;    // enforced rows only
  Eigen::VectorXd achieved;  // enforced rows only
  double defect = 0.0;       // |achieved - target| / max(|target|, 1)
  double control_norm = 0.0; // sup |f|
  bool full_rank = false;    // rank over the enforced rows equals their count
  bool success = false;      // defect < 1e-2
};

/// Minimum-norm least-squares synthesis (truncated SVD, cut 1e-8 sigma_1).
/// Targets must name the matrix points in order.
ControlSolution solve_control(const ControlMatrix& m, const std::vector<PointTarget>& targets);

/// Synthesis enforcing only the rows flagged in `rows` (size 4N).
ControlSolution solve_control(const ControlMatrix& m, const Eigen::VectorXd& target, const std::vector<bool>& rows);

struct SeparationResult {
  QuaternionField q;
  QResidual residual;          // depth >= 2
  QResidual collar_residual;   // depth >= collar_depth: converges at O(h^2)
  double error_a = 0.0;  // |q(a) - h_a|
  double error_b = 0.0;
  double threshold = 0.0;  // 1e-2 (1 + |h_a| + |h_b|)
  double scalar_defect = 0.0;
  double gradient_defect = 0.0;
  DivCurlResult divcurl;
  bool success = false;
  std::string note;
};

/// Strong separation: q = {w^f, u0 + grad w^h} with w^f(a), w^f(b) the
/// scalar targets, rot u0 = grad w^f, and grad w^h fixing the vector parts.
/// Plain boxes only (the Dirichlet space is trivial there).
SeparationResult separate(const DirichletOperator& op, NodeId a, NodeId b, const Quaternion& h_a,
                          const Quaternion& h_b, const ControlBasis& basis, const std::vector<ScalarField>& harmonics);

/// Discrete integrals of f (d . nu) d(sigma) over the boundary, one per d.
std::vector<double> compatibility_check(const BoundaryControl& f, const std::vector<VectorField>& d_basis,
                                        const MetricField& g);

}  // namespace hqf
