#pragma once

#include <Eigen/Dense>

namespace hqf::linalg {

/// Singular values in nonincreasing order.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

/// Number of singular values above `ratio` * sigma_1.
int numerical_rank(const Eigen::VectorXd& sigma, double ratio);

/// Minimum-norm least-squares solution by truncated SVD; singular values
/// below `cut` * sigma_1 are discarded.
Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double cut = 1e-8);

/// Right singular vector of the smallest singular value, with the singular
/// value ratio sigma_min / sigma_max.
struct NullDirection {
  Eigen::VectorXd vector;
  double ratio = 0.0;
  Eigen::VectorXd sigma;
};
NullDirection smallest_right_singular(const Eigen::MatrixXd& a);

}  // namespace hqf::linalg
