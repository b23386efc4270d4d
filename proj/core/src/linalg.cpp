#include "hqf/linalg.hpp"

namespace hqf::linalg {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return {};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues();
}

int numerical_rank(const Eigen::VectorXd& sigma, double ratio) {
  if (sigma.size() == 0 || sigma[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > ratio * sigma[0]) ++r;
  }
  return r;
}

Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double cut) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(a.cols());
  if (s.size() == 0 || s[0] == 0.0) return x;
  const Eigen::VectorXd utb = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut * s[0]) x += svd.matrixV().col(i) * (utb[i] / s[i]);
  }
  return x;
}

NullDirection smallest_right_singular(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  NullDirection out;
  out.sigma = svd.singularValues();
  const Eigen::Index n = a.cols();
  out.vector = svd.matrixV().col(n - 1);
  // With fewer rows than columns the trailing singular values are zero.
  const double smin = a.rows() >= n ? out.sigma[n - 1] : 0.0;
  out.ratio = out.sigma.size() > 0 && out.sigma[0] > 0.0 ? smin / out.sigma[0] : 0.0;
  return out;
}

}  // namespace hqf::linalg
