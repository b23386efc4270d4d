#include "hqf/jets.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "hqf/error.hpp"
#include "hqf/linalg.hpp"

namespace hqf {

namespace {

constexpr int kReach = 3;

struct FitOperator {
  std::vector<std::array<int, 3>> offsets;
  Eigen::MatrixXd p;  // 10 x offsets: 2-jet coefficients in grid units
};

// Monomial exponents of total degree <= d; the first ten follow the 2-jet
// layout {1; x, y, z; xx, xy, xz, yy, yz, zz}.
std::vector<std::array<int, 3>> exponents(int d) {
  std::vector<std::array<int, 3>> e{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0},
                                    {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}};
  for (int t = 3; t <= d; ++t) {
    for (int i = t; i >= 0; --i) {
      for (int j = t - i; j >= 0; --j) e.push_back({i, j, t - i - j});
    }
  }
  return e;
}

FitOperator build_fit(const std::vector<std::array<int, 3>>& candidates, int degree) {
  FitOperator f;
  std::vector<double> w;
  for (const auto& o : candidates) {
    const double r2 = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) / double(kReach * kReach);
    if (r2 > 1.0 + 1e-12) continue;
    const double b = 1.0 - r2;
    const double wt = b * b * b;
    if (wt <= 0.0) continue;
    f.offsets.push_back(o);
    w.push_back(wt);
  }
  const auto ex = exponents(degree);
  const int m = static_cast<int>(f.offsets.size());
  const int nc = static_cast<int>(ex.size());
  Eigen::MatrixXd a(m, nc);
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < nc; ++c) {
      double v = std::sqrt(w[static_cast<std::size_t>(i)]);
      for (int ax = 0; ax < 3; ++ax) v *= std::pow(f.offsets[static_cast<std::size_t>(i)][ax], ex[static_cast<std::size_t>(c)][ax]);
      a(i, c) = v;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < nc) throw PreconditionError("extract_jet: insufficient neighbors for the polynomial fit");
  Eigen::MatrixXd ws = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) ws(i, i) = std::sqrt(w[static_cast<std::size_t>(i)]);
  f.p = qr.solve(ws).topRows(10);
  // Taylor factors: the fit uses xx, yy, zz; the jet stores second derivatives.
  f.p.row(4) *= 2.0;
  f.p.row(7) *= 2.0;
  f.p.row(9) *= 2.0;
  return f;
}

const FitOperator& full_fit(int degree) {
  static const std::array<FitOperator, 3> ops = [] {
    std::vector<std::array<int, 3>> c;
    for (int k = -kReach; k <= kReach; ++k)
      for (int j = -kReach; j <= kReach; ++j)
        for (int i = -kReach; i <= kReach; ++i) c.push_back({i, j, k});
    return std::array<FitOperator, 3>{build_fit(c, 2), build_fit(c, 3), build_fit(c, 4)};
  }();
  return ops[static_cast<std::size_t>(degree - 2)];
}

Jet2 to_jet(const Eigen::Matrix<double, 10, 1>& c, const std::array<double, 3>& h) {
  Jet2 j;
  j[0] = c[0];
  for (int a = 0; a < 3; ++a) j[1 + a] = c[1 + a] / h[a];
  j[4] = c[4] / (h[0] * h[0]);
  j[5] = c[5] / (h[0] * h[1]);
  j[6] = c[6] / (h[0] * h[2]);
  j[7] = c[7] / (h[1] * h[1]);
  j[8] = c[8] / (h[1] * h[2]);
  j[9] = c[9] / (h[2] * h[2]);
  return j;
}

}  // namespace

Jet2 extract_jet(const ScalarField& phi, NodeId a, int fit_degree) {
  if (fit_degree < 2 || fit_degree > 4) throw PreconditionError("extract_jet: fit degree must be 2, 3 or 4");
  const auto& dom = *phi.domain();
  if (a >= dom.node_count() || dom.depth(a) < 2) {
    throw PreconditionError("extract_jet: node must lie at least 2 layers inside the domain");
  }
  const Index3 c = dom.index(a);
  auto node_at = [&](const std::array<int, 3>& o, NodeId& out) {
    const int i = c.i + o[0], j = c.j + o[1], k = c.k + o[2];
    if (!dom.in_grid(i, j, k)) return false;
    out = dom.id(i, j, k);
    return dom.in_domain(out);
  };

  const FitOperator* fit = &full_fit(fit_degree);
  FitOperator local;
  if (dom.depth(a) < kReach) {
    std::vector<std::array<int, 3>> cand;
    NodeId n;
    for (const auto& o : full_fit(fit_degree).offsets) {
      if (node_at(o, n)) cand.push_back(o);
    }
    if (cand.size() != full_fit(fit_degree).offsets.size()) {
      local = build_fit(cand, fit_degree);
      fit = &local;
    }
  }
  Eigen::VectorXd v(fit->offsets.size());
  for (std::size_t i = 0; i < fit->offsets.size(); ++i) {
    NodeId n = 0;
    node_at(fit->offsets[i], n);
    v[static_cast<Eigen::Index>(i)] = phi[n];
  }
  const Eigen::Matrix<double, 10, 1> coef = fit->p * v;
  return to_jet(coef, dom.spacing());
}

LaplaceJet laplace_jet(const MetricField& g, NodeId a) {
  const auto& dom = *g.domain();
  if (a >= dom.node_count() || !dom.is_interior(a)) {
    throw PreconditionError("laplace_jet: node must be interior");
  }
  const auto& d = dom.dims();
  const std::array<std::size_t, 3> st{1, static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[0]) * d[1]};
  const auto& h = dom.spacing();
  LaplaceJet l = LaplaceJet::Zero();
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const NodeId p = a + st[i], m = a - st[i];
      s += (g.sqrt_det(p) * g.inverse(p)(i, k) - g.sqrt_det(m) * g.inverse(m)(i, k)) / (2.0 * h[i]);
    }
    l[1 + k] = s / g.sqrt_det(a);
  }
  const Mat3& gi = g.inverse(a);
  l[4] = gi(0, 0);
  l[5] = 2.0 * gi(0, 1);
  l[6] = 2.0 * gi(0, 2);
  l[7] = gi(1, 1);
  l[8] = 2.0 * gi(1, 2);
  l[9] = gi(2, 2);
  return l;
}

JetRankStudy jet_rank_study(const std::vector<ScalarField>& harmonics, NodeId a, const Jet2& reference,
                            double threshold) {
  if (harmonics.empty()) throw PreconditionError("jet_rank_study: no harmonic samples");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(harmonics.size()), 10);
  for (std::size_t i = 0; i < harmonics.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = extract_jet(harmonics[i], a);
  const auto nd = linalg::smallest_right_singular(m);
  JetRankStudy out;
  out.sigma = nd.sigma;
  out.rank = linalg::numerical_rank(nd.sigma, threshold);
  out.null_vector = nd.vector;
  if (out.null_vector[kJetG11Slot] < 0.0) out.null_vector = -out.null_vector;
  const double rn = reference.norm();
  out.cosine = rn > 0.0 ? std::abs(out.null_vector.dot(reference)) / (out.null_vector.norm() * rn) : 0.0;
  return out;
}

JetControlResult jet_control(const MetricField& g, NodeId a, const Jet2& s, const ControlBasis& basis,
                             const std::vector<ScalarField>& harmonics) {
  if (basis.size() < 20) throw PreconditionError("jet_control: basis needs at least 20 controls");
  if (harmonics.size() != basis.size()) throw PreconditionError("jet_control: harmonics do not match the basis");
  const LaplaceJet lam = laplace_jet(g, a);
  if (std::abs(s.dot(lam)) > 1e-8 * s.norm() * lam.norm()) {
    throw PreconditionError("jet_control: target jet is not orthogonal to the Laplace jet (unreachable)");
  }
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd a_mat(10, m);
  for (Eigen::Index i = 0; i < m; ++i) a_mat.col(i) = extract_jet(harmonics[static_cast<std::size_t>(i)], a);
  JetControlResult out;
  out.coefficients = linalg::min_norm_solve(a_mat, s);
  out.achieved = a_mat * out.coefficients;
  const double sn = s.norm();
  out.relative_defect = sn > 0.0 ? (out.achieved - s).norm() / sn : (out.achieved - s).norm();
  out.control = BoundaryControl(g.domain());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& f = basis.controls[static_cast<std::size_t>(i)];
    for (std::size_t q = 0; q < f.size(); ++q) out.control[q] += out.coefficients[i] * f[q];
  }
  return out;
}

}  // namespace hqf
