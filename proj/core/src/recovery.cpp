#include "hqf/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "hqf/calculus.hpp"
#include "hqf/error.hpp"
#include "hqf/linalg.hpp"
#include "hqf/parallel.hpp"
#include "hqf/sparse.hpp"

namespace hqf {

namespace {

Mat3 readout(const LaplaceJet& l) {
  Mat3 a;
  a << l[4], 0.5 * l[5], 0.5 * l[6], 0.5 * l[5], l[7], 0.5 * l[8], 0.5 * l[6], 0.5 * l[8], l[9];
  return a;
}

bool is_spd(const Mat3& m) {
  return m(0, 0) > 0.0 && m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) > 0.0 && m.determinant() > 0.0;
}

double frob_dot(const Mat3& a, const Mat3& b) { return (a.array() * b.array()).sum(); }

}  // namespace

LaplaceJetEstimate recover_laplace_jet(const std::vector<ScalarField>& harmonics, NodeId a, int fit_degree) {
  if (harmonics.size() < 15) throw PreconditionError("recover_laplace_jet: at least 15 harmonic samples required");
  const auto& dom = *harmonics.front().domain();
  if (a >= dom.node_count() || dom.depth(a) < 3) {
    throw PreconditionError("recover_laplace_jet: node must lie at least 3 layers inside");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(harmonics.size()), 9);
  for (std::size_t i = 0; i < harmonics.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = extract_jet(harmonics[i], a, fit_degree).tail<9>();
  }
  const auto nd = linalg::smallest_right_singular(m);
  LaplaceJetEstimate out;
  out.sigma = nd.sigma;
  out.residual = nd.ratio;
  if (nd.sigma.size() < 9 || !(nd.sigma[0] > 0.0) || nd.sigma[7] < 1e-6 * nd.sigma[0]) {
    throw NumericalError("recover_laplace_jet: harmonic jets do not span an 8-dimensional space at node " +
                         std::to_string(a));
  }
  if (out.residual > 0.1) {
    throw NumericalError("recover_laplace_jet: residual " + std::to_string(out.residual) + " above 0.1 at node " +
                         std::to_string(a));
  }
  out.jet = LaplaceJet::Zero();
  out.jet.tail<9>() = nd.vector;
  out.jet.normalize();
  if (out.jet[kJetG11Slot] < 0.0) out.jet = -out.jet;
  return out;
}

Mat3 jets_to_metric(const LaplaceJet& lambda) {
  const Mat3 a = readout(lambda);
  if (!is_spd(a)) throw NumericalError("jets_to_metric: second-order slots do not form an SPD matrix");
  const Mat3 g = a.inverse();
  return g / std::cbrt(g.determinant());
}

std::size_t RecoveryResult::slot(NodeId n) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), n);
  return it != nodes.end() && *it == n ? static_cast<std::size_t>(it - nodes.begin()) : npos;
}

Mat3 RecoveryResult::uncalibrated(std::size_t i) const { return std::exp(log_scale[i]) * unit_metric[i]; }

RecoveryResult recover_metric(const std::vector<ScalarField>& harmonics, const RecoveryOptions& opts) {
  if (harmonics.empty()) throw PreconditionError("recover_metric: no harmonic samples");
  RecoveryResult r;
  r.domain = harmonics.front().domain();
  r.scale = opts.scale;
  const auto& dom = *r.domain;
  if (dom.mask() != MaskSpec::box) throw PreconditionError("recover_metric: only plain boxes are supported");
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.depth(n) >= opts.min_depth) r.nodes.push_back(n);
  }
  if (r.nodes.empty()) throw PreconditionError("recover_metric: no node is deep enough");
  const std::size_t nn = r.nodes.size();
  r.unit_metric.resize(nn);
  r.residual.resize(nn);
  r.log_scale.assign(nn, 0.0);
  r.drift_mismatch.assign(nn, 0.0);
  std::vector<Mat3> unit_inverse(nn);
  std::vector<Vec3> drift(nn);

  parallel_for(nn, opts.jobs, [&](std::size_t i) {
    const auto est = recover_laplace_jet(harmonics, r.nodes[i], opts.fit_degree);
    r.residual[i] = est.residual;
    const Mat3 a = readout(est.jet);
    if (!is_spd(a)) {
      throw NumericalError("recover_metric: non-SPD readout at node " + std::to_string(r.nodes[i]));
    }
    const double kappa = std::cbrt(a.determinant());
    unit_inverse[i] = a / kappa;
    r.unit_metric[i] = unit_inverse[i].inverse();
    drift[i] = est.jet.segment<3>(1) / kappa;
  });

  // grad ln rho = 2 G (b / kappa - div G^{-1}) with G the det-1 metric.
  const auto& h = dom.spacing();
  auto neighbor = [&](std::size_t i, int axis, int off) {
    Index3 c = dom.index(r.nodes[i]);
    c[axis] += off;
    if (!dom.in_grid(c.i, c.j, c.k)) return RecoveryResult::npos;
    return r.slot(dom.id(c));
  };
  std::vector<Vec3> dlog(nn, Vec3::Zero());
  for (std::size_t i = 0; i < nn; ++i) {
    Vec3 divg = Vec3::Zero();
    for (int ax = 0; ax < 3; ++ax) {
      const std::size_t p = neighbor(i, ax, 1), m = neighbor(i, ax, -1);
      Mat3 d;
      if (p != RecoveryResult::npos && m != RecoveryResult::npos) {
        d = (unit_inverse[p] - unit_inverse[m]) / (2.0 * h[ax]);
      } else if (p != RecoveryResult::npos) {
        const std::size_t p2 = neighbor(i, ax, 2);
        d = (-3.0 * unit_inverse[i] + 4.0 * unit_inverse[p] - unit_inverse[p2]) / (2.0 * h[ax]);
      } else {
        const std::size_t m2 = neighbor(i, ax, -2);
        d = (3.0 * unit_inverse[i] - 4.0 * unit_inverse[m] + unit_inverse[m2]) / (2.0 * h[ax]);
      }
      divg += d.row(ax).transpose();
    }
    dlog[i] = 2.0 * r.unit_metric[i] * (drift[i] - divg);
  }

  if (opts.scale == ScaleMode::drift && nn > 1) {
    // Least squares over axis edges, node 0 pinned to 0.
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(nn);
    std::vector<double> rhs(nn, 0.0);
    for (std::size_t i = 0; i < nn; ++i) {
      for (int ax = 0; ax < 3; ++ax) {
        const std::size_t q = neighbor(i, ax, 1);
        if (q == RecoveryResult::npos) continue;
        const double dlt = 0.5 * (dlog[i][ax] + dlog[q][ax]) * h[ax];
        rows[i].push_back({i, 1.0});
        rows[q].push_back({q, 1.0});
        rows[i].push_back({q, -1.0});
        rows[q].push_back({i, -1.0});
        rhs[i] -= dlt;
        rhs[q] += dlt;
      }
    }
    CsrMatrix lap;
    lap.rows = nn - 1;
    std::vector<double> b(nn - 1), inv_diag(nn - 1);
    for (std::size_t i = 1; i < nn; ++i) {
      std::map<std::size_t, double> acc;
      for (const auto& [c, v] : rows[i]) {
        if (c > 0) acc[c - 1] += v;
      }
      for (const auto& [c, v] : acc) {
        lap.col.push_back(c);
        lap.val.push_back(v);
      }
      lap.row_ptr.push_back(lap.col.size());
      b[i - 1] = rhs[i];
    }
    const auto diag = lap.diagonal();
    for (std::size_t i = 0; i < diag.size(); ++i) inv_diag[i] = 1.0 / diag[i];
    std::vector<double> x(nn - 1, 0.0);
    CgOptions cg;
    cg.relative_tolerance = 1e-12;
    const CgResult res = conjugate_gradient(lap, inv_diag, b, x, cg);
    if (!res.converged) throw NumericalError("recover_metric: scale integration did not converge");
    for (std::size_t i = 1; i < nn; ++i) r.log_scale[i] = x[i - 1];
  }

  for (std::size_t i = 0; i < nn; ++i) {
    Vec3 integrated = Vec3::Zero();
    for (int ax = 0; ax < 3; ++ax) {
      const std::size_t p = neighbor(i, ax, 1), m = neighbor(i, ax, -1);
      if (p != RecoveryResult::npos && m != RecoveryResult::npos) {
        integrated[ax] = (r.log_scale[p] - r.log_scale[m]) / (2.0 * h[ax]);
      } else if (p != RecoveryResult::npos) {
        integrated[ax] = (r.log_scale[p] - r.log_scale[i]) / h[ax];
      } else if (m != RecoveryResult::npos) {
        integrated[ax] = (r.log_scale[i] - r.log_scale[m]) / h[ax];
      }
    }
    r.drift_mismatch[i] = (dlog[i] - integrated).norm();
  }
  return r;
}

Calibration calibrate(const RecoveryResult& r, NodeId anchor, const Mat3& g_anchor, double max_anchor_residual) {
  const std::size_t ia = r.slot(anchor);
  if (ia == RecoveryResult::npos) throw PreconditionError("calibrate: anchor is not a recovered node");
  const auto& dom = *r.domain;
  const Mat3 m = r.uncalibrated(ia);
  Calibration cal;
  cal.anchor = anchor;
  cal.constant = frob_dot(g_anchor, m) / frob_dot(m, m);
  cal.anchor_residual = (cal.constant * m - g_anchor).norm() / g_anchor.norm();
  if (cal.anchor_residual > max_anchor_residual) {
    throw NumericalError("calibrate: anchor residual " + std::to_string(cal.anchor_residual) + " too high");
  }
  Index3 lo = dom.index(r.nodes.front()), hi = dom.index(r.nodes.back());
  std::vector<Mat3> g(dom.node_count(), Mat3::Identity());
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    Index3 c = dom.index(n);
    for (int a = 0; a < 3; ++a) c[a] = std::clamp(c[a], lo[a], hi[a]);
    const std::size_t s = r.slot(dom.id(c));
    if (s != RecoveryResult::npos) g[n] = cal.constant * r.uncalibrated(s);
  }
  cal.metric = std::make_shared<const MetricField>(r.domain, std::move(g));
  return cal;
}

RecoveryComparison compare_with_truth(const RecoveryResult& r, const Calibration& cal, const MetricField& truth) {
  RecoveryComparison out;
  const std::size_t nn = r.nodes.size();
  out.relative_error.resize(nn);
  out.implied_scale.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const Mat3& gt = truth.at(r.nodes[i]);
    const Mat3 m = r.uncalibrated(i);
    out.relative_error[i] = (cal.constant * m - gt).norm() / gt.norm();
    out.implied_scale[i] = frob_dot(gt, m) / frob_dot(m, m);
    out.max_relative_error = std::max(out.max_relative_error, out.relative_error[i]);
    out.scale_mean += out.implied_scale[i];
  }
  out.scale_mean /= static_cast<double>(nn);
  double var = 0.0;
  for (double s : out.implied_scale) var += (s - out.scale_mean) * (s - out.scale_mean);
  out.scale_spread = std::sqrt(var / static_cast<double>(nn)) / out.scale_mean;
  out.spread_flagged = out.scale_spread > 1e-2;
  return out;
}

ScalarField conformal_identity_check(const ScalarField& c, const MetricField& g, const ScalarField& y) {
  const auto& dp = y.domain();
  require_same_domain(c.domain(), dp, "conformal_identity_check");
  require_same_domain(g.domain(), dp, "conformal_identity_check");
  const auto& dom = *dp;
  std::vector<double> cv(dom.node_count(), 1.0);
  ScalarField cinv(dp);
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (!dom.in_domain(n)) continue;
    if (!(c[n] > 0.0)) throw PreconditionError("conformal_identity_check: nonpositive c at node " + std::to_string(n));
    cv[n] = c[n];
    cinv[n] = 1.0 / c[n];
  }
  const MetricField cg = g.scaled(cv);
  const ScalarField lhs = laplacian(y, cg);
  const ScalarField lap = laplacian(y, g);
  const ScalarField cross = inner(grad(cinv, g), grad(y, g), g);
  ScalarField out(dp);
  for (NodeId n : dom.interior_nodes()) out[n] = lhs[n] - (cinv[n] * lap[n] - 0.5 * cross[n]);
  return out;
}

}  // namespace hqf
