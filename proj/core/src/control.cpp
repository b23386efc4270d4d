#include "hqf/control.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hqf/calculus.hpp"
#include "hqf/error.hpp"
#include "hqf/linalg.hpp"

namespace hqf {

int ControlMatrix::rank(double ratio) const { return linalg::numerical_rank(sigma, ratio); }

ControlMatrix ma_matrix(const MetricField& g, const std::vector<NodeId>& points, const ControlBasis& basis,
                        const std::vector<ScalarField>& harmonics) {
  const auto& dom = *g.domain();
  if (harmonics.size() != basis.size()) throw PreconditionError("ma_matrix: harmonics do not match the basis");
  std::set<NodeId> seen;
  for (NodeId p : points) {
    if (p >= dom.node_count() || dom.depth(p) < 2) {
      throw PreconditionError("ma_matrix: point " + std::to_string(p) + " is not at least 2 layers inside");
    }
    if (!seen.insert(p).second) throw PreconditionError("ma_matrix: duplicate point " + std::to_string(p));
  }
  ControlMatrix m;
  m.points = points;
  m.basis = basis;
  m.matrix.resize(static_cast<Eigen::Index>(4 * points.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t c = 0; c < basis.size(); ++c) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(4 * i);
      const auto col = static_cast<Eigen::Index>(c);
      m.matrix(r, col) = harmonics[c][points[i]];
      const Vec3 gw = grad_at(harmonics[c], g, points[i]);
      for (int a = 0; a < 3; ++a) m.matrix(r + 1 + a, col) = gw[a];
    }
  }
  m.sigma = linalg::singular_values(m.matrix);
  return m;
}

ControlMatrix ma_matrix(const DirichletOperator& op, const std::vector<NodeId>& points, const ControlBasis& basis,
                        int jobs) {
  return ma_matrix(op.metric(), points, basis, harmonic_extensions(op, basis.controls, jobs));
}

ControlSolution solve_control(const ControlMatrix& m, const Eigen::VectorXd& target, const std::vector<bool>& rows) {
  if (target.size() != m.matrix.rows() || rows.size() != m.rows()) {
    throw PreconditionError("solve_control: target length does not match the control matrix");
  }
  std::vector<Eigen::Index> sel;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r]) sel.push_back(static_cast<Eigen::Index>(r));
  }
  const auto k = static_cast<Eigen::Index>(sel.size());
  Eigen::MatrixXd a(k, m.matrix.cols());
  Eigen::VectorXd t(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    a.row(i) = m.matrix.row(sel[static_cast<std::size_t>(i)]);
    t[i] = target[sel[static_cast<std::size_t>(i)]];
  }
  ControlSolution out;
  out.coefficients = linalg::min_norm_solve(a, t);
  out.target = t;
  out.achieved = a * out.coefficients;
  out.defect = (out.achieved - t).norm() / std::max(t.norm(), 1.0);
  out.full_rank = linalg::numerical_rank(linalg::singular_values(a), 1e-3) == k;
  out.success = out.defect < 1e-2;

  const auto& dom = m.basis.controls.empty() ? DomainPtr{} : m.basis.controls.front().domain();
  out.control = dom ? BoundaryControl(dom) : BoundaryControl();
  for (std::size_t c = 0; c < m.basis.size(); ++c) {
    const double w = out.coefficients[static_cast<Eigen::Index>(c)];
    const auto& f = m.basis.controls[c];
    for (std::size_t q = 0; q < f.size(); ++q) out.control[q] += w * f[q];
  }
  out.control_norm = out.control.sup();
  return out;
}

ControlSolution solve_control(const ControlMatrix& m, const std::vector<PointTarget>& targets) {
  if (targets.size() != m.points.size()) throw PreconditionError("solve_control: one target per point required");
  Eigen::VectorXd t(static_cast<Eigen::Index>(4 * targets.size()));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].node != m.points[i]) throw PreconditionError("solve_control: targets must follow the matrix points");
    const auto r = static_cast<Eigen::Index>(4 * i);
    t[r] = targets[i].c;
    for (int a = 0; a < 3; ++a) t[r + 1 + a] = targets[i].k[a];
  }
  return solve_control(m, t, std::vector<bool>(m.rows(), true));
}

namespace {

double qdiff(const Quaternion& p, const Quaternion& h, const MetricField& g) {
  return qnorm({p.alpha - h.alpha, p.u - h.u, p.node}, g);
}

}  // namespace

SeparationResult separate(const DirichletOperator& op, NodeId a, NodeId b, const Quaternion& h_a,
                          const Quaternion& h_b, const ControlBasis& basis, const std::vector<ScalarField>& harmonics) {
  const auto& dp = op.domain();
  const auto& g = op.metric();
  if (dp->mask() != MaskSpec::box) {
    throw PreconditionError("separate: only plain boxes are supported (Dirichlet-space constraint not handled)");
  }
  if (a == b) throw PreconditionError("separate: the two points must differ");
  const ControlMatrix m = ma_matrix(g, {a, b}, basis, harmonics);

  SeparationResult out;
  out.note = "plain box: the Dirichlet space is trivial, so the boundary compatibility constraint is vacuous";

  Eigen::VectorXd t = Eigen::VectorXd::Zero(8);
  t[0] = h_a.alpha;
  t[4] = h_b.alpha;
  const std::vector<bool> scalar_rows{true, false, false, false, true, false, false, false};
  const ControlSolution sf = solve_control(m, t, scalar_rows);
  out.scalar_defect = sf.defect;
  const ScalarField wf = harmonic_extension(op, sf.control);

  out.divcurl = divcurl_solve(op, gradient_with_boundary(wf, g));
  const VectorField& u0 = out.divcurl.u;

  const Vec3 ka = h_a.u - u0[a], kb = h_b.u - u0[b];
  t.setZero();
  for (int i = 0; i < 3; ++i) {
    t[1 + i] = ka[i];
    t[5 + i] = kb[i];
  }
  const std::vector<bool> grad_rows{false, true, true, true, false, true, true, true};
  const ControlSolution sh = solve_control(m, t, grad_rows);
  out.gradient_defect = sh.defect;
  const ScalarField wh = harmonic_extension(op, sh.control);

  VectorField u = u0;
  u += gradient_with_boundary(wh, g);
  out.q = QuaternionField(wf, std::move(u));
  out.residual = q_residual(out.q, g);
  out.collar_residual = q_residual(out.q, g, collar_depth(*op.domain()));
  out.error_a = qdiff(out.q.at(a), {h_a.alpha, h_a.u, a}, g);
  out.error_b = qdiff(out.q.at(b), {h_b.alpha, h_b.u, b}, g);
  out.threshold = 1e-2 * (1.0 + qnorm({h_a.alpha, h_a.u, a}, g) + qnorm({h_b.alpha, h_b.u, b}, g));
  out.success = out.error_a < out.threshold && out.error_b < out.threshold && !out.divcurl.flagged;
  return out;
}

std::vector<double> compatibility_check(const BoundaryControl& f, const std::vector<VectorField>& d_basis,
                                        const MetricField& g) {
  const auto& dom = *g.domain();
  require_same_domain(f.domain(), g.domain(), "compatibility_check");
  const auto facets = surface_facets(dom, g);
  std::vector<double> out;
  out.reserve(d_basis.size());
  for (const auto& d : d_basis) {
    require_same_domain(d.domain(), g.domain(), "compatibility_check");
    double s = 0.0;
    for (const auto& fc : facets) {
      const double dn = fc.side * d[fc.node][fc.axis] / std::sqrt(g.inverse(fc.node)(fc.axis, fc.axis));
      s += f[dom.boundary_slot(fc.node)] * dn * fc.weight;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace hqf
