#include "hqf/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "hqf/calculus.hpp"
#include "hqf/error.hpp"

namespace hqf {

DirichletFieldBasis dirichlet_basis(const DirichletOperator& op) {
  const auto& dp = op.domain();
  const auto& dom = *dp;
  const auto& g = op.metric();
  DirichletFieldBasis out;
  const int nc = dom.boundary_component_count();
  const auto& comp = dom.boundary_component();
  const auto facets = surface_facets(dom, g);
  for (int c = 1; c < nc; ++c) {
    BoundaryControl f(dp);
    for (std::size_t s = 0; s < f.size(); ++s) f[s] = comp[s] == c ? 1.0 : 0.0;
    ScalarField phi = harmonic_extension(op, f);
    VectorField d = gradient_with_boundary(phi, g);

    const VectorField r = rot(d, g);
    const ScalarField dv = div(d, g);
    double rc = 0.0, rd = 0.0;
    for (NodeId n : dom.interior_nodes()) {
      if (dom.depth(n) < 2) continue;
      rc = std::max(rc, r[n].norm());
      rd = std::max(rd, std::abs(dv[n]));
    }
    // Face-interior nodes only: at edges and corners the normal component of
    // one facet is tangential to the other.
    const auto& outward = dom.outward_direction();
    double tang = 0.0;
    for (const auto& fc : facets) {
      const auto& o = outward[dom.boundary_slot(fc.node)];
      if (std::abs(o[0]) + std::abs(o[1]) + std::abs(o[2]) != 1) continue;
      Vec3 t = d[fc.node];
      t[fc.axis] = 0.0;
      tang = std::max(tang, std::sqrt(inner_at(t, t, g, fc.node)));
    }
    // Conservative flux of the scheme across the boundary couplings.
    const auto& interior = dom.interior_nodes();
    std::vector<double> flux(static_cast<std::size_t>(nc), 0.0);
    for (const auto& cp : op.boundary_coupling()) {
      const NodeId b = dom.boundary_nodes()[cp.boundary_slot];
      flux[static_cast<std::size_t>(comp[cp.boundary_slot])] +=
          dom.cell_volume() * cp.coeff * (phi[b] - phi[interior[cp.row]]);
    }
    double total = 0.0;
    for (double v : flux) total += v;
    const auto w = normal_flux_weights(phi, g);
    std::vector<double> qflux(static_cast<std::size_t>(nc), 0.0);
    for (std::size_t s = 0; s < w.size(); ++s) qflux[static_cast<std::size_t>(comp[s])] += w[s];
    out.quadrature_flux.push_back(std::move(qflux));
    out.fields.push_back(std::move(d));
    out.potentials.push_back(std::move(phi));
    out.curl_residual.push_back(rc);
    out.div_residual.push_back(rd);
    out.tangential_residual.push_back(tang);
    out.component_flux.push_back(std::move(flux));
    out.total_flux.push_back(total);
  }
  return out;
}

SurfacePatch make_plane_patch(const GridDomain& dom, int axis, double coordinate, int layers) {
  if (axis < 0 || axis > 2) throw PreconditionError("make_plane_patch: axis must be 0, 1 or 2");
  if (layers < 1 || layers % 2 == 0) throw PreconditionError("make_plane_patch: layers must be odd and positive");
  SurfacePatch p;
  p.axis = axis;
  p.layers = layers;
  const auto& iv = dom.box()[static_cast<std::size_t>(axis)];
  p.level = static_cast<int>(std::lround((coordinate - iv.lo) / dom.spacing()[static_cast<std::size_t>(axis)]));
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    const int lv = dom.index(n)[axis];
    if (std::abs(lv - p.level) <= layers / 2 && dom.depth(n) >= 3) p.nodes.push_back(n);
  }
  return p;
}

namespace {

bool is_flat(const MetricField& g) {
  return g.is_constant() && (g.at(0) - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

SurfaceIdentityResult surface_identity_check(const VectorField& v, const SurfacePatch& patch, const MetricField& g) {
  require_same_domain(v.domain(), g.domain(), "surface_identity_check");
  if (!is_flat(g)) throw PreconditionError("surface_identity_check: flat metric required");
  if (patch.nodes.empty()) throw PreconditionError("surface_identity_check: patch too small for the stencils");
  const auto& dom = *v.domain();
  const int a = patch.axis, b = (a + 1) % 3, c = (a + 2) % 3;
  Vec3 nu = Vec3::Zero();
  nu[a] = 1.0;
  const VectorField r = rot(v, g);
  std::vector<double> wb(dom.node_count(), 0.0), wc(dom.node_count(), 0.0);
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (!dom.in_domain(n)) continue;
    Vec3 vt = v[n];
    vt[a] = 0.0;
    const Vec3 w = vt.cross(nu);
    wb[n] = w[b];
    wc[n] = w[c];
  }
  SurfaceIdentityResult out;
  for (NodeId n : patch.nodes) {
    const double lhs = nu.dot(r[n]);
    const double rhs = central_partial(wb, dom, n, b) + central_partial(wc, dom, n, c);
    out.residual = std::max(out.residual, std::abs(lhs - rhs));
    out.lhs_sup = std::max(out.lhs_sup, std::abs(lhs));
    out.rhs_sup = std::max(out.rhs_sup, std::abs(rhs));
  }
  return out;
}

ProbeResult uniqueness_probe(const std::vector<QuaternionField>& basis, const SurfacePatch& patch, const MetricField& g,
                             double q_tolerance) {
  ProbeResult out;
  out.header =
      "finite-dimensional, resolution-specific certificate for the sampled span; not a proof of the continuum "
      "uniqueness statement";
  const std::size_t m = basis.size();
  if (m == 0) throw PreconditionError("uniqueness_probe: empty basis");
  if (patch.nodes.size() < 4 * m) {
    throw PreconditionError("uniqueness_probe: patch needs at least 4 nodes per basis field");
  }
  const auto& dom = *g.domain();
  std::vector<double> sup(m);
  for (std::size_t i = 0; i < m; ++i) {
    require_same_domain(basis[i].domain(), g.domain(), "uniqueness_probe");
    sup[i] = sup_norm(basis[i], g);
    if (!(sup[i] > 0.0)) throw PreconditionError("uniqueness_probe: zero basis field " + std::to_string(i));
    const QResidual q = q_residual(basis[i], g);
    if (std::max(q.curl_defect, q.div_defect) > q_tolerance * sup[i]) {
      throw PreconditionError("uniqueness_probe: basis field " + std::to_string(i) + " fails the Q-residual check");
    }
  }

  // Whole-domain dependence check through the Gram matrix.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (!dom.in_domain(n)) continue;
    Eigen::MatrixXd s(4, static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      s(0, col) = basis[i].scalar()[n] / sup[i];
      s.block<3, 1>(1, col) = basis[i].vector()[n] / sup[i];
    }
    gram.noalias() += s.transpose() * s;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (ev[0] <= 1e-12 * ev[ev.size() - 1]) {
    out.rank_deficient = true;
  }

  const auto rows = static_cast<Eigen::Index>(4 * patch.nodes.size());
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    ProbeRow row{i, 0.0, sup[i], 0.0};
    for (std::size_t p = 0; p < patch.nodes.size(); ++p) {
      const NodeId n = patch.nodes[p];
      const auto r = static_cast<Eigen::Index>(4 * p);
      const auto col = static_cast<Eigen::Index>(i);
      a(r, col) = basis[i].scalar()[n] / sup[i];
      a.block<3, 1>(r + 1, col) = basis[i].vector()[n] / sup[i];
      row.sup_on_patch = std::max(row.sup_on_patch, qnorm(basis[i].at(n), g));
    }
    row.ratio = row.sup_on_patch / row.sup_on_domain;
    out.table.push_back(row);
  }
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  out.sigma_max = s[0];
  out.sigma_min = s[s.size() - 1];
  out.ratio = out.rank_deficient || s[0] == 0.0 ? 0.0 : out.sigma_min / out.sigma_max;
  return out;
}

std::vector<QuaternionField> default_probe_basis(const MetricField& g, const std::vector<ScalarField>& harmonics) {
  const auto& dp = g.domain();
  const Box& b = dp->box();
  const Vec3 c(0.5 * (b[0].lo + b[0].hi), 0.5 * (b[1].lo + b[1].hi), 0.5 * (b[2].lo + b[2].hi));
  std::vector<QuaternionField> out;
  for (const auto& w : harmonics) {
    VectorField gw = gradient_with_boundary(w, g);
    if (sup_at_depth(gw, 0) <= 1e-10 * std::max(1.0, sup_at_depth(w, 0))) continue;  // constant data
    out.emplace_back(ScalarField(dp), std::move(gw));
  }
  auto field = [&](auto alpha, auto u) {
    return QuaternionField(ScalarField::sample(dp, [&](const Vec3& x) { return alpha(Vec3(x - c)); }),
                           VectorField::sample(dp, [&](const Vec3& x) { return u(Vec3(x - c)); }));
  };
  out.push_back(field([](const Vec3& x) { return -2.0 * x[0]; }, [](const Vec3& x) { return Vec3(0, x[2], -x[1]); }));
  out.push_back(field([](const Vec3& x) { return -2.0 * x[1]; }, [](const Vec3& x) { return Vec3(-x[2], 0, x[0]); }));
  out.push_back(field([](const Vec3& x) { return -2.0 * x[2]; }, [](const Vec3& x) { return Vec3(x[1], -x[0], 0); }));
  out.push_back(field([](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3(0, 0, 0); }));
  return out;
}

double circulation(const VectorField& u, const GridLoop& loop, const MetricField& g) {
  require_same_domain(u.domain(), g.domain(), "circulation");
  const auto& dom = *u.domain();
  const int a = loop.normal_axis, b = (a + 1) % 3, c = (a + 2) % 3;
  if (loop.hi[0] <= loop.lo[0] || loop.hi[1] <= loop.lo[1]) {
    throw PreconditionError("circulation: degenerate loop");
  }
  auto node = [&](int ib, int ic) {
    Index3 q;
    q[a] = loop.level;
    q[b] = ib;
    q[c] = ic;
    if (!dom.in_grid(q.i, q.j, q.k) || !dom.in_domain(dom.id(q))) {
      throw PreconditionError("circulation: loop exits the domain");
    }
    return dom.id(q);
  };
  auto lowered = [&](NodeId n, int axis) { return (g.at(n) * u[n])[axis]; };
  const auto& h = dom.spacing();
  double s = 0.0;
  auto edge = [&](NodeId p, NodeId q, int axis, double sign) {
    s += sign * 0.5 * (lowered(p, axis) + lowered(q, axis)) * h[static_cast<std::size_t>(axis)];
  };
  for (int i = loop.lo[0]; i < loop.hi[0]; ++i) edge(node(i, loop.lo[1]), node(i + 1, loop.lo[1]), b, 1.0);
  for (int j = loop.lo[1]; j < loop.hi[1]; ++j) edge(node(loop.hi[0], j), node(loop.hi[0], j + 1), c, 1.0);
  for (int i = loop.hi[0]; i > loop.lo[0]; --i) edge(node(i, loop.hi[1]), node(i - 1, loop.hi[1]), b, -1.0);
  for (int j = loop.hi[1]; j > loop.lo[1]; --j) edge(node(loop.lo[0], j), node(loop.lo[0], j - 1), c, -1.0);
  return s;
}

}  // namespace hqf
