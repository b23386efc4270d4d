#include "hqf/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "hqf/calculus.hpp"
#include "hqf/error.hpp"
#include "hqf/field_io.hpp"
#include "json.hpp"

namespace hqf {

BoundaryControl::BoundaryControl(DomainPtr dom, std::vector<double> values) : dom_(std::move(dom)), v_(std::move(values)) {
  if (v_.size() != dom_->boundary_nodes().size()) {
    throw PreconditionError("boundary control size does not match the boundary node set");
  }
}

BoundaryControl BoundaryControl::sample(DomainPtr dom, const std::function<double(const Vec3&)>& f) {
  BoundaryControl out(dom);
  const auto& b = dom->boundary_nodes();
  for (std::size_t s = 0; s < b.size(); ++s) out.v_[s] = f(dom->position(b[s]));
  return out;
}

BoundaryControl BoundaryControl::trace(const ScalarField& f) {
  BoundaryControl out(f.domain());
  const auto& b = f.domain()->boundary_nodes();
  for (std::size_t s = 0; s < b.size(); ++s) out.v_[s] = f[b[s]];
  return out;
}

double BoundaryControl::sup() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

ScalarField BoundaryControl::as_field() const {
  ScalarField out(dom_);
  const auto& b = dom_->boundary_nodes();
  for (std::size_t s = 0; s < b.size(); ++s) out[b[s]] = v_[s];
  return out;
}

DirichletOperator::DirichletOperator(std::shared_ptr<const MetricField> g, CgOptions cg)
    : g_(std::move(g)), cg_(cg) {
  const auto& dom = *g_->domain();
  const auto& interior = dom.interior_nodes();
  row_.assign(dom.node_count(), npos);
  for (std::size_t r = 0; r < interior.size(); ++r) row_[interior[r]] = r;

  a_.rows = interior.size();
  a_.row_ptr.assign(1, 0);
  std::vector<StencilEntry> row;
  std::vector<std::pair<std::size_t, double>> cols;
  for (std::size_t r = 0; r < interior.size(); ++r) {
    flux_stencil(*g_, interior[r], row);
    cols.clear();
    for (const auto& e : row) {
      if (row_[e.node] != npos) {
        cols.emplace_back(row_[e.node], -e.coeff);
      } else if (dom.is_boundary(e.node)) {
        if (e.coeff != 0.0) coupling_.push_back({r, dom.boundary_slot(e.node), e.coeff});
      } else {
        throw NumericalError("assemble: stencil of node " + std::to_string(interior[r]) + " reaches an exterior node");
      }
    }
    std::sort(cols.begin(), cols.end());
    for (const auto& [c, v] : cols) {
      a_.col.push_back(c);
      a_.val.push_back(v);
    }
    a_.row_ptr.push_back(a_.col.size());
  }
  const auto d = a_.diagonal();
  inv_diag_.resize(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (!(d[r] > 0.0)) throw NumericalError("assemble: nonpositive diagonal at node " + std::to_string(interior[r]));
    inv_diag_[r] = 1.0 / d[r];
  }
}

double DirichletOperator::max_asymmetry() const {
  double m = 0.0;
  for (std::size_t r = 0; r < a_.rows; ++r) {
    for (std::size_t p = a_.row_ptr[r]; p < a_.row_ptr[r + 1]; ++p) {
      m = std::max(m, std::abs(a_.val[p] - a_.at(a_.col[p], r)));
    }
  }
  return m;
}

CgResult DirichletOperator::solve_interior(const std::vector<double>& b, std::vector<double>& x) const {
  const CgResult res = conjugate_gradient(a_, inv_diag_, b, x, cg_);
  if (!res.converged) {
    std::ostringstream os;
    os << "conjugate gradient did not converge: relative residual " << res.relative_residual << " after "
       << res.iterations << " iterations";
    throw NumericalError(os.str());
  }
  return res;
}

DirichletOperator assemble(const MetricField& g, CgOptions cg) {
  return DirichletOperator(std::make_shared<const MetricField>(g), cg);
}

ScalarField solve_dirichlet(const DirichletOperator& op, const ScalarField& h, const BoundaryControl& f,
                            SolveStats* stats) {
  const auto& dp = op.domain();
  require_same_domain(h.domain(), dp, "solve_dirichlet");
  require_same_domain(f.domain(), dp, "solve_dirichlet");
  const auto& dom = *dp;
  const auto& g = op.metric();
  const auto& interior = dom.interior_nodes();

  std::vector<double> b(interior.size());
  for (std::size_t r = 0; r < interior.size(); ++r) b[r] = -g.sqrt_det(interior[r]) * h[interior[r]];
  for (const auto& c : op.boundary_coupling()) b[c.row] += c.coeff * f[c.boundary_slot];

  double mean = 0.0;
  for (double v : f.values()) mean += v;
  if (f.size() > 0) mean /= static_cast<double>(f.size());
  std::vector<double> x(interior.size(), mean);
  const CgResult res = op.solve_interior(b, x);

  ScalarField out(dp);
  for (std::size_t r = 0; r < interior.size(); ++r) out[interior[r]] = x[r];
  const auto& bn = dom.boundary_nodes();
  for (std::size_t s = 0; s < bn.size(); ++s) out[bn[s]] = f[s];

  if (stats) {
    stats->iterations = res.iterations;
    stats->cg_relative_residual = res.relative_residual;
    std::vector<StencilEntry> row;
    double rmax = 0.0, hmax = 0.0;
    for (NodeId n : interior) {
      flux_stencil(g, n, row);
      double s = 0.0;
      for (const auto& e : row) s += e.coeff * out[e.node];
      rmax = std::max(rmax, std::abs(s / g.sqrt_det(n) - h[n]));
      hmax = std::max(hmax, std::abs(h[n]));
    }
    const auto& sp = dom.spacing();
    const double h2 = std::max({sp[0], sp[1], sp[2]});
    const double scale = std::max({hmax * h2 * h2, f.sup(), 1e-300});
    stats->relative_residual = rmax * h2 * h2 / scale;
  }
  return out;
}

ScalarField harmonic_extension(const DirichletOperator& op, const BoundaryControl& f, SolveStats* stats) {
  return solve_dirichlet(op, ScalarField(op.domain()), f, stats);
}

GreenColumn green_column(const DirichletOperator& op, NodeId y) {
  const auto& dom = *op.domain();
  if (y >= dom.node_count() || !dom.is_interior(y)) {
    throw PreconditionError("green_column: source node " + std::to_string(y) + " is not interior");
  }
  std::vector<double> b(op.matrix().rows, 0.0), x(op.matrix().rows, 0.0);
  b[op.row_of(y)] = -1.0 / dom.cell_volume();
  op.solve_interior(b, x);
  GreenColumn col{ScalarField(op.domain()), y};
  const auto& interior = dom.interior_nodes();
  for (std::size_t r = 0; r < interior.size(); ++r) col.values[interior[r]] = x[r];
  return col;
}

std::vector<double> normal_flux_weights(const ScalarField& z, const MetricField& g) {
  const auto& dom = *z.domain();
  const auto& h = dom.spacing();
  std::vector<double> w(dom.boundary_nodes().size(), 0.0);
  for (const auto& fc : surface_facets(dom, g)) {
    Index3 c = dom.index(fc.node);
    Index3 c1 = c, c2 = c;
    c1[fc.axis] -= fc.side;
    c2[fc.axis] -= 2 * fc.side;
    if (!dom.in_grid(c2.i, c2.j, c2.k)) continue;
    const NodeId n1 = dom.id(c1), n2 = dom.id(c2);
    if (!dom.in_domain(n1) || !dom.in_domain(n2)) continue;
    const double outward = (3.0 * z[fc.node] - 4.0 * z[n1] + z[n2]) / (2.0 * h[fc.axis]);
    const double dnu = std::sqrt(g.inverse(fc.node)(fc.axis, fc.axis)) * outward;
    w[dom.boundary_slot(fc.node)] += dnu * fc.weight;
  }
  return w;
}

double PoissonKernel::apply(const BoundaryControl& f) const {
  if (f.size() != weights.size()) throw PreconditionError("PoissonKernel::apply: control size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * f[i];
  return s;
}

double PoissonKernel::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

PoissonKernel poisson_kernel(const DirichletOperator& op, NodeId x, KernelKind kind, const Vec3& direction) {
  const auto& dom = *op.domain();
  if (x >= dom.node_count() || !dom.is_interior(x)) {
    throw PreconditionError("poisson_kernel: node " + std::to_string(x) + " is not interior");
  }
  PoissonKernel k;
  k.source = x;
  k.kind = kind;
  k.direction = direction;
  if (kind == KernelKind::value) {
    k.weights = normal_flux_weights(green_column(op, x).values, op.metric());
    return k;
  }
  if (dom.depth(x) < 2) {
    throw PreconditionError("poisson_kernel: gradient kind needs a node at least 2 layers inside");
  }
  const auto& h = dom.spacing();
  const Index3 c = dom.index(x);
  k.weights.assign(dom.boundary_nodes().size(), 0.0);
  for (int a = 0; a < 3; ++a) {
    if (direction[a] == 0.0) continue;
    Index3 p = c, m = c;
    p[a] += 1;
    m[a] -= 1;
    const auto wp = normal_flux_weights(green_column(op, dom.id(p)).values, op.metric());
    const auto wm = normal_flux_weights(green_column(op, dom.id(m)).values, op.metric());
    const double s = direction[a] / (2.0 * h[a]);
    for (std::size_t i = 0; i < wp.size(); ++i) k.weights[i] += s * (wp[i] - wm[i]);
  }
  return k;
}

DivCurlResult divcurl_solve(const DirichletOperator& op, const VectorField& v, double tolerance) {
  const auto& dp = op.domain();
  require_same_domain(v.domain(), dp, "divcurl_solve");
  const auto& dom = *dp;
  if (dom.mask() != MaskSpec::box) {
    throw PreconditionError("divcurl_solve: only plain boxes are supported (nontrivial topology refused)");
  }
  const auto& g = op.metric();
  const auto& d = dom.dims();
  const auto& h = dom.spacing();

  std::vector<Vec3> vt(dom.node_count());
  for (NodeId n = 0; n < dom.node_count(); ++n) vt[n] = g.sqrt_det(n) * v[n];

  // Covector potential w with w_3 = 0 and flat curl w = sqrt(g) v.
  std::vector<Vec3> w(dom.node_count(), Vec3::Zero());
  for (int j = 0; j < d[1]; ++j) {
    double phi = 0.0;
    for (int i = 0; i < d[0]; ++i) {
      if (i > 0) phi += 0.5 * h[0] * (vt[dom.id(i - 1, j, 0)][2] + vt[dom.id(i, j, 0)][2]);
      double wx = 0.0, wy = phi;
      w[dom.id(i, j, 0)] = Vec3(wx, wy, 0.0);
      for (int k = 1; k < d[2]; ++k) {
        const NodeId lo = dom.id(i, j, k - 1), hi = dom.id(i, j, k);
        wx += 0.5 * h[2] * (vt[lo][1] + vt[hi][1]);
        wy -= 0.5 * h[2] * (vt[lo][0] + vt[hi][0]);
        w[hi] = Vec3(wx, wy, 0.0);
      }
    }
  }
  VectorField u(dp);
  for (NodeId n = 0; n < dom.node_count(); ++n) u[n] = g.inverse(n) * w[n];

  const ScalarField du = div(u, g);
  ScalarField rhs(dp);
  for (NodeId n : dom.interior_nodes()) rhs[n] = -du[n];
  const ScalarField psi = solve_dirichlet(op, rhs, BoundaryControl(dp));
  u += gradient_with_boundary(psi, g);

  DivCurlResult out;
  const VectorField ru = rot(u, g);
  const ScalarField dv = div(u, g);
  double vmax = 0.0;
  for (NodeId n : dom.interior_nodes()) {
    if (dom.depth(n) < 2) continue;
    out.curl_defect = std::max(out.curl_defect, (ru[n] - v[n]).norm());
    out.div_defect = std::max(out.div_defect, std::abs(dv[n]));
    vmax = std::max(vmax, v[n].norm());
  }
  out.relative_curl_defect = vmax > 0.0 ? out.curl_defect / vmax : out.curl_defect;
  out.flagged = out.relative_curl_defect > tolerance;
  out.u = std::move(u);
  return out;
}

void export_green_column(const std::filesystem::path& stem, const GreenColumn& col) {
  nlohmann::json extra = {{"source_node", col.source}, {"kind", "green"}, {"direction", nullptr}};
  io::write_scalar(stem, col.values, extra.dump());
}

void export_kernel(const std::filesystem::path& stem, const GridDomain& dom, const PoissonKernel& k) {
  std::vector<double> data(dom.node_count(), 0.0);
  const auto& b = dom.boundary_nodes();
  for (std::size_t s = 0; s < b.size(); ++s) data[b[s]] = k.weights[s];
  nlohmann::json extra = {{"source_node", k.source},
                          {"kind", k.kind == KernelKind::value ? "value" : "gradient"},
                          {"direction", {k.direction[0], k.direction[1], k.direction[2]}}};
  io::write_raw(stem, dom, 1, data, extra.dump());
}

}  // namespace hqf
