#include "hqf/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "hqf/error.hpp"

namespace hqf {

namespace {

std::array<std::ptrdiff_t, 3> strides(const GridDomain& dom) {
  const auto& d = dom.dims();
  return {1, d[0], static_cast<std::ptrdiff_t>(d[0]) * d[1]};
}

void check_metric(const DomainPtr& field_dom, const MetricField& g, const char* what) {
  require_same_domain(field_dom, g.domain(), what);
}

void require_interior(const GridDomain& dom, NodeId n, const char* what) {
  if (n >= dom.node_count() || !dom.is_interior(n)) {
    throw PreconditionError(std::string(what) + ": evaluation requested at a non-interior node " + std::to_string(n));
  }
}

Vec3 covector_gradient(const std::vector<double>& f, const GridDomain& dom, NodeId n) {
  const auto st = strides(dom);
  const auto& h = dom.spacing();
  Vec3 d;
  for (int a = 0; a < 3; ++a) d[a] = (f[n + st[a]] - f[n - st[a]]) / (2.0 * h[a]);
  return d;
}

}  // namespace

double central_partial(const std::vector<double>& f, const GridDomain& dom, NodeId n, int axis) {
  const auto st = strides(dom);
  return (f[n + st[axis]] - f[n - st[axis]]) / (2.0 * dom.spacing()[axis]);
}

double inner_at(const Vec3& u, const Vec3& v, const MetricField& g, NodeId n) { return u.dot(g.at(n) * v); }

Vec3 vector_product_at(const Vec3& u, const Vec3& v, const MetricField& g, NodeId n) {
  // eps_{ijm} u^i v^j is the flat cross product read as a covector.
  return g.sqrt_det(n) * (g.inverse(n) * u.cross(v));
}

ScalarField inner(const VectorField& u, const VectorField& v, const MetricField& g) {
  require_same_domain(u.domain(), v.domain(), "inner");
  check_metric(u.domain(), g, "inner");
  ScalarField out(u.domain());
  const auto& dom = *u.domain();
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.in_domain(n)) out[n] = inner_at(u[n], v[n], g, n);
  }
  return out;
}

VectorField vector_product(const VectorField& u, const VectorField& v, const MetricField& g) {
  require_same_domain(u.domain(), v.domain(), "vector_product");
  check_metric(u.domain(), g, "vector_product");
  VectorField out(u.domain());
  const auto& dom = *u.domain();
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.in_domain(n)) out[n] = vector_product_at(u[n], v[n], g, n);
  }
  return out;
}

Vec3 grad_at(const ScalarField& a, const MetricField& g, NodeId n) {
  require_interior(*a.domain(), n, "grad");
  return g.inverse(n) * covector_gradient(a.values(), *a.domain(), n);
}

VectorField grad(const ScalarField& a, const MetricField& g) {
  check_metric(a.domain(), g, "grad");
  VectorField out(a.domain());
  const auto& dom = *a.domain();
  for (NodeId n : dom.interior_nodes()) out[n] = g.inverse(n) * covector_gradient(a.values(), dom, n);
  return out;
}

ScalarField div(const VectorField& u, const MetricField& g) {
  check_metric(u.domain(), g, "div");
  const auto& dom = *u.domain();
  const auto st = strides(dom);
  const auto& h = dom.spacing();
  ScalarField out(u.domain());
  for (NodeId n : dom.interior_nodes()) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
      const NodeId p = n + st[a], m = n - st[a];
      s += (g.sqrt_det(p) * u[p][a] - g.sqrt_det(m) * u[m][a]) / (2.0 * h[a]);
    }
    out[n] = s / g.sqrt_det(n);
  }
  return out;
}

VectorField rot(const VectorField& u, const MetricField& g) {
  check_metric(u.domain(), g, "rot");
  const auto& dom = *u.domain();
  const auto st = strides(dom);
  const auto& h = dom.spacing();
  std::vector<Vec3> lowered(dom.node_count(), Vec3::Zero());
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.in_domain(n)) lowered[n] = g.at(n) * u[n];
  }
  auto d = [&](NodeId n, int i, int j) {
    return (lowered[n + st[i]][j] - lowered[n - st[i]][j]) / (2.0 * h[i]);
  };
  VectorField out(u.domain());
  for (NodeId n : dom.interior_nodes()) {
    const Vec3 curl(d(n, 1, 2) - d(n, 2, 1), d(n, 2, 0) - d(n, 0, 2), d(n, 0, 1) - d(n, 1, 0));
    out[n] = curl / g.sqrt_det(n);
  }
  return out;
}

void flux_stencil(const MetricField& g, NodeId n, std::vector<StencilEntry>& row) {
  const auto& dom = *g.domain();
  const auto st = strides(dom);
  const auto& h = dom.spacing();
  row.clear();
  auto add = [&row](NodeId node, double c) {
    for (auto& e : row) {
      if (e.node == node) {
        e.coeff += c;
        return;
      }
    }
    row.push_back({node, c});
  };
  auto a = [&g](NodeId m, int i, int k) { return g.sqrt_det(m) * g.inverse(m)(i, k); };

  add(n, 0.0);
  double diag = 0.0;
  for (int i = 0; i < 3; ++i) {
    const NodeId p = n + st[i], m = n - st[i];
    const double cp = 0.5 * (a(n, i, i) + a(p, i, i)) / (h[i] * h[i]);
    const double cm = 0.5 * (a(n, i, i) + a(m, i, i)) / (h[i] * h[i]);
    add(p, cp);
    add(m, cm);
    diag -= cp + cm;
  }
  row[0].coeff = diag;

  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      if (i == k) continue;
      const NodeId p = n + st[i], m = n - st[i];
      const double ap = a(p, i, k), am = a(m, i, k);
      if (ap == 0.0 && am == 0.0) continue;
      const double s = 1.0 / (4.0 * h[i] * h[k]);
      add(p + st[k], s * ap);
      add(p - st[k], -s * ap);
      add(m + st[k], -s * am);
      add(m - st[k], s * am);
    }
  }
}

double laplacian_at(const ScalarField& a, const MetricField& g, NodeId n) {
  const auto& dom = *a.domain();
  require_interior(dom, n, "laplacian");
  check_metric(a.domain(), g, "laplacian");
  if (dom.depth(n) >= 2) {
    const auto st = strides(dom);
    const auto& h = dom.spacing();
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const NodeId p = n + st[i], m = n - st[i];
      const Vec3 gp = g.inverse(p) * covector_gradient(a.values(), dom, p);
      const Vec3 gm = g.inverse(m) * covector_gradient(a.values(), dom, m);
      s += (g.sqrt_det(p) * gp[i] - g.sqrt_det(m) * gm[i]) / (2.0 * h[i]);
    }
    return s / g.sqrt_det(n);
  }
  std::vector<StencilEntry> row;
  flux_stencil(g, n, row);
  double s = 0.0;
  for (const auto& e : row) s += e.coeff * a[e.node];
  return s / g.sqrt_det(n);
}

ScalarField laplacian(const ScalarField& a, const MetricField& g) {
  check_metric(a.domain(), g, "laplacian");
  const auto& dom = *a.domain();
  const VectorField ga = grad(a, g);
  const ScalarField composed = div(ga, g);
  ScalarField out(a.domain());
  std::vector<StencilEntry> row;
  for (NodeId n : dom.interior_nodes()) {
    if (dom.depth(n) >= 2) {
      out[n] = composed[n];
    } else {
      flux_stencil(g, n, row);
      double s = 0.0;
      for (const auto& e : row) s += e.coeff * a[e.node];
      out[n] = s / g.sqrt_det(n);
    }
  }
  return out;
}

VectorField vector_laplacian(const VectorField& u, const MetricField& g) {
  const auto& dom = *u.domain();
  const VectorField gd = grad(div(u, g), g);
  const VectorField rr = rot(rot(u, g), g);
  VectorField out(u.domain());
  for (NodeId n : dom.interior_nodes()) {
    if (dom.depth(n) >= 2) out[n] = gd[n] - rr[n];
  }
  return out;
}

VectorField gradient_with_boundary(const ScalarField& a, const MetricField& g) {
  check_metric(a.domain(), g, "gradient_with_boundary");
  const auto& dom = *a.domain();
  const auto& h = dom.spacing();
  const auto& f = a.values();
  VectorField out(a.domain());
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (!dom.in_domain(n)) continue;
    const Index3 c = dom.index(n);
    auto valid = [&](int axis, int offset) {
      Index3 q = c;
      q[axis] += offset;
      return dom.in_grid(q.i, q.j, q.k) && dom.in_domain(dom.id(q));
    };
    auto val = [&](int axis, int offset) {
      Index3 q = c;
      q[axis] += offset;
      return f[dom.id(q)];
    };
    Vec3 d;
    for (int ax = 0; ax < 3; ++ax) {
      const bool p1 = valid(ax, 1), m1 = valid(ax, -1);
      if (p1 && m1) {
        d[ax] = (val(ax, 1) - val(ax, -1)) / (2.0 * h[ax]);
      } else if (p1 && valid(ax, 2)) {
        d[ax] = (-3.0 * f[n] + 4.0 * val(ax, 1) - val(ax, 2)) / (2.0 * h[ax]);
      } else if (m1 && valid(ax, -2)) {
        d[ax] = (3.0 * f[n] - 4.0 * val(ax, -1) + val(ax, -2)) / (2.0 * h[ax]);
      } else if (p1) {
        d[ax] = (val(ax, 1) - f[n]) / h[ax];
      } else if (m1) {
        d[ax] = (f[n] - val(ax, -1)) / h[ax];
      } else {
        d[ax] = 0.0;
      }
    }
    out[n] = g.inverse(n) * d;
  }
  return out;
}

}  // namespace hqf
