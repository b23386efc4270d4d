#include "hqf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "hqf/error.hpp"
#include "hqf/metric.hpp"

namespace hqf {

std::string to_string(MaskSpec m) {
  switch (m) {
    case MaskSpec::box: return "box";
    case MaskSpec::box_minus_box: return "box_minus_box";
    case MaskSpec::box_minus_column: return "box_minus_column";
  }
  return "box";
}

MaskSpec mask_from_string(const std::string& s) {
  if (s == "box") return MaskSpec::box;
  if (s == "box_minus_box") return MaskSpec::box_minus_box;
  if (s == "box_minus_column") return MaskSpec::box_minus_column;
  throw PreconditionError("unknown mask_spec '" + s + "'");
}

namespace {

constexpr int kNeighbor6[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

}  // namespace

GridDomain::GridDomain(const DomainSpec& spec) : spec_(spec) {
  for (int a = 0; a < 3; ++a) {
    if (!(spec.box[a].length() > 0.0)) {
      throw PreconditionError("degenerate box: zero or negative extent on axis " + std::to_string(a));
    }
    if (spec.resolution[a] < 5) {
      throw PreconditionError("resolution must be >= 5 per axis");
    }
    spacing_[a] = spec.box[a].length() / (spec.resolution[a] - 1);
  }

  const int cut_axes = spec.mask == MaskSpec::box_minus_column ? 2 : 3;
  if (spec.mask != MaskSpec::box) {
    for (int a = 0; a < 3; ++a) {
      if (a >= cut_axes) {
        cut_lo_[a] = 0;
        cut_hi_[a] = spec.resolution[a] - 1;
        continue;
      }
      const Interval& in = spec.inner[a];
      const Interval& out = spec.box[a];
      if (!(in.lo > out.lo && in.hi < out.hi && in.hi > in.lo)) {
        throw PreconditionError("inner box must lie strictly inside the outer box");
      }
      const double eps = 1e-9;
      cut_lo_[a] = static_cast<int>(std::ceil((in.lo - out.lo) / spacing_[a] - eps));
      cut_hi_[a] = static_cast<int>(std::floor((in.hi - out.lo) / spacing_[a] + eps));
      if (cut_lo_[a] < 2 || cut_hi_[a] > spec.resolution[a] - 3) {
        throw PreconditionError("inner box touches (or is within one layer of) the outer boundary");
      }
      if (cut_hi_[a] <= cut_lo_[a]) {
        throw PreconditionError("inner box resolves to fewer than two node layers on axis " + std::to_string(a));
      }
    }
  }

  classify();
  label_components();
  build_normals();
  build_facets();
}

Index3 GridDomain::index(NodeId n) const {
  const auto nx = static_cast<NodeId>(dims()[0]);
  const auto ny = static_cast<NodeId>(dims()[1]);
  Index3 c;
  c.i = static_cast<int>(n % nx);
  c.j = static_cast<int>((n / nx) % ny);
  c.k = static_cast<int>(n / (nx * ny));
  return c;
}

Vec3 GridDomain::position(const Index3& c) const {
  return {box()[0].lo + c.i * spacing_[0], box()[1].lo + c.j * spacing_[1], box()[2].lo + c.k * spacing_[2]};
}

Vec3 GridDomain::position(NodeId n) const { return position(index(n)); }

void GridDomain::classify() {
  const auto& d = dims();
  const std::size_t total = static_cast<std::size_t>(d[0]) * d[1] * d[2];
  kind_.assign(total, NodeKind::interior);

  auto in_cut = [&](int i, int j, int k) {
    if (spec_.mask == MaskSpec::box) return false;
    const int c[3] = {i, j, k};
    for (int a = 0; a < 3; ++a) {
      if (c[a] < cut_lo_[a] || c[a] > cut_hi_[a]) return false;
    }
    return true;
  };

  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        const NodeId n = id(i, j, k);
        const bool on_face = i == 0 || j == 0 || k == 0 || i == d[0] - 1 || j == d[1] - 1 || k == d[2] - 1;
        if (in_cut(i, j, k)) {
          // The removed region keeps its surface layer as boundary nodes.
          bool surrounded = true;
          const int planar = spec_.mask == MaskSpec::box_minus_column ? 4 : 6;
          for (int m = 0; m < planar; ++m) {
            const int ii = i + kNeighbor6[m][0], jj = j + kNeighbor6[m][1], kk = k + kNeighbor6[m][2];
            if (!in_grid(ii, jj, kk) || !in_cut(ii, jj, kk)) {
              surrounded = false;
              break;
            }
          }
          kind_[n] = surrounded ? NodeKind::exterior : NodeKind::boundary;
        } else if (on_face) {
          kind_[n] = NodeKind::boundary;
        }
      }
    }
  }

  interior_.clear();
  boundary_.clear();
  boundary_slot_.assign(total, npos);
  for (NodeId n = 0; n < total; ++n) {
    if (kind_[n] == NodeKind::interior) {
      interior_.push_back(n);
    } else if (kind_[n] == NodeKind::boundary) {
      boundary_slot_[n] = boundary_.size();
      boundary_.push_back(n);
    }
  }

  // Chebyshev distance to the nearest non-interior node via multi-source BFS.
  depth_.assign(total, -1);
  std::deque<NodeId> queue;
  for (NodeId n = 0; n < total; ++n) {
    if (kind_[n] == NodeKind::boundary) {
      depth_[n] = 0;
      queue.push_back(n);
    }
  }
  while (!queue.empty()) {
    const NodeId n = queue.front();
    queue.pop_front();
    const Index3 c = index(n);
    for (int dk = -1; dk <= 1; ++dk) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int ii = c.i + di, jj = c.j + dj, kk = c.k + dk;
          if (!in_grid(ii, jj, kk)) continue;
          const NodeId m = id(ii, jj, kk);
          if (kind_[m] == NodeKind::interior && depth_[m] < 0) {
            depth_[m] = depth_[n] + 1;
            queue.push_back(m);
          }
        }
      }
    }
  }
}

void GridDomain::label_components() {
  component_.assign(boundary_.size(), -1);
  component_count_ = 0;
  for (std::size_t s = 0; s < boundary_.size(); ++s) {
    if (component_[s] >= 0) continue;
    const int label = component_count_++;
    std::deque<std::size_t> queue{s};
    component_[s] = label;
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const Index3 c = index(boundary_[cur]);
      for (int dk = -1; dk <= 1; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            const int ii = c.i + di, jj = c.j + dj, kk = c.k + dk;
            if (!in_grid(ii, jj, kk)) continue;
            const std::size_t slot = boundary_slot_[id(ii, jj, kk)];
            if (slot != npos && component_[slot] < 0) {
              component_[slot] = label;
              queue.push_back(slot);
            }
          }
        }
      }
    }
  }
}

void GridDomain::build_normals() {
  const auto& d = dims();
  const int cut_axes = spec_.mask == MaskSpec::box_minus_column ? 2 : 3;
  auto in_cut = [&](const Index3& c) {
    if (spec_.mask == MaskSpec::box) return false;
    for (int a = 0; a < 3; ++a) {
      if (c[a] < cut_lo_[a] || c[a] > cut_hi_[a]) return false;
    }
    return true;
  };
  outward_.assign(boundary_.size(), {0, 0, 0});
  for (std::size_t s = 0; s < boundary_.size(); ++s) {
    const Index3 c = index(boundary_[s]);
    auto& out = outward_[s];
    for (int a = 0; a < 3; ++a) {
      if (c[a] == 0) out[a] -= 1;
      if (c[a] == d[a] - 1) out[a] += 1;
    }
    if (in_cut(c)) {
      for (int a = 0; a < cut_axes; ++a) {
        Index3 p = c, m = c;
        p[a] += 1;
        m[a] -= 1;
        out[a] += static_cast<int>(in_cut(p)) - static_cast<int>(in_cut(m));
      }
    }
  }
}

void GridDomain::build_facets() {
  facets_.clear();
  const auto& d = dims();
  auto trap = [](int idx, int lo, int hi) { return (idx == lo || idx == hi) ? 0.5 : 1.0; };

  // Outer box faces.
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    for (int side : {-1, 1}) {
      Index3 idx;
      idx[a] = side < 0 ? 0 : d[a] - 1;
      for (int ic = 0; ic < d[c]; ++ic) {
        for (int ib = 0; ib < d[b]; ++ib) {
          idx[b] = ib;
          idx[c] = ic;
          const NodeId n = id(idx);
          if (kind_[n] != NodeKind::boundary) continue;
          BoundaryFacet f;
          f.node = n;
          f.axis = a;
          f.side = side;
          f.weight = spacing_[b] * spacing_[c] * trap(ib, 0, d[b] - 1) * trap(ic, 0, d[c] - 1);
          f.component = component_[boundary_slot_[n]];
          facets_.push_back(f);
        }
      }
    }
  }

  if (spec_.mask == MaskSpec::box) return;
  const int cut_axes = spec_.mask == MaskSpec::box_minus_column ? 2 : 3;
  // Faces of the removed region; the outward normal of the domain points into it.
  for (int a = 0; a < cut_axes; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    for (int side : {1, -1}) {
      Index3 idx;
      idx[a] = side > 0 ? cut_lo_[a] : cut_hi_[a];
      for (int ic = cut_lo_[c]; ic <= cut_hi_[c]; ++ic) {
        for (int ib = cut_lo_[b]; ib <= cut_hi_[b]; ++ib) {
          idx[b] = ib;
          idx[c] = ic;
          const NodeId n = id(idx);
          if (kind_[n] != NodeKind::boundary) continue;
          BoundaryFacet f;
          f.node = n;
          f.axis = a;
          f.side = side;
          f.weight = spacing_[b] * spacing_[c] * trap(ib, cut_lo_[b], cut_hi_[b]) * trap(ic, cut_lo_[c], cut_hi_[c]);
          f.component = component_[boundary_slot_[n]];
          facets_.push_back(f);
        }
      }
    }
  }
}

std::array<std::size_t, 3> GridDomain::census() const {
  std::array<std::size_t, 3> out{0, 0, 0};
  for (NodeKind k : kind_) ++out[static_cast<int>(k)];
  return out;
}

DomainPtr build_domain(const DomainSpec& spec) { return std::make_shared<const GridDomain>(spec); }

DomainPtr unit_box(int n) {
  DomainSpec s;
  s.resolution = {n, n, n};
  return build_domain(s);
}

DomainPtr unit_box_with_cavity(int n, double lo, double hi) {
  DomainSpec s;
  s.resolution = {n, n, n};
  s.mask = MaskSpec::box_minus_box;
  s.inner = {Interval{lo, hi}, Interval{lo, hi}, Interval{lo, hi}};
  return build_domain(s);
}

std::vector<Vec3> boundary_normals(const GridDomain& dom, const MetricField& g) {
  std::vector<Vec3> out(dom.boundary_nodes().size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const NodeId n = dom.boundary_nodes()[s];
    const auto& o = dom.outward_direction()[s];
    const Vec3 covector(o[0], o[1], o[2]);
    if (covector.squaredNorm() == 0.0) {
      out[s].setZero();
      continue;
    }
    const Vec3 v = g.inverse(n) * covector;
    out[s] = v / std::sqrt(covector.dot(v));
  }
  return out;
}

std::vector<BoundaryFacet> surface_facets(const GridDomain& dom, const MetricField& g) {
  std::vector<BoundaryFacet> out = dom.facets();
  for (auto& f : out) {
    const int b = (f.axis + 1) % 3, c = (f.axis + 2) % 3;
    const Mat3& m = g.at(f.node);
    f.weight *= std::sqrt(m(b, b) * m(c, c) - m(b, c) * m(c, b));
  }
  return out;
}

std::vector<double> surface_weights(const GridDomain& dom, const MetricField& g) {
  std::vector<double> w(dom.boundary_nodes().size(), 0.0);
  for (const auto& f : surface_facets(dom, g)) w[dom.boundary_slot(f.node)] += f.weight;
  return w;
}

}  // namespace hqf
