#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hqf {

using NodeId = std::size_t;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

using Box = std::array<Interval, 3>;

enum class NodeKind : std::uint8_t { interior, boundary, exterior };

enum class MaskSpec {
  box,            // plain box
  box_minus_box,  // box with a box-shaped cavity (two boundary components)
  box_minus_column,  // box with a square column removed along x3 (solid torus)
};

std::string to_string(MaskSpec m);
MaskSpec mask_from_string(const std::string& s);

struct DomainSpec {
  Box box{};
  std::array<int, 3> resolution{9, 9, 9};
  MaskSpec mask = MaskSpec::box;
  /// Removed region for the non-box masks. For box_minus_column only the
  /// x1/x2 intervals are used.
  Box inner{};
};

/// One boundary face contribution: the node lies on an axis-aligned face
/// whose outward normal is `side` * e_axis (coordinate covector direction).
struct BoundaryFacet {
  NodeId node = 0;
  int axis = 0;
  int side = 1;  // +1 or -1
  double weight = 0.0;  // share of d(sigma), including the induced-metric area factor
  int component = 0;
};

struct Index3 {
  int i = 0, j = 0, k = 0;
  int operator[](int a) const { return a == 0 ? i : (a == 1 ? j : k); }
  int& operator[](int a) { return a == 0 ? i : (a == 1 ? j : k); }
};

class MetricField;

/// Voxel discretization of a coordinate box, possibly with a removed
/// region. Nodes are numbered x1-fastest.
class GridDomain {
 public:
  explicit GridDomain(const DomainSpec& spec);

  const DomainSpec& spec() const { return spec_; }
  const Box& box() const { return spec_.box; }
  const std::array<int, 3>& dims() const { return spec_.resolution; }
  const std::array<double, 3>& spacing() const { return spacing_; }
  double cell_volume() const { return spacing_[0] * spacing_[1] * spacing_[2]; }
  MaskSpec mask() const { return spec_.mask; }

  std::size_t node_count() const { return kind_.size(); }
  NodeId id(int i, int j, int k) const {
    return static_cast<NodeId>(i) +
           static_cast<NodeId>(dims()[0]) *
               (static_cast<NodeId>(j) + static_cast<NodeId>(dims()[1]) * static_cast<NodeId>(k));
  }
  NodeId id(const Index3& c) const { return id(c.i, c.j, c.k); }
  Index3 index(NodeId n) const;
  bool in_grid(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims()[0] && j < dims()[1] && k < dims()[2];
  }
  Vec3 position(NodeId n) const;
  Vec3 position(const Index3& c) const;

  NodeKind kind(NodeId n) const { return kind_[n]; }
  bool is_interior(NodeId n) const { return kind_[n] == NodeKind::interior; }
  bool is_boundary(NodeId n) const { return kind_[n] == NodeKind::boundary; }
  bool in_domain(NodeId n) const { return kind_[n] != NodeKind::exterior; }

  /// Chebyshev layer distance to the nearest non-interior node
  /// (0 on the boundary, -1 for exterior nodes).
  int depth(NodeId n) const { return depth_[n]; }

  const std::vector<NodeId>& interior_nodes() const { return interior_; }
  const std::vector<NodeId>& boundary_nodes() const { return boundary_; }
  /// Position of a boundary node inside boundary_nodes(), or npos.
  std::size_t boundary_slot(NodeId n) const { return boundary_slot_[n]; }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Connected-component label (26-connectivity) of each boundary node, in
  /// boundary_nodes() order. Component 0 contains the outer box surface.
  const std::vector<int>& boundary_component() const { return component_; }
  int boundary_component_count() const { return component_count_; }

  /// Outward covector direction (unnormalized, entries in {-1,0,1}) per
  /// boundary node, boundary_nodes() order.
  const std::vector<std::array<int, 3>>& outward_direction() const { return outward_; }

  /// Flat-metric facets (weights are plain coordinate areas).
  const std::vector<BoundaryFacet>& facets() const { return facets_; }

  /// Counts of interior / boundary / exterior nodes.
  std::array<std::size_t, 3> census() const;

 private:
  void classify();
  void label_components();
  void build_normals();
  void build_facets();

  DomainSpec spec_;
  std::array<double, 3> spacing_{};
  std::vector<NodeKind> kind_;
  std::vector<int> depth_;
  std::vector<NodeId> interior_;
  std::vector<NodeId> boundary_;
  std::vector<std::size_t> boundary_slot_;
  std::vector<int> component_;
  int component_count_ = 0;
  std::vector<std::array<int, 3>> outward_;
  std::vector<BoundaryFacet> facets_;
  // Node-index range of the removed region (closed), per axis.
  std::array<int, 3> cut_lo_{}, cut_hi_{};
};

using DomainPtr = std::shared_ptr<const GridDomain>;

/// Validates the spec and constructs a shared domain.
DomainPtr build_domain(const DomainSpec& spec);

/// Convenience: unit box [0,1]^3 with n nodes per axis.
DomainPtr unit_box(int n);

/// Unit box with the cube cavity [lo,hi]^3 removed.
DomainPtr unit_box_with_cavity(int n, double lo = 0.4, double hi = 0.6);

/// Boundary unit normals (unit in the metric at each node), boundary_nodes() order.
std::vector<Vec3> boundary_normals(const GridDomain& dom, const MetricField& g);

/// Facets with surface weights h_b h_c * trapezoid factor * sqrt(det g restricted to the face).
std::vector<BoundaryFacet> surface_facets(const GridDomain& dom, const MetricField& g);

/// Per-boundary-node total surface weight (sum over its facets), boundary_nodes() order.
std::vector<double> surface_weights(const GridDomain& dom, const MetricField& g);

}  // namespace hqf
