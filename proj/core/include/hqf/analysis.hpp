#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hqf/elliptic.hpp"
#include "hqf/quaternion.hpp"

namespace hqf {

struct DirichletFieldBasis {
  std::vector<VectorField> fields;      // d = grad phi
  std::vector<ScalarField> potentials;  // phi = 1 on one inner component, 0 elsewhere on the boundary
  std::vector<double> curl_residual;    // ||rot d||_inf at depth >= 2
  std::vector<double> div_residual;     // ||div d||_inf at depth >= 2
  std::vector<double> tangential_residual;  // max tangential part of d at face-interior boundary nodes
  /// Outward flux of d through each boundary component (component 0 =
  /// outer), per field, from the solver's own boundary couplings. Their sum
  /// vanishes to solver tolerance when d is discretely divergence-free.
  std::vector<std::vector<double>> component_flux;
  std::vector<double> total_flux;
  /// Same fluxes by one-sided normal derivatives times d(sigma); carries the
  /// staircase error at edges and corners.
  std::vector<std::vector<double>> quadrature_flux;
};

/// Basis of the discrete Dirichlet space: one field per inner boundary
/// component. Empty for a single boundary component.
DirichletFieldBasis dirichlet_basis(const DirichletOperator& op);

/// Nodes on 1 or more adjacent coordinate planes x^axis = const, restricted
/// to depth >= 3.
struct SurfacePatch {
  int axis = 2;
  int level = 0;   // central plane index
  int layers = 1;  // odd: planes level - layers/2 .. level + layers/2
  std::vector<NodeId> nodes;
};

/// Patch on the plane nearest to x^axis = coordinate.
SurfacePatch make_plane_patch(const GridDomain& dom, int axis, double coordinate, int layers = 1);

struct SurfaceIdentityResult {
  double residual = 0.0;  // max |nu . rot v - div_S(v_t ^ nu)|
  double lhs_sup = 0.0;
  double rhs_sup = 0.0;
};

/// nu . rot v = div_S(v_t ^ nu) on a plane patch, flat metric only.
SurfaceIdentityResult surface_identity_check(const VectorField& v, const SurfacePatch& patch, const MetricField& g);

struct ProbeRow {
  std::size_t field = 0;
  double sup_on_patch = 0.0;
  double sup_on_domain = 0.0;
  double ratio = 0.0;
};

struct ProbeResult {
  double ratio = 0.0;      // sigma_min / sigma_max of the normalized restriction
  double sigma_min = 0.0;  // of the restriction matrix (rows scaled by 1 / sup_norm)
  double sigma_max = 0.0;
  bool rank_deficient = false;  // the basis itself is dependent on the whole domain
  std::vector<ProbeRow> table;
  std::string header;
};

/// Finite-dimensional certificate: no normalized field of span(basis) is
/// small on the patch. Throws PreconditionError when a basis field's
/// relative Q-residual exceeds `q_tolerance` or the patch has fewer than
/// 4 nodes per basis field.
ProbeResult uniqueness_probe(const std::vector<QuaternionField>& basis, const SurfacePatch& patch, const MetricField& g,
                             double q_tolerance = 5e-2);

/// {0, grad w} for each nonconstant harmonic (boundary included) plus the flat-metric
/// fields {-2x, (0,z,-y)}, {-2y, (-z,0,x)}, {-2z, (y,-x,0)}, {1, 0} in
/// box-centered coordinates.
std::vector<QuaternionField> default_probe_basis(const MetricField& g, const std::vector<ScalarField>& harmonics);

/// Axis-aligned rectangle of grid edges in the plane x^normal_axis = level,
/// corners given by in-plane node indices (axes normal+1, normal+2 mod 3),
/// traversed counterclockwise about +e_normal.
struct GridLoop {
  int normal_axis = 2;
  int level = 0;
  std::array<int, 2> lo{0, 0};
  std::array<int, 2> hi{0, 0};
};

/// Trapezoidal sum of g(u, t) ds along the loop. Throws PreconditionError
/// if a loop node is outside the domain.
double circulation(const VectorField& u, const GridLoop& loop, const MetricField& g);

}  // namespace hqf
