#pragma once

#include <vector>

#include "hqf/field.hpp"
#include "hqf/metric.hpp"

namespace hqf {

// Intrinsic vector calculus on the collocated grid. Differential operators
// use second-order central differences in the coordinates and produce values
// at interior nodes only; boundary and exterior entries of the result are 0.
// The orientation is right-handed: dmu(e1, e2, e3) = sqrt(det g) > 0.

/// Pointwise g(u, v).
ScalarField inner(const VectorField& u, const VectorField& v, const MetricField& g);

/// Pointwise u ^ v defined by g(u ^ v, w) = dmu(u, v, w).
VectorField vector_product(const VectorField& u, const VectorField& v, const MetricField& g);

/// Single-node versions of the algebraic products.
double inner_at(const Vec3& u, const Vec3& v, const MetricField& g, NodeId n);
Vec3 vector_product_at(const Vec3& u, const Vec3& v, const MetricField& g, NodeId n);

/// (grad a)^i = g^{ik} a_{,k}
VectorField grad(const ScalarField& a, const MetricField& g);
/// div u = g^{-1/2} (sqrt(g) u^i)_{,i}
ScalarField div(const VectorField& u, const MetricField& g);
/// (rot u)^k = g^{-1/2} eps_{kij} (g_{jm} u^m)_{,i}
VectorField rot(const VectorField& u, const MetricField& g);

/// Laplace-Beltrami operator. At depth >= 2 it is exactly div(grad(a)); at
/// depth-1 nodes (where the composition would need boundary gradients) it
/// falls back to the compact conservative stencil used by the Dirichlet
/// solver.
ScalarField laplacian(const ScalarField& a, const MetricField& g);

/// grad div u - rot rot u; valid at depth >= 2, zero elsewhere.
VectorField vector_laplacian(const VectorField& u, const MetricField& g);

/// Gradient that also fills boundary nodes using second-order one-sided
/// differences along axes that leave the domain. Used to build quaternion
/// fields that must be defined on the closed domain.
VectorField gradient_with_boundary(const ScalarField& a, const MetricField& g);

/// Pointwise evaluation; throws PreconditionError for non-interior nodes.
Vec3 grad_at(const ScalarField& a, const MetricField& g, NodeId n);
double laplacian_at(const ScalarField& a, const MetricField& g, NodeId n);

struct StencilEntry {
  NodeId node;
  double coeff;
};

/// Row of the conservative operator sqrt(g) * Laplacian at an interior node:
/// diagonal fluxes use midpoint means of sqrt(g) g^{ii}, mixed terms use
/// centered products of sqrt(g) g^{ik}. The assembled matrix is symmetric.
void flux_stencil(const MetricField& g, NodeId n, std::vector<StencilEntry>& row);

/// Coordinate partial derivative d/dx^axis at an interior node (central).
double central_partial(const std::vector<double>& f, const GridDomain& dom, NodeId n, int axis);

}  // namespace hqf
