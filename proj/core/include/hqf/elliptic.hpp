#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hqf/field.hpp"
#include "hqf/metric.hpp"
#include "hqf/sparse.hpp"

namespace hqf {

/// Dirichlet datum f: one value per boundary node (boundary_nodes() order).
class BoundaryControl {
 public:
  BoundaryControl() = default;
  explicit BoundaryControl(DomainPtr dom, double fill = 0.0)
      : dom_(std::move(dom)), v_(dom_->boundary_nodes().size(), fill) {}
  BoundaryControl(DomainPtr dom, std::vector<double> values);

  static BoundaryControl sample(DomainPtr dom, const std::function<double(const Vec3&)>& f);
  static BoundaryControl trace(const ScalarField& f);

  const DomainPtr& domain() const { return dom_; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }
  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t s) const { return v_[s]; }
  double& operator[](std::size_t s) { return v_[s]; }
  double sup() const;

  /// Scalar field equal to f on the boundary and 0 elsewhere.
  ScalarField as_field() const;

 private:
  DomainPtr dom_;
  std::vector<double> v_;
};

struct SolveStats {
  std::size_t iterations = 0;
  double cg_relative_residual = 0.0;
  /// ||Lap v - h||_inf h^2 / max(||h||_inf h^2, ||f||_inf, 1e-300)
  double relative_residual = 0.0;
};

/// Assembled -sqrt(g) Lap on interior nodes (SPD) plus the coupling of the
/// interior equations to boundary values. Immutable; concurrent solves with
/// distinct right-hand sides are safe.
class DirichletOperator {
 public:
  DirichletOperator(std::shared_ptr<const MetricField> g, CgOptions cg);

  const DomainPtr& domain() const { return g_->domain(); }
  const MetricField& metric() const { return *g_; }
  const std::shared_ptr<const MetricField>& metric_ptr() const { return g_; }
  const CsrMatrix& matrix() const { return a_; }
  const CgOptions& cg_options() const { return cg_; }
  /// max |A_ij - A_ji| over stored entries.
  double max_asymmetry() const;

  /// Row index of an interior node, or npos.
  std::size_t row_of(NodeId n) const { return row_[n]; }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Coupling {
    std::size_t row;
    std::size_t boundary_slot;
    double coeff;  // entry of sqrt(g) Lap
  };
  const std::vector<Coupling>& boundary_coupling() const { return coupling_; }

  /// Solves A x = b with the operator's CG settings; throws NumericalError on
  /// non-convergence.
  CgResult solve_interior(const std::vector<double>& b, std::vector<double>& x) const;

 private:
  std::shared_ptr<const MetricField> g_;
  CgOptions cg_;
  CsrMatrix a_;
  std::vector<double> inv_diag_;
  std::vector<std::size_t> row_;
  std::vector<Coupling> coupling_;
};

/// Builds the operator; the metric must be SPD (checked when the MetricField
/// was constructed).
DirichletOperator assemble(const MetricField& g, CgOptions cg = {});

/// Lap v = h in the interior, v = f on the boundary.
ScalarField solve_dirichlet(const DirichletOperator& op, const ScalarField& h, const BoundaryControl& f,
                            SolveStats* stats = nullptr);

/// w^f: the discrete harmonic extension of f.
ScalarField harmonic_extension(const DirichletOperator& op, const BoundaryControl& f, SolveStats* stats = nullptr);

/// Discrete Green function G(., y): Lap G = delta_y with delta normalized to
/// 1 / (h1 h2 h3 sqrt(g(y))), zero on the boundary. With this sign
/// v^h(x) = sum_y G(x, y) h(y) sqrt(g(y)) h1 h2 h3.
struct GreenColumn {
  ScalarField values;
  NodeId source = 0;
};
GreenColumn green_column(const DirichletOperator& op, NodeId y);

enum class KernelKind { value, gradient };

/// Boundary weights k_s such that sum_s k_s f_s approximates w^f(x)
/// (value kind) or e . grad w^f(x) (gradient kind). Weights already include
/// d(sigma).
struct PoissonKernel {
  NodeId source = 0;
  KernelKind kind = KernelKind::value;
  Vec3 direction = Vec3::Zero();
  std::vector<double> weights;

  double apply(const BoundaryControl& f) const;
  double total() const;
};
PoissonKernel poisson_kernel(const DirichletOperator& op, NodeId x, KernelKind kind = KernelKind::value,
                             const Vec3& direction = Vec3::Zero());

/// Outward normal derivative of a field vanishing on the boundary, times
/// d(sigma), accumulated per boundary node (second-order one-sided along the
/// inward axis of each boundary facet).
std::vector<double> normal_flux_weights(const ScalarField& zero_trace_field, const MetricField& g);

struct DivCurlResult {
  VectorField u;
  double curl_defect = 0.0;       // ||rot u - v||_inf at depth >= 2
  double div_defect = 0.0;        // ||div u||_inf at depth >= 2
  double relative_curl_defect = 0.0;  // curl_defect / ||v||_inf
  bool flagged = false;           // relative_curl_defect above the acceptance tolerance
};

/// Finds u with rot u = v for a divergence-free v on a plain box. v must be
/// defined on interior and boundary nodes. The gauge: a covector potential
/// with vanishing x3 component built by line integration, followed by a
/// gradient correction that removes div u.
DivCurlResult divcurl_solve(const DirichletOperator& op, const VectorField& v, double tolerance = 5e-2);

/// Field file with descriptor {source_node, kind, direction} in the sidecar.
void export_green_column(const std::filesystem::path& stem, const GreenColumn& col);
/// Kernel weights scattered to their boundary nodes (zero elsewhere).
void export_kernel(const std::filesystem::path& stem, const GridDomain& dom, const PoissonKernel& k);

}  // namespace hqf
