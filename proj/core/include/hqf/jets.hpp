#pragma once

#include <vector>

#include <Eigen/Core>

#include "hqf/controls.hpp"
#include "hqf/field.hpp"
#include "hqf/metric.hpp"

namespace hqf {

/// 2-jet {phi; phi_1, phi_2, phi_3; phi_11, phi_12, phi_13, phi_22, phi_23, phi_33}.
using Jet2 = Eigen::Matrix<double, 10, 1>;
/// Same layout; the Laplace jet represents Lap at a point: (Lap phi)(a) = <lambda_a, j_a[phi]>.
using LaplaceJet = Jet2;

/// Slot of the g^11 entry (also the sign reference for null vectors).
inline constexpr int kJetG11Slot = 4;

/// Weighted least-squares quadratic fit over the nodes within 3 grid steps,
/// weights (1 - (r/3)^2)^3 in grid units. Exact for polynomials of degree <= 2.
/// fit_degree 3 or 4 adds higher monomials to the same fit (still returning
/// the 2-jet), which removes their leakage into the low-order slots.
Jet2 extract_jet(const ScalarField& phi, NodeId a, int fit_degree = 2);

/// lambda_a = {0; drift; g^11, 2g^12, 2g^13, g^22, 2g^23, g^33} with
/// drift^k = g^{-1/2} (g^{1/2} g^{ik})_{,i} by central differences.
LaplaceJet laplace_jet(const MetricField& g, NodeId a);

struct JetRankStudy {
  Eigen::VectorXd sigma;       // singular values of the stacked jets, nonincreasing
  int rank = 0;                // count of sigma_i >= threshold * sigma_1
  Jet2 null_vector;            // right singular vector of the smallest sigma, g^11 slot >= 0
  double cosine = 0.0;         // |cos| between null_vector and the reference jet (0 if none)
};

/// Stacks j_a[w_m] as rows and analyses the spectrum.
JetRankStudy jet_rank_study(const std::vector<ScalarField>& harmonics, NodeId a, const Jet2& reference,
                            double threshold = 1e-3);

struct JetControlResult {
  BoundaryControl control;
  Eigen::VectorXd coefficients;
  Jet2 achieved;
  double relative_defect = 0.0;  // |achieved - s| / |s|
};

/// Least-squares combination of the basis controls whose harmonic extension
/// has 2-jet s at a. `harmonics` holds the extensions of `basis` (as from
/// harmonic_extensions). Throws PreconditionError unless s is orthogonal to
/// lambda_a (|<s, lambda>| <= 1e-8 |s| |lambda|) and the basis has >= 20 controls.
JetControlResult jet_control(const MetricField& g, NodeId a, const Jet2& s, const ControlBasis& basis,
                             const std::vector<ScalarField>& harmonics);

}  // namespace hqf
