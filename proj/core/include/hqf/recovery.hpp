#pragma once

#include <optional>
#include <vector>

#include "hqf/jets.hpp"
#include "hqf/metric.hpp"

namespace hqf {

struct LaplaceJetEstimate {
  LaplaceJet jet;         // unit norm, slot 0 = 0, g^11 slot > 0
  double residual = 0.0;  // sigma_min / sigma_max over slots 1..9
  Eigen::VectorXd sigma;
};

/// Null direction of the stacked harmonic jets restricted to slots 1..9.
/// Throws PreconditionError for fewer than 15 samples or a node closer than
/// 3 layers to the boundary, NumericalError when the residual exceeds 0.1 or
/// the null space is not one-dimensional.
LaplaceJetEstimate recover_laplace_jet(const std::vector<ScalarField>& harmonics, NodeId a, int fit_degree = 2);

/// Reads c * g^{-1} from the second-order slots, inverts it and normalizes
/// to det = 1. Throws NumericalError for a non-SPD readout.
Mat3 jets_to_metric(const LaplaceJet& lambda);

enum class ScaleMode {
  drift,           // pointwise scale integrated from the drift slots
  det_normalized,  // det g = const assumed; only the anchor fixes the scale
};

struct RecoveryOptions {
  ScaleMode scale = ScaleMode::drift;
  int min_depth = 3;
  int fit_degree = 2;
  int jobs = 1;
};

struct RecoveryResult {
  DomainPtr domain;
  std::vector<NodeId> nodes;           // recovered nodes
  std::vector<Mat3> unit_metric;       // det-1 estimate per node
  std::vector<double> log_scale;       // integrated ln det(g)^{1/3}, 0 in det_normalized mode
  std::vector<double> residual;        // per node sigma_min / sigma_max
  std::vector<double> drift_mismatch;  // |drift predicted by estimate - recovered drift| / |recovered drift|
  ScaleMode scale = ScaleMode::drift;
  std::size_t slot(NodeId n) const;    // position in nodes, or npos
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Mat3 uncalibrated(std::size_t i) const;
};

/// Per-node recovery on every node at depth >= min_depth of a plain box.
RecoveryResult recover_metric(const std::vector<ScalarField>& harmonics, const RecoveryOptions& opts = {});

struct Calibration {
  NodeId anchor = 0;
  double constant = 0.0;
  std::shared_ptr<const MetricField> metric;  // recovered nodes calibrated; others copy the nearest recovered node
  double anchor_residual = 0.0;               // |C g_hat(anchor) - g_anchor|_F / |g_anchor|_F
};

/// One global constant fitted at the anchor in Frobenius least squares.
Calibration calibrate(const RecoveryResult& r, NodeId anchor, const Mat3& g_anchor, double max_anchor_residual = 0.1);

struct RecoveryComparison {
  std::vector<double> relative_error;  // |g_hat - g|_F / |g|_F per recovered node
  std::vector<double> implied_scale;   // <g, g_hat_uncal> / <g_hat_uncal, g_hat_uncal> per node
  double max_relative_error = 0.0;
  double scale_mean = 0.0;
  double scale_spread = 0.0;  // std / mean of implied_scale
  bool spread_flagged = false;  // spread above 1%
};

RecoveryComparison compare_with_truth(const RecoveryResult& r, const Calibration& cal, const MetricField& truth);

/// Pointwise Lap_{cg} y - (c^{-1} Lap_g y - 1/2 grad(c^{-1}) . grad y) at
/// interior nodes (zero elsewhere). Throws PreconditionError if c <= 0.
ScalarField conformal_identity_check(const ScalarField& c, const MetricField& g, const ScalarField& y);

}  // namespace hqf
