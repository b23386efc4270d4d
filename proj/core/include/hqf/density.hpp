#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "hqf/control.hpp"
#include "hqf/quaternion.hpp"

namespace hqf {

struct PairSeparation {
  NodeId a = 0, b = 0;
  double margin = 0.0;  // max_f | |grad w^f(a)|^2 - |grad w^f(b)|^2 |
  bool degenerate = false;
  bool separated = false;
};

struct ScalarSeparationReport {
  std::vector<PairSeparation> pairs;
  double min_coverage = 0.0;  // min over interior nodes of max_f |grad w^f|^2
  double threshold = 1e-4;
  bool small_dictionary = false;  // fewer than 10 controls
  bool pass = false;
};

/// Evaluates the features |grad w^f|^2 of the dictionary extensions.
ScalarSeparationReport scalar_separation_check(const MetricField& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                               const std::vector<ScalarField>& dictionary_harmonics,
                                               double threshold = 1e-4);

struct FrameBall {
  NodeId center = 0;
  double radius = 0.0;
  std::array<BoundaryControl, 3> controls;
  std::array<VectorField, 3> gradients;  // grad w^{f_k}, boundary nodes included
  double worst_condition = 0.0;          // max over the ball of cond[grad w^{f_1..3}]
};

struct FrameCover {
  std::vector<FrameBall> balls;
  std::vector<ScalarField> eta;  // partition of unity, one per ball
  double max_condition = 1e4;
};

struct FrameCoverOptions {
  double initial_radius = 0.45;  // as a fraction of the largest box extent
  double shrink = 0.8;
  int max_levels = 4;
  double max_condition = 1e4;
};

/// Greedy cover by balls centered on a dyadic sublattice of the box, with
/// frame controls synthesized so that grad w^{f_k}(center) = e_k.
FrameCover build_frame_cover(const DirichletOperator& op, const ControlBasis& basis,
                             const std::vector<ScalarField>& harmonics, const FrameCoverOptions& opts = {});

struct Representation {
  std::vector<ScalarField> eta_alpha;             // eta_n alpha
  std::vector<std::array<ScalarField, 3>> kappa;  // kappa_k^n
  QuaternionField reconstruction;
  double error = 0.0;  // sup_norm(reconstruction - p)
};

/// p = sum {eta_n alpha, 0} + sum_n sum_k {kappa_k^n, 0}{0, grad w^{f_k^n}}.
Representation represent(const QuaternionField& p, const FrameCover& cover, const MetricField& g);

/// Formal sum of products of generators. Every monomial is an ordered list
/// of gradient generators {0, grad w^{f_j}} (dictionary ids); a term is
/// coeff * monomial, optionally followed by a frame generator
/// {0, grad w^{f_k^n}} (frame id 3n + k). An empty monomial is the unit.
struct AlgebraElement {
  struct Term {
    double coeff = 0.0;
    std::size_t monomial = 0;
    int frame = -1;
  };
  std::vector<std::vector<int>> monomials;
  std::vector<Term> terms;
  std::vector<std::string> dictionary_labels;

  std::size_t depth() const;
  /// JSON expression tree {op: sum, terms: [{op: prod, coeff, leaves: [...]}]}.
  std::string to_json() const;
  /// Evaluates with true quaternion products of the generator fields.
  QuaternionField evaluate(const MetricField& g, const std::vector<VectorField>& dictionary_gradients,
                           const FrameCover& cover) const;
};

struct FeatureCaps {
  std::size_t degree2 = 12;
  std::size_t degree3 = 8;
  std::size_t degree4 = 6;
};

struct Approximation {
  AlgebraElement element;
  QuaternionField value;
  double sup_error = 0.0;
  double ls_objective = 0.0;  // sum of squared fit residuals over all coefficient functions
  std::size_t columns = 0;
};

/// Replaces alpha and every kappa_k^n by a least-squares polynomial in the
/// features |grad w^{f_j}|^2. Degree d uses all features linearly and the
/// leading caps.degreeN features for monomials of degree N <= d, so the
/// model spaces are nested in d.
Approximation approximate_in_algebra(const QuaternionField& p, const FrameCover& cover, const MetricField& g,
                                     const ControlBasis& dictionary, const std::vector<ScalarField>& harmonics,
                                     int degree, const FeatureCaps& caps = {});

}  // namespace hqf
