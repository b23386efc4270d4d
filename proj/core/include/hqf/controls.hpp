#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hqf/elliptic.hpp"

namespace hqf {

/// A list of boundary controls with a printable description of each.
struct ControlBasis {
  std::vector<BoundaryControl> controls;
  std::vector<std::string> labels;

  std::size_t size() const { return controls.size(); }
  void append(const ControlBasis& o);
};

/// Traces of the 16 harmonic polynomials of degree <= 3 (constant first),
/// in coordinates centered on the box and scaled by its half-diagonal.
ControlBasis harmonic_polynomial_controls(const DomainPtr& dom);

/// Seeded random band-limited boundary data, a sum of two flat-harmonic waves
/// f(x) = sum_m a_m exp(k_m p_m . y) cos(k_m q_m . y + phase_m),
/// p_m and q_m orthonormal, k_m in [0.3 pi, pi], y = (x - center) / max side.
/// Each control is scaled to unit sup norm. Traces of exactly harmonic functions avoid the edge and corner layers that
/// generic smooth data produces in the discrete extension.
ControlBasis random_band_limited_controls(const DomainPtr& dom, std::size_t count, std::uint64_t seed);

/// Harmonic polynomials first, then random band-limited data up to `size`.
ControlBasis default_dictionary(const DomainPtr& dom, std::size_t size, std::uint64_t seed);

/// Harmonic extensions of every control, solved on up to `jobs` threads.
std::vector<ScalarField> harmonic_extensions(const DirichletOperator& op, const std::vector<BoundaryControl>& controls,
                                             int jobs = 1);

}  // namespace hqf
