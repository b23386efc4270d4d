#pragma once

#include <cstddef>
#include <vector>

namespace hqf {

/// Compressed sparse row matrix.
struct CsrMatrix {
  std::size_t rows = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> diagonal() const;
};

struct CgOptions {
  double relative_tolerance = 1e-11;
  std::size_t max_iterations = 0;  // 0: 20 * N^(1/3) * 1000
};

struct CgResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradient for an SPD matrix. `x` holds the
/// initial guess on entry. Reductions run in a fixed order, so results are
/// bit-reproducible.
CgResult conjugate_gradient(const CsrMatrix& a, const std::vector<double>& inv_diag, const std::vector<double>& b,
                            std::vector<double>& x, const CgOptions& opts = {});

}  // namespace hqf
