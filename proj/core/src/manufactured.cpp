#include "hqf/manufactured.hpp"

#include <cmath>
#include <numbers>

namespace hqf {

double Manufactured::laplacian(const Vec3& x) const {
  constexpr double d = 1e-3;
  auto flux = [&](const Vec3& y, int i) {
    const Mat3 g = metric(y);
    return std::sqrt(g.determinant()) * (g.inverse().row(i).dot(grad_u(y)));
  };
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = d;
    sum += (-flux(x + 2 * e, i) + 8 * flux(x + e, i) - 8 * flux(x - e, i) + flux(x - 2 * e, i)) / (12 * d);
  }
  return sum / std::sqrt(metric(x).determinant());
}

Manufactured default_manufactured(MetricField::Sampler metric) {
  using std::numbers::pi;
  Manufactured m;
  m.u = [](const Vec3& x) {
    return std::sin(pi * x[0]) * std::sin(pi * x[1]) * std::sin(pi * x[2]) + x[0] * x[1] + 0.5 * x[2] * x[2];
  };
  m.grad_u = [](const Vec3& x) {
    const double s0 = std::sin(pi * x[0]), s1 = std::sin(pi * x[1]), s2 = std::sin(pi * x[2]);
    const double c0 = std::cos(pi * x[0]), c1 = std::cos(pi * x[1]), c2 = std::cos(pi * x[2]);
    return Vec3(pi * c0 * s1 * s2 + x[1], pi * s0 * c1 * s2 + x[0], pi * s0 * s1 * c2 + x[2]);
  };
  m.metric = std::move(metric);
  return m;
}

}  // namespace hqf
