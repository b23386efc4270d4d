#include "hqf/controls.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hqf/parallel.hpp"

namespace hqf {

void ControlBasis::append(const ControlBasis& o) {
  controls.insert(controls.end(), o.controls.begin(), o.controls.end());
  labels.insert(labels.end(), o.labels.begin(), o.labels.end());
}

namespace {

struct Poly {
  const char* label;
  double (*f)(double, double, double);
};

constexpr Poly kHarmonic[] = {
    {"1", [](double, double, double) { return 1.0; }},
    {"x", [](double x, double, double) { return x; }},
    {"y", [](double, double y, double) { return y; }},
    {"z", [](double, double, double z) { return z; }},
    {"xy", [](double x, double y, double) { return x * y; }},
    {"yz", [](double, double y, double z) { return y * z; }},
    {"xz", [](double x, double, double z) { return x * z; }},
    {"x^2-y^2", [](double x, double y, double) { return x * x - y * y; }},
    {"y^2-z^2", [](double, double y, double z) { return y * y - z * z; }},
    {"xyz", [](double x, double y, double z) { return x * y * z; }},
    {"x^3-3xy^2", [](double x, double y, double) { return x * x * x - 3 * x * y * y; }},
    {"x^3-3xz^2", [](double x, double, double z) { return x * x * x - 3 * x * z * z; }},
    {"y^3-3yx^2", [](double x, double y, double) { return y * y * y - 3 * y * x * x; }},
    {"y^3-3yz^2", [](double, double y, double z) { return y * y * y - 3 * y * z * z; }},
    {"z^3-3zx^2", [](double x, double, double z) { return z * z * z - 3 * z * x * x; }},
    {"z^3-3zy^2", [](double, double y, double z) { return z * z * z - 3 * z * y * y; }},
};

}  // namespace

ControlBasis harmonic_polynomial_controls(const DomainPtr& dom) {
  const Box& b = dom->box();
  const Vec3 c(0.5 * (b[0].lo + b[0].hi), 0.5 * (b[1].lo + b[1].hi), 0.5 * (b[2].lo + b[2].hi));
  const double s =
      0.5 * std::sqrt(b[0].length() * b[0].length() + b[1].length() * b[1].length() + b[2].length() * b[2].length());
  ControlBasis out;
  for (const auto& p : kHarmonic) {
    out.controls.push_back(BoundaryControl::sample(dom, [&](const Vec3& x) {
      const Vec3 y = (x - c) / s;
      return p.f(y[0], y[1], y[2]);
    }));
    out.labels.emplace_back(std::string("harmonic:") + p.label);
  }
  return out;
}

ControlBasis random_band_limited_controls(const DomainPtr& dom, std::size_t count, std::uint64_t seed) {
  constexpr int kModes = 2;
  constexpr double kMinWave = 0.3 * std::numbers::pi;
  constexpr double kMaxWave = std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Box& b = dom->box();
  const Vec3 c(0.5 * (b[0].lo + b[0].hi), 0.5 * (b[1].lo + b[1].hi), 0.5 * (b[2].lo + b[2].hi));
  const double len = std::max({b[0].length(), b[1].length(), b[2].length()});

  auto random_unit = [&] {
    Vec3 v(normal(rng), normal(rng), normal(rng));
    while (v.norm() < 1e-8) v = Vec3(normal(rng), normal(rng), normal(rng));
    return Vec3(v.normalized());
  };

  ControlBasis out;
  for (std::size_t m = 0; m < count; ++m) {
    std::array<Vec3, kModes> p{}, q{};
    std::array<double, kModes> k{}, a{}, ph{};
    for (int j = 0; j < kModes; ++j) {
      p[j] = random_unit();
      Vec3 t = random_unit();
      while ((t - t.dot(p[j]) * p[j]).norm() < 1e-3) t = random_unit();
      q[j] = (t - t.dot(p[j]) * p[j]).normalized();
      k[j] = kMinWave + (kMaxWave - kMinWave) * unit(rng);
      a[j] = 2.0 * unit(rng) - 1.0;
      ph[j] = 2.0 * std::numbers::pi * unit(rng);
    }
    out.controls.push_back(BoundaryControl::sample(dom, [&](const Vec3& x) {
      const Vec3 y = (x - c) / len;
      double v = 0.0;
      for (int j = 0; j < kModes; ++j) v += a[j] * std::exp(k[j] * p[j].dot(y)) * std::cos(k[j] * q[j].dot(y) + ph[j]);
      return v;
    }));
    auto& f = out.controls.back();
    if (const double s = f.sup(); s > 0.0)
      for (double& v : f.values()) v /= s;
    std::ostringstream os;
    os << "random:seed=" << seed << ":index=" << m;
    out.labels.push_back(os.str());
  }
  return out;
}

ControlBasis default_dictionary(const DomainPtr& dom, std::size_t size, std::uint64_t seed) {
  ControlBasis out = harmonic_polynomial_controls(dom);
  if (size <= out.size()) {
    out.controls.resize(size);
    out.labels.resize(size);
    return out;
  }
  out.append(random_band_limited_controls(dom, size - out.size(), seed));
  return out;
}

std::vector<ScalarField> harmonic_extensions(const DirichletOperator& op, const std::vector<BoundaryControl>& controls,
                                             int jobs) {
  std::vector<ScalarField> out(controls.size());
  parallel_for(controls.size(), jobs, [&](std::size_t m) { out[m] = harmonic_extension(op, controls[m]); });
  return out;
}

}  // namespace hqf
