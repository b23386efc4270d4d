#include <benchmark/benchmark.h>

#include "hqf/calculus.hpp"
#include "hqf/controls.hpp"
#include "hqf/elliptic.hpp"
#include "hqf/jets.hpp"
#include "hqf/quaternion.hpp"

using namespace hqf;

static void BM_HarmonicExtension(benchmark::State& state) {
  const auto dom = unit_box(static_cast<int>(state.range(0)));
  const auto op = assemble(metrics::generic_smooth(dom));
  const auto f = harmonic_polynomial_controls(dom).controls[5];
  for (auto _ : state) benchmark::DoNotOptimize(harmonic_extension(op, f));
}
BENCHMARK(BM_HarmonicExtension)->Arg(17)->Arg(33)->Unit(benchmark::kMillisecond);

static void BM_Assemble(benchmark::State& state) {
  const auto dom = unit_box(static_cast<int>(state.range(0)));
  const auto g = metrics::generic_smooth(dom);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(g));
}
BENCHMARK(BM_Assemble)->Arg(33)->Unit(benchmark::kMillisecond);

static void BM_ExtractJet(benchmark::State& state) {
  const auto dom = unit_box(33);
  const auto phi = ScalarField::sample(dom, [](const Vec3& x) { return std::sin(3 * x[0]) * std::exp(x[1]) + x[2]; });
  const NodeId a = dom->id(16, 16, 16);
  const int degree = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(extract_jet(phi, a, degree));
}
BENCHMARK(BM_ExtractJet)->Arg(2)->Arg(4);

static void BM_FieldProduct(benchmark::State& state) {
  const auto dom = unit_box(33);
  const auto g = metrics::generic_smooth(dom);
  const QuaternionField p(ScalarField::sample(dom, [](const Vec3& x) { return x[0] - x[1]; }),
                          VectorField::sample(dom, [](const Vec3& x) { return Vec3(x[2], 1, x[0] * x[1]); }));
  for (auto _ : state) benchmark::DoNotOptimize(field_mul(p, p, g));
}
BENCHMARK(BM_FieldProduct)->Unit(benchmark::kMillisecond);

static void BM_Rot(benchmark::State& state) {
  const auto dom = unit_box(33);
  const auto g = metrics::conformal_sine(dom);
  const auto u = VectorField::sample(dom, [](const Vec3& x) { return Vec3(std::sin(x[1]), x[2] * x[0], std::cos(x[0])); });
  for (auto _ : state) benchmark::DoNotOptimize(rot(u, g));
}
BENCHMARK(BM_Rot)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
