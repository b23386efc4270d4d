#include <gtest/gtest.h>

#include "hqf/analysis.hpp"
#include "hqf/calculus.hpp"
#include "hqf/controls.hpp"
#include "hqf/error.hpp"
#include "test_support.hpp"

using namespace hqf;
using hqf::test::kPi;

namespace {

DomainPtr column_domain(int n) {
  DomainSpec s;
  s.resolution = {n, n, n};
  s.mask = MaskSpec::box_minus_column;
  s.inner = {Interval{0.4, 0.6}, Interval{0.4, 0.6}, Interval{0.0, 1.0}};
  return build_domain(s);
}

VectorField angle(const DomainPtr& dom) {
  return VectorField::sample(dom, [](const Vec3& x) {
    const double dx = x[0] - 0.5, dy = x[1] - 0.5;
    const double r2 = dx * dx + dy * dy;
    return Vec3(-dy / r2, dx / r2, 0);
  });
}

// Loop on the mid plane through nodes (lo, lo) .. (hi, hi) in x1/x2 node indices.
GridLoop square_loop(const GridDomain& dom, int lo, int hi) {
  GridLoop l;
  l.normal_axis = 2;
  l.level = dom.dims()[2] / 2;
  l.lo = {lo, lo};
  l.hi = {hi, hi};
  return l;
}

}  // namespace

TEST(DirichletBasis, PlainBoxIsEmpty) {
  const auto dom = unit_box(17);
  const auto op = assemble(metrics::flat(dom));
  EXPECT_TRUE(dirichlet_basis(op).fields.empty());
}

TEST(DirichletBasis, CavityFluxBalance) {
  const auto dom = unit_box_with_cavity(33);
  const auto op = assemble(metrics::flat(dom));
  const auto d = dirichlet_basis(op);
  ASSERT_EQ(d.fields.size(), 1u);
  ASSERT_EQ(d.component_flux[0].size(), 2u);
  const double outer = d.component_flux[0][0], inner = d.component_flux[0][1];
  RecordProperty("outer_flux", std::to_string(outer));
  RecordProperty("quadrature_total", std::to_string(d.quadrature_flux[0][0] + d.quadrature_flux[0][1]));
  EXPECT_NE(outer, 0.0);
  EXPECT_LT(outer * inner, 0.0);
  EXPECT_NEAR(d.total_flux[0], outer + inner, 1e-14 * std::abs(outer));
  EXPECT_LT(std::abs(d.total_flux[0]), 5e-2 * std::abs(outer));

  // phi = 1 on the inner surface and 0 outside it.
  const auto& phi = d.potentials[0];
  for (std::size_t s = 0; s < dom->boundary_nodes().size(); ++s)
    EXPECT_EQ(phi[dom->boundary_nodes()[s]], dom->boundary_component()[s] == 0 ? 0.0 : 1.0);
  EXPECT_LT(d.curl_residual[0], 1e-9);
  EXPECT_LT(d.tangential_residual[0], 1e-12);
}

TEST(DirichletBasis, OuterQuadratureFluxAgreesWithConservativeFlux) {
  const auto dom = unit_box_with_cavity(33);
  const auto op = assemble(metrics::flat(dom));
  const auto d = dirichlet_basis(op);
  EXPECT_NEAR(d.quadrature_flux[0][0], d.component_flux[0][0], 5e-2 * std::abs(d.component_flux[0][0]));
}

TEST(SurfaceIdentity, RotationField) {
  const auto dom = unit_box(17);
  const auto g = metrics::flat(dom);
  const auto v = VectorField::sample(dom, [](const Vec3& x) { return Vec3(0, x[2], -x[1]); });
  const auto res = surface_identity_check(v, make_plane_patch(*dom, 2, 0.5), g);
  EXPECT_LT(res.residual, 1e-10);
  EXPECT_LT(res.lhs_sup, 1e-10);
}

TEST(SurfaceIdentity, VortexField) {
  // v = (-y, x, 0): nu . rot v = 2 on x3 = const.
  const auto dom = unit_box(17);
  const auto g = metrics::flat(dom);
  const auto v = VectorField::sample(dom, [](const Vec3& x) { return Vec3(-x[1], x[0], 0); });
  const auto res = surface_identity_check(v, make_plane_patch(*dom, 2, 0.5), g);
  EXPECT_NEAR(res.lhs_sup, 2.0, 1e-12);
  EXPECT_NEAR(res.rhs_sup, 2.0, 1e-12);
  EXPECT_LT(res.residual, 1e-10);
}

TEST(SurfaceIdentity, GradientField) {
  const auto dom = unit_box(17);
  const auto g = metrics::flat(dom);
  const auto a = ScalarField::sample(dom, [](const Vec3& x) { return std::sin(3 * x[0]) * std::exp(x[1]) + x[2]; });
  const auto res = surface_identity_check(gradient_with_boundary(a, g), make_plane_patch(*dom, 1, 0.4), g);
  EXPECT_LT(res.lhs_sup, 1e-10);
  EXPECT_LT(res.residual, 1e-10);
}

TEST(SurfaceIdentity, RefinementRate) {
  std::vector<double> res;
  auto r = hqf::test::rng(50);
  const auto f1 = hqf::test::random_smooth(r), f2 = hqf::test::random_smooth(r), f3 = hqf::test::random_smooth(r);
  for (int n : {17, 33}) {
    const auto dom = unit_box(n);
    const auto g = metrics::flat(dom);
    const auto v = VectorField::sample(dom, [&](const Vec3& x) { return Vec3(f1(x), f2(x), f3(x)); });
    res.push_back(surface_identity_check(v, make_plane_patch(*dom, 0, 0.5), g).residual);
  }
  EXPECT_TRUE(res[1] <= res[0] / 3.5 || (res[0] < 1e-10 && res[1] < 1e-10)) << res[0] << " -> " << res[1];
}

TEST(SurfaceIdentity, RequiresFlatMetric) {
  const auto dom = unit_box(17);
  const auto g = metrics::conformal_sine(dom);
  EXPECT_THROW(surface_identity_check(VectorField(dom), make_plane_patch(*dom, 2, 0.5), g), PreconditionError);
}

TEST(Patch, NodesAreDeepAndPlanar) {
  const auto dom = unit_box(33);
  const auto p = make_plane_patch(*dom, 2, 0.5, 3);
  for (NodeId n : p.nodes) {
    EXPECT_GE(dom->depth(n), 3);
    EXPECT_LE(std::abs(dom->index(n).k - p.level), 1);
  }
  EXPECT_EQ(p.nodes.size(), 3u * 27 * 27);
}

class Uniqueness : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dom_ = unit_box(33);
    g_ = std::make_shared<MetricField>(metrics::flat(dom_));
    const auto op = assemble(*g_);
    // 21 controls: the constant plus 20 nonconstant gradients.
    const auto h = harmonic_extensions(op, default_dictionary(dom_, 21, 12345).controls, 4);
    basis_ = default_probe_basis(*g_, h);
  }
  static void TearDownTestSuite() {
    g_.reset();
    basis_.clear();
  }
  static inline DomainPtr dom_;
  static inline std::shared_ptr<MetricField> g_;
  static inline std::vector<QuaternionField> basis_;
};

TEST_F(Uniqueness, CentralPlaneCertificate) {
  ASSERT_EQ(basis_.size(), 24u);
  const auto res = uniqueness_probe(basis_, make_plane_patch(*dom_, 2, 0.5), *g_);
  RecordProperty("ratio", std::to_string(res.ratio));
  EXPECT_FALSE(res.rank_deficient);
  EXPECT_GT(res.ratio, 1e-3);
  EXPECT_EQ(res.table.size(), basis_.size());
  for (const auto& row : res.table) {
    EXPECT_LE(row.ratio, 1.0 + 1e-12);
    EXPECT_GT(row.ratio, 0.0);
  }
}

TEST_F(Uniqueness, DuplicateFieldIsRankDeficient) {
  auto b = basis_;
  b.push_back(basis_[3]);
  const auto res = uniqueness_probe(b, make_plane_patch(*dom_, 2, 0.5), *g_);
  EXPECT_TRUE(res.rank_deficient);
  EXPECT_EQ(res.ratio, 0.0);
}

TEST_F(Uniqueness, ThickSlabDoesNotLowerSigmaMin) {
  const auto thin = uniqueness_probe(basis_, make_plane_patch(*dom_, 2, 0.5, 1), *g_);
  const auto thick = uniqueness_probe(basis_, make_plane_patch(*dom_, 2, 0.5, 3), *g_);
  EXPECT_GE(thick.sigma_min, thin.sigma_min * (1 - 1e-12));
}

TEST_F(Uniqueness, InvariantUnderRescaling) {
  auto b = basis_;
  b[2] *= 1e3;
  b[7] *= 1e-2;
  const auto p = make_plane_patch(*dom_, 2, 0.5);
  EXPECT_NEAR(uniqueness_probe(b, p, *g_).ratio, uniqueness_probe(basis_, p, *g_).ratio,
              1e-12 * std::max(1.0, uniqueness_probe(basis_, p, *g_).ratio));
}

TEST_F(Uniqueness, RejectsNonHarmonicFieldsAndSmallPatches) {
  auto b = basis_;
  b.push_back(QuaternionField(ScalarField::sample(dom_, [](const Vec3& x) { return x[0] * x[0]; }), VectorField(dom_)));
  EXPECT_THROW(uniqueness_probe(b, make_plane_patch(*dom_, 2, 0.5), *g_), PreconditionError);

  const auto small = unit_box(9);
  const auto gs = metrics::flat(small);
  std::vector<QuaternionField> many(12, scalar_embed(ScalarField(small, 1.0)));
  EXPECT_THROW(uniqueness_probe(many, make_plane_patch(*small, 2, 0.5), gs), PreconditionError);
}

TEST(Circulation, AngleFieldAroundColumn) {
  const auto dom = column_domain(33);
  const auto g = metrics::flat(dom);
  const auto u = angle(dom);
  const double c = circulation(u, square_loop(*dom, 6, 26), g);
  EXPECT_NEAR(c, 2 * kPi, 0.05 * 2 * kPi);
  RecordProperty("circulation", std::to_string(c));
}

TEST(Circulation, AngleFieldAwayFromColumn) {
  const auto dom = column_domain(33);
  const auto g = metrics::flat(dom);
  GridLoop l = square_loop(*dom, 2, 10);
  EXPECT_NEAR(circulation(angle(dom), l, g), 0.0, 0.05);
}

TEST(Circulation, LoopThroughColumnIsRejected) {
  const auto dom = column_domain(33);
  const auto g = metrics::flat(dom);
  EXPECT_THROW(circulation(angle(dom), square_loop(*dom, 4, 16), g), PreconditionError);
}

TEST(Circulation, GradientFieldsVanishAtSecondOrder) {
  std::vector<double> c;
  for (int n : {17, 33}) {
    const auto dom = unit_box(n);
    const auto g = metrics::conformal_sine(dom);
    const auto a = ScalarField::sample(dom, [](const Vec3& x) { return std::sin(kPi * x[0]) * std::cos(2 * x[1]) + x[2] * x[0]; });
    GridLoop l = square_loop(*dom, (n - 1) / 8, 7 * (n - 1) / 8);
    c.push_back(std::abs(circulation(grad(a, g), l, g)));
  }
  EXPECT_GE(c[0] / c[1], 3.5) << c[0] << " -> " << c[1];
}
