#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>

#include <gtest/gtest.h>
#include "json.hpp"

#include "hqf/calculus.hpp"
#include "hqf/error.hpp"
#include "hqf/field_io.hpp"
#include "hqf/metric.hpp"
#include "test_support.hpp"

using namespace hqf;
using hqf::test::kPi;

namespace {

// Boundary components by breadth-first search over 26-neighbors, written
// independently of the library's labeling.
int count_boundary_components(const GridDomain& dom) {
  std::vector<int> label(dom.node_count(), -1);
  int count = 0;
  for (NodeId seed : dom.boundary_nodes()) {
    if (label[seed] >= 0) continue;
    std::queue<NodeId> q;
    q.push(seed);
    label[seed] = count;
    while (!q.empty()) {
      const Index3 c = dom.index(q.front());
      q.pop();
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          for (int dk = -1; dk <= 1; ++dk) {
            const int i = c.i + di, j = c.j + dj, k = c.k + dk;
            if (!dom.in_grid(i, j, k)) continue;
            const NodeId m = dom.id(i, j, k);
            if (dom.is_boundary(m) && label[m] < 0) {
              label[m] = count;
              q.push(m);
            }
          }
    }
    ++count;
  }
  return count;
}

DomainSpec cavity_spec(int n, double lo, double hi) {
  DomainSpec s;
  s.resolution = {n, n, n};
  s.mask = MaskSpec::box_minus_box;
  s.inner = {Interval{lo, hi}, Interval{lo, hi}, Interval{lo, hi}};
  return s;
}

}  // namespace

TEST(Domain, UnitBoxCensus9) {
  const auto dom = unit_box(9);
  const auto c = dom->census();
  EXPECT_EQ(c[0], 343u);
  EXPECT_EQ(c[1], 386u);
  EXPECT_EQ(c[2], 0u);
}

TEST(Domain, UnitBoxBoundaryCount5) {
  const auto dom = unit_box(5);
  EXPECT_EQ(dom->boundary_nodes().size(), 5u * 5 * 5 - 3u * 3 * 3);
}

TEST(Domain, CavityHasTwoBoundaryComponents) {
  const auto dom = build_domain(cavity_spec(17, 0.4, 0.6));
  EXPECT_EQ(count_boundary_components(*dom), 2);
  EXPECT_EQ(dom->boundary_component_count(), 2);
  EXPECT_EQ(count_boundary_components(*unit_box(17)), 1);
}

TEST(Domain, InteriorNodesNeverTouchExterior) {
  for (const auto& dom : {unit_box(9), build_domain(cavity_spec(17, 0.4, 0.6))}) {
    for (NodeId n : dom->interior_nodes()) {
      const Index3 c = dom->index(n);
      for (int a = 0; a < 3; ++a)
        for (int s : {-1, 1}) {
          Index3 m = c;
          m[a] += s;
          ASSERT_TRUE(dom->in_grid(m.i, m.j, m.k));
          EXPECT_TRUE(dom->in_domain(dom->id(m)));
        }
    }
  }
}

TEST(Domain, DepthMatchesBruteForce) {
  const auto dom = build_domain(cavity_spec(17, 0.4, 0.6));
  for (int d : {1, 2, 3}) {
    std::size_t lib = 0;
    for (NodeId n = 0; n < dom->node_count(); ++n) lib += dom->depth(n) >= d;
    EXPECT_EQ(lib, hqf::test::nodes_at_depth(*dom, d).size()) << "depth " << d;
  }
}

TEST(Domain, RejectsBadSpecs) {
  DomainSpec flat;
  flat.box[1] = Interval{0.5, 0.5};
  EXPECT_THROW(build_domain(flat), PreconditionError);
  DomainSpec coarse;
  coarse.resolution = {4, 9, 9};
  EXPECT_THROW(build_domain(coarse), PreconditionError);
  EXPECT_THROW(build_domain(cavity_spec(17, 0.0, 0.6)), PreconditionError);
  EXPECT_THROW(build_domain(cavity_spec(17, 0.4, 1.0)), PreconditionError);
}

TEST(Domain, BoundaryNormalsHaveUnitMetricNorm) {
  const auto dom = unit_box(9);
  const auto g = metrics::generic_smooth(dom);
  const auto nu = boundary_normals(*dom, g);
  ASSERT_EQ(nu.size(), dom->boundary_nodes().size());
  for (std::size_t s = 0; s < nu.size(); ++s) {
    const NodeId n = dom->boundary_nodes()[s];
    EXPECT_NEAR(nu[s].dot(g.at(n) * nu[s]), 1.0, 1e-12);
  }
}

TEST(Domain, FaceWeightsSumToFaceArea) {
  // Constant metric diag(4, 1, 1): face x1 = const has area sqrt(g22 g33) = 1,
  // faces x2 = const and x3 = const have area sqrt(g11 g33) = 2.
  const auto dom = unit_box(9);
  const auto g = metrics::diagonal(dom, Vec3(4, 1, 1));
  std::map<std::pair<int, int>, double> area;
  for (const auto& f : surface_facets(*dom, g)) area[{f.axis, f.side}] += f.weight;
  ASSERT_EQ(area.size(), 6u);
  for (const auto& [face, a] : area) EXPECT_NEAR(a, face.first == 0 ? 1.0 : 2.0, 1e-12);

  double total = 0.0;
  for (double w : surface_weights(*dom, g)) total += w;
  EXPECT_NEAR(total, 10.0, 1e-12);
}

TEST(Metric, InverseAndSpd) {
  const auto dom = unit_box(9);
  const auto g = metrics::generic_smooth(dom);
  for (NodeId n = 0; n < dom->node_count(); ++n) {
    EXPECT_LT((g.at(n) * g.inverse(n) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(g.sqrt_det(n), std::sqrt(g.at(n).determinant()), 1e-14);
    EXPECT_GT(g.at(n)(0, 0), 0.0);
    EXPECT_GT((g.at(n).topLeftCorner<2, 2>().determinant()), 0.0);
    EXPECT_GT(g.at(n).determinant(), 0.0);
  }
}

TEST(Metric, RejectsIndefiniteSample) {
  const auto dom = unit_box(5);
  EXPECT_THROW(MetricField(dom, [](const Vec3& x) -> Mat3 {
                 Mat3 m = Mat3::Identity();
                 if (x[0] > 0.5) m(2, 2) = -1.0;
                 return m;
               }),
               NumericalError);
}

TEST(Algebra, InnerProductExamples) {
  const auto dom = unit_box(5);
  const auto e1 = VectorField::constant(dom, Vec3::UnitX());
  const auto e2 = VectorField::constant(dom, Vec3::UnitY());
  const auto flat = metrics::flat(dom);
  const auto d411 = metrics::diagonal(dom, Vec3(4, 1, 1));
  const auto a = inner(e1, e1, flat), b = inner(e1, e1, d411), c = inner(e1, e2, flat);
  for (NodeId n = 0; n < dom->node_count(); ++n) {
    EXPECT_EQ(a[n], 1.0);
    EXPECT_EQ(b[n], 4.0);
    EXPECT_EQ(c[n], 0.0);
  }
}

TEST(Algebra, VectorProductExamples) {
  const auto dom = unit_box(5);
  const auto flat = metrics::flat(dom);
  const auto d114 = metrics::diagonal(dom, Vec3(1, 1, 4));
  const Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY();
  EXPECT_LT((vector_product_at(e1, e2, flat, 0) - Vec3::UnitZ()).norm(), 1e-15);
  EXPECT_LT((vector_product_at(e1, e2, d114, 0) - Vec3(0, 0, 0.5)).norm(), 1e-15);
  auto r = hqf::test::rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vec3 u = hqf::test::random_vec(r);
    EXPECT_LT(vector_product_at(u, u, d114, 0).norm(), 1e-15);
  }
}

TEST(Algebra, VectorProductDefiningIdentity) {
  const auto dom = unit_box(9);
  const auto g = metrics::generic_smooth(dom);
  auto r = hqf::test::rng(2);
  double worst = 0.0;
  for (NodeId n = 0; n < dom->node_count(); n += 7) {
    const Vec3 u = hqf::test::random_vec(r), v = hqf::test::random_vec(r);
    const Vec3 uv = vector_product_at(u, v, g, n);
    for (int k = 0; k < 3; ++k) {
      const Vec3 w = Vec3::Unit(k);
      Mat3 m;
      m << u, v, w;
      const double dmu = g.sqrt_det(n) * m.determinant();
      worst = std::max(worst, std::abs(uv.dot(g.at(n) * w) - dmu));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Calculus, LinearGradientIsExact) {
  const auto dom = unit_box(9);
  const auto g = metrics::flat(dom);
  const auto x1 = ScalarField::sample(dom, [](const Vec3& x) { return x[0]; });
  const auto gr = grad(x1, g);
  for (NodeId n : dom->interior_nodes()) EXPECT_LT((gr[n] - Vec3::UnitX()).norm(), 1e-12);
}

TEST(Calculus, RotationFieldCurlAndDivergence) {
  const auto dom = unit_box(9);
  const auto g = metrics::flat(dom);
  const auto u = VectorField::sample(dom, [](const Vec3& x) { return Vec3(0, x[2], -x[1]); });
  const auto r = rot(u, g);
  const auto d = div(u, g);
  for (NodeId n : dom->interior_nodes()) {
    EXPECT_LT((r[n] - Vec3(-2, 0, 0)).norm(), 1e-12);
    EXPECT_LT(std::abs(d[n]), 1e-12);
  }
}

TEST(Calculus, HarmonicQuadraticHasZeroLaplacian) {
  const auto dom = unit_box(9);
  const auto g = metrics::flat(dom);
  const auto a = ScalarField::sample(dom, [](const Vec3& x) { return x[0] * x[0] - x[1] * x[1]; });
  EXPECT_LT(sup_at_depth(laplacian(a, g), 1), 1e-10);
}

TEST(Calculus, FlatReductionOnQuadratics) {
  const auto dom = unit_box(9);
  const auto g = metrics::flat(dom);
  const auto a = ScalarField::sample(dom, [](const Vec3& x) { return 1 + x[0] - 2 * x[1] * x[2] + 3 * x[2] * x[2]; });
  const auto u = VectorField::sample(dom, [](const Vec3& x) {
    return Vec3(x[1] * x[1] + x[2], x[0] * x[2], 2 * x[0] * x[0] - x[1]);
  });
  const auto ga = grad(a, g);
  const auto la = laplacian(a, g);
  const auto du = div(u, g);
  const auto ru = rot(u, g);
  const auto vl = vector_laplacian(u, g);
  for (NodeId n : dom->interior_nodes()) {
    const Vec3 x = dom->position(n);
    EXPECT_LT((ga[n] - Vec3(1, -2 * x[2], -2 * x[1] + 6 * x[2])).norm(), 1e-12);
    EXPECT_NEAR(la[n], 6.0, 1e-9);
    EXPECT_NEAR(du[n], 0.0, 1e-12);
    // curl of (y^2 + z, x z, 2x^2 - y)
    EXPECT_LT((ru[n] - Vec3(-1 - x[0], 1 - 4 * x[0], x[2] - 2 * x[1])).norm(), 1e-12);
    if (dom->depth(n) >= 2) EXPECT_LT((vl[n] - Vec3(2, 0, 4)).norm(), 1e-9);
  }
}

TEST(Calculus, LaplacianMatchesComposedOperatorAtDepthTwo) {
  const auto dom = unit_box(17);
  const auto g = metrics::generic_smooth(dom);
  auto r = hqf::test::rng(3);
  const auto f = hqf::test::random_smooth(r);
  const auto a = ScalarField::sample(dom, f);
  const auto direct = laplacian(a, g);
  const auto composed = div(grad(a, g), g);
  double worst = 0.0;
  for (NodeId n : hqf::test::nodes_at_depth(*dom, 2)) worst = std::max(worst, std::abs(direct[n] - composed[n]));
  EXPECT_LT(worst, 1e-12 * std::max(1.0, sup_at_depth(direct, 2)));
}

namespace {

// Residual pair (rot grad, div rot) for smooth seeded fields at resolution n.
std::pair<double, double> identity_residuals(int n, const std::string& metric) {
  const auto dom = unit_box(n);
  const auto g = metrics::by_name(dom, metric);
  auto r = hqf::test::rng(4);
  const auto fa = hqf::test::random_smooth(r);
  const auto f1 = hqf::test::random_smooth(r), f2 = hqf::test::random_smooth(r), f3 = hqf::test::random_smooth(r);
  const auto a = ScalarField::sample(dom, fa);
  const auto u = VectorField::sample(dom, [&](const Vec3& x) { return Vec3(f1(x), f2(x), f3(x)); });
  return {sup_at_depth(rot(grad(a, g), g), 2), sup_at_depth(div(rot(u, g), g), 2)};
}

// A rate of at least 3.5, or both values at the roundoff floor.
bool converges(double coarse, double fine, double floor = 1e-10) {
  return (fine <= coarse / 3.5) || (coarse < floor && fine < floor);
}

}  // namespace

class CalculusRates : public ::testing::TestWithParam<std::string> {};

TEST_P(CalculusRates, RotGradAndDivRotVanishUnderRefinement) {
  const auto [rg17, dr17] = identity_residuals(17, GetParam());
  const auto [rg33, dr33] = identity_residuals(33, GetParam());
  EXPECT_TRUE(converges(rg17, rg33)) << rg17 << " -> " << rg33;
  EXPECT_TRUE(converges(dr17, dr33)) << dr17 << " -> " << dr33;
}

INSTANTIATE_TEST_SUITE_P(Metrics, CalculusRates, ::testing::Values("flat", "conformal-sine"),
                         [](const auto& info) { return info.param == "flat" ? std::string("Flat") : std::string("ConformalSine"); });

TEST(Calculus, PointEvaluationRejectsBoundaryNodes) {
  const auto dom = unit_box(9);
  const auto g = metrics::flat(dom);
  const ScalarField a(dom, 1.0);
  EXPECT_THROW(grad_at(a, g, dom->boundary_nodes().front()), PreconditionError);
  EXPECT_THROW(laplacian_at(a, g, dom->boundary_nodes().back()), PreconditionError);
  EXPECT_NO_THROW(grad_at(a, g, dom->interior_nodes().front()));
}

TEST(Calculus, MismatchedDomainsAreRejected) {
  const auto a = unit_box(9), b = unit_box(9);
  const auto g = metrics::flat(a);
  EXPECT_THROW(inner(VectorField(a), VectorField(b), g), PreconditionError);
}

TEST(FieldIo, RoundTripWithSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "hqf_geometry_io";
  std::filesystem::create_directories(dir);
  DomainSpec spec = cavity_spec(9, 0.3, 0.7);
  spec.box[0] = Interval{-1.0, 2.0};
  spec.inner[0] = Interval{-0.2, 1.2};
  const auto dom = build_domain(spec);
  const auto s = ScalarField::sample(dom, [](const Vec3& x) { return std::exp(x[0]) - x[1] * x[2]; });
  const auto v = VectorField::sample(dom, [](const Vec3& x) { return Vec3(x[0], 1.0 / 3.0, -x[2] * x[2]); });
  io::write_scalar(dir / "s", s, R"({"note": "test"})");
  io::write_vector(dir / "v", v);

  EXPECT_EQ(std::filesystem::file_size(dir / "s.bin"), dom->node_count() * 8);
  EXPECT_EQ(std::filesystem::file_size(dir / "v.bin"), dom->node_count() * 24);

  const auto back = io::domain_from_sidecar(dir / "s");
  EXPECT_EQ(back->census(), dom->census());
  EXPECT_EQ(back->mask(), MaskSpec::box_minus_box);
  const auto s2 = io::read_scalar(dir / "s", dom);
  const auto v2 = io::read_vector(dir / "v", dom);
  EXPECT_EQ(s2.values(), s.values());
  EXPECT_EQ(v2.values(), v.values());

  std::ifstream js(dir / "s.json");
  const auto side = nlohmann::json::parse(js);
  EXPECT_EQ(side.at("components"), 1);
  EXPECT_EQ(side.at("note"), "test");
  EXPECT_EQ(side.at("dims"), nlohmann::json::array({9, 9, 9}));
  EXPECT_EQ(side.at("mask_spec"), "box_minus_box");

  // x1-fastest little-endian doubles: the second value is node (1,0,0).
  std::ifstream bin(dir / "s.bin", std::ios::binary);
  double first[2];
  bin.read(reinterpret_cast<char*>(first), sizeof first);
  EXPECT_EQ(first[1], s[dom->id(1, 0, 0)]);

  EXPECT_THROW(io::read_vector(dir / "s", dom), PreconditionError);
  EXPECT_THROW(io::read_scalar(dir / "s", unit_box(9)), PreconditionError);
  std::filesystem::remove_all(dir);
}
