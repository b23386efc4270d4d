#include <gtest/gtest.h>
#include "json.hpp"

#include "hqf/calculus.hpp"
#include "hqf/controls.hpp"
#include "hqf/density.hpp"
#include "test_support.hpp"

using namespace hqf;

namespace {

struct Rig {
  DomainPtr dom;
  std::shared_ptr<MetricField> g;
  std::shared_ptr<DirichletOperator> op;
  ControlBasis basis;
  std::vector<ScalarField> harmonics;
  FrameCover cover;
};

Rig make_setup(int n, std::size_t size) {
  Rig s;
  s.dom = unit_box(n);
  s.g = std::make_shared<MetricField>(metrics::flat(s.dom));
  s.op = std::make_shared<DirichletOperator>(assemble(*s.g));
  s.basis = default_dictionary(s.dom, size, 12345);
  s.harmonics = harmonic_extensions(*s.op, s.basis.controls, 4);
  s.cover = build_frame_cover(*s.op, s.basis, s.harmonics);
  return s;
}

double grad_norm2(const ScalarField& w, const MetricField& g, NodeId n) {
  const Vec3 d = grad_at(w, g, n);
  return d.dot(g.at(n) * d);
}

}  // namespace

TEST(ScalarSeparation, RandomPairsAreSeparated) {
  const auto dom = unit_box(33);
  const auto g = metrics::flat(dom);
  const auto op = assemble(g);
  const auto h = harmonic_extensions(op, default_dictionary(dom, 40, 12345).controls, 4);
  auto r = hqf::test::rng(40);
  const auto& in = dom->interior_nodes();
  std::uniform_int_distribution<std::size_t> pick(0, in.size() - 1);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  while (pairs.size() < 20) {
    const NodeId a = in[pick(r)], b = in[pick(r)];
    if (a != b) pairs.emplace_back(a, b);
  }
  const auto rep = scalar_separation_check(g, pairs, h);
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.min_coverage, 1e-4);
  for (const auto& p : rep.pairs) {
    EXPECT_TRUE(p.separated);
    EXPECT_GT(p.margin, 1e-4);
    // Independent margin.
    double m = 0.0;
    for (const auto& w : h) m = std::max(m, std::abs(grad_norm2(w, g, p.a) - grad_norm2(w, g, p.b)));
    EXPECT_NEAR(p.margin, m, 1e-10 * std::max(1.0, m));
  }

  const auto same = scalar_separation_check(g, {{in[5], in[5]}}, h);
  EXPECT_TRUE(same.pairs[0].degenerate);
  EXPECT_EQ(same.pairs[0].margin, 0.0);
}

TEST(ScalarSeparation, ConstantDictionary) {
  const auto dom = unit_box(17);
  const auto g = metrics::flat(dom);
  const auto op = assemble(g);
  const auto w = harmonic_extension(op, BoundaryControl(dom, 1.0));
  const auto rep = scalar_separation_check(g, {{dom->id(5, 5, 5), dom->id(10, 8, 6)}}, {w});
  EXPECT_TRUE(rep.small_dictionary);
  EXPECT_FALSE(rep.pass);
  EXPECT_LT(rep.pairs[0].margin, 1e-20);
  EXPECT_LT(rep.min_coverage, 1e-20);
}

class Density : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { s_ = new Rig(make_setup(17, 40)); }
  static void TearDownTestSuite() {
    delete s_;
    s_ = nullptr;
  }
  static inline Rig* s_ = nullptr;
};

TEST_F(Density, PartitionOfUnity) {
  const auto& dom = *s_->dom;
  const auto& c = s_->cover;
  ASSERT_FALSE(c.balls.empty());
  ASSERT_EQ(c.eta.size(), c.balls.size());
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (!dom.in_domain(n)) continue;
    double sum = 0.0;
    for (std::size_t b = 0; b < c.balls.size(); ++b) {
      const double r = (dom.position(n) - dom.position(c.balls[b].center)).norm();
      if (r >= c.balls[b].radius) ASSERT_EQ(c.eta[b][n], 0.0);
      ASSERT_GE(c.eta[b][n], 0.0);
      sum += c.eta[b][n];
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST_F(Density, FramesAreWellConditionedInsideBalls) {
  const auto& dom = *s_->dom;
  for (std::size_t b = 0; b < s_->cover.balls.size(); ++b) {
    const auto& ball = s_->cover.balls[b];
    EXPECT_LT(ball.worst_condition, 1e4);
    for (NodeId n = 0; n < dom.node_count(); ++n) {
      if (s_->cover.eta[b][n] <= 0.0) continue;
      Mat3 f;
      f << ball.gradients[0][n], ball.gradients[1][n], ball.gradients[2][n];
      Eigen::JacobiSVD<Mat3> svd(f);
      const auto sv = svd.singularValues();
      ASSERT_GT(sv[2], 0.0);
      ASSERT_LT(sv[0] / sv[2], 1e4);
    }
  }
  // Frame controls hit e_k at the center.
  const auto& b0 = s_->cover.balls.front();
  for (int k = 0; k < 3; ++k) EXPECT_LT((b0.gradients[k][b0.center] - Vec3::Unit(k)).norm(), 1e-2);
}

TEST_F(Density, GeneratorRepresentsItself) {
  const auto& ball = s_->cover.balls.front();
  const QuaternionField p(ScalarField(s_->dom), ball.gradients[0]);
  const auto rep = represent(p, s_->cover, *s_->g);
  EXPECT_LT(rep.error, 1e-10 * std::max(1.0, sup_norm(p, *s_->g)));
}

TEST_F(Density, ScalarFieldNeedsNoFrame) {
  auto r = hqf::test::rng(41);
  ScalarField a(s_->dom);
  for (NodeId n = 0; n < s_->dom->node_count(); ++n) a[n] = hqf::test::uniform(r);
  const auto rep = represent(scalar_embed(a), s_->cover, *s_->g);
  for (const auto& k : rep.kappa)
    for (const auto& f : k) EXPECT_EQ(sup_at_depth(f, 0), 0.0);
  EXPECT_LT(rep.error, 1e-12);
}

TEST_F(Density, RandomSmoothFieldReconstruction) {
  auto r = hqf::test::rng(42);
  const auto fa = hqf::test::random_smooth(r), f1 = hqf::test::random_smooth(r), f2 = hqf::test::random_smooth(r),
             f3 = hqf::test::random_smooth(r);
  const QuaternionField p(ScalarField::sample(s_->dom, fa),
                          VectorField::sample(s_->dom, [&](const Vec3& x) { return Vec3(f1(x), f2(x), f3(x)); }));
  const auto rep = represent(p, s_->cover, *s_->g);
  EXPECT_LT(rep.error, 1e-8 * sup_norm(p, *s_->g));
  // Recompute the reconstruction from the coefficients.
  QuaternionField sum(s_->dom);
  for (std::size_t b = 0; b < s_->cover.balls.size(); ++b) {
    sum.scalar() += rep.eta_alpha[b];
    for (int k = 0; k < 3; ++k)
      for (NodeId n = 0; n < s_->dom->node_count(); ++n) sum.vector()[n] += rep.kappa[b][k][n] * s_->cover.balls[b].gradients[k][n];
  }
  double worst = 0.0;
  for (NodeId n = 0; n < s_->dom->node_count(); ++n)
    worst = std::max({worst, std::abs(sum.scalar()[n] - p.scalar()[n]), (sum.vector()[n] - p.vector()[n]).norm()});
  EXPECT_LT(worst, 1e-8 * sup_norm(p, *s_->g));
}

TEST_F(Density, FeatureTargetIsExactAtDegreeOne) {
  const auto gw = gradient_with_boundary(s_->harmonics[3], *s_->g);
  const QuaternionField p(inner(gw, gw, *s_->g), VectorField(s_->dom));
  const auto ap = approximate_in_algebra(p, s_->cover, *s_->g, s_->basis, s_->harmonics, 1);
  EXPECT_LT(ap.sup_error, 1e-10 * std::max(1.0, sup_norm(p, *s_->g)));
}

TEST_F(Density, UnitIsExactAtDegreeZero) {
  const auto ap = approximate_in_algebra(scalar_embed(ScalarField(s_->dom, 1.0)), s_->cover, *s_->g, s_->basis,
                                         s_->harmonics, 0);
  EXPECT_LT(ap.sup_error, 1e-10);
}

TEST_F(Density, NestedDegreesDecreaseObjective) {
  auto r = hqf::test::rng(43);
  const auto fa = hqf::test::random_smooth(r), f1 = hqf::test::random_smooth(r), f2 = hqf::test::random_smooth(r),
             f3 = hqf::test::random_smooth(r);
  const QuaternionField p(ScalarField::sample(s_->dom, fa),
                          VectorField::sample(s_->dom, [&](const Vec3& x) { return Vec3(f1(x), f2(x), f3(x)); }));
  double previous = std::numeric_limits<double>::infinity();
  std::size_t columns = 0;
  for (int d = 1; d <= 4; ++d) {
    const auto ap = approximate_in_algebra(p, s_->cover, *s_->g, s_->basis, s_->harmonics, d);
    RecordProperty("objective_degree_" + std::to_string(d), std::to_string(ap.ls_objective));
    RecordProperty("sup_error_degree_" + std::to_string(d), std::to_string(ap.sup_error));
    EXPECT_LE(ap.ls_objective, previous);
    EXPECT_GT(ap.columns, columns);
    previous = ap.ls_objective;
    columns = ap.columns;

    // The algebra element evaluated with true quaternion products matches the fitted value.
    std::vector<VectorField> grads;
    for (const auto& w : s_->harmonics) grads.push_back(gradient_with_boundary(w, *s_->g));
    const auto ev = ap.element.evaluate(*s_->g, grads, s_->cover);
    double diff = 0.0;
    for (NodeId n = 0; n < s_->dom->node_count(); ++n)
      diff = std::max({diff, std::abs(ev.scalar()[n] - ap.value.scalar()[n]), (ev.vector()[n] - ap.value.vector()[n]).norm()});
    EXPECT_LT(diff, 1e-8 * std::max(1.0, sup_norm(ap.value, *s_->g)));
    EXPECT_GT(ap.element.depth(), 0u);
    const auto tree = nlohmann::json::parse(ap.element.to_json());
    EXPECT_EQ(tree.at("op"), "sum");
  }
}

TEST(FrameCover, FlatBoxAt33NeedsFewBalls) {
  const auto s = make_setup(33, 40);
  EXPECT_LE(s.cover.balls.size(), 30u);
  RecordProperty("balls", std::to_string(s.cover.balls.size()));
  for (const auto& b : s.cover.balls) EXPECT_LT(b.worst_condition, 1e4);
}
