#include <gtest/gtest.h>

#include "hqf/calculus.hpp"
#include "hqf/controls.hpp"
#include "hqf/elliptic.hpp"
#include "hqf/error.hpp"
#include "hqf/jets.hpp"
#include "hqf/manufactured.hpp"
#include "test_support.hpp"

using namespace hqf;

namespace {

NodeId center(const GridDomain& dom) { return dom.id(dom.dims()[0] / 2, dom.dims()[1] / 2, dom.dims()[2] / 2); }

// Analytic 2-jet of a function given its value, gradient and Hessian.
Jet2 jet_of(double v, const Vec3& d, const Mat3& h) {
  Jet2 j;
  j << v, d[0], d[1], d[2], h(0, 0), h(0, 1), h(0, 2), h(1, 1), h(1, 2), h(2, 2);
  return j;
}

}  // namespace

TEST(ExtractJet, ProductOfCoordinatesAtCenter) {
  const auto dom = unit_box(17);
  const auto phi = ScalarField::sample(dom, [](const Vec3& x) { return x[0] * x[1]; });
  Jet2 expect;
  expect << 0.25, 0.5, 0.5, 0, 0, 1, 0, 0, 0, 0;
  EXPECT_LT((extract_jet(phi, center(*dom)) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExtractJet, Constant) {
  const auto dom = unit_box(9);
  const auto j = extract_jet(ScalarField(dom, 2.5), center(*dom));
  EXPECT_NEAR(j[0], 2.5, 1e-13);
  EXPECT_LT(j.tail<9>().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExtractJet, ExactOnAllQuadraticMonomials) {
  DomainSpec s;
  s.box = {Interval{-1, 1}, Interval{0, 2}, Interval{0.5, 1.5}};
  s.resolution = {17, 21, 13};
  const auto dom = build_domain(s);
  const NodeId a = dom->id(5, 13, 6);
  const Vec3 x0 = dom->position(a);
  for (int m = 0; m < 10; ++m) {
    // monomials 1, x, y, z, x^2, xy, xz, y^2, yz, z^2
    static const int p[10][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0},
                                 {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}};
    const auto mono = [&](const Vec3& x) {
      return std::pow(x[0], p[m][0]) * std::pow(x[1], p[m][1]) * std::pow(x[2], p[m][2]);
    };
    Vec3 d;
    Mat3 h = Mat3::Zero();
    for (int i = 0; i < 3; ++i) {
      d[i] = p[m][i] == 0 ? 0.0 : p[m][i] * mono(x0) / x0[i];
      for (int k = 0; k < 3; ++k) {
        int e[3] = {p[m][0], p[m][1], p[m][2]};
        double c = e[i];
        e[i] = std::max(0, e[i] - 1);
        c *= e[k];
        e[k] = std::max(0, e[k] - 1);
        h(i, k) = c * std::pow(x0[0], e[0]) * std::pow(x0[1], e[1]) * std::pow(x0[2], e[2]);
      }
    }
    const auto phi = ScalarField::sample(dom, mono);
    EXPECT_LT((extract_jet(phi, a) - jet_of(mono(x0), d, h)).cwiseAbs().maxCoeff(), 1e-12) << "monomial " << m;
  }
}

TEST(ExtractJet, RejectsNodesNearBoundary) {
  const auto dom = unit_box(9);
  EXPECT_THROW(extract_jet(ScalarField(dom), dom->id(1, 4, 4)), PreconditionError);
  EXPECT_THROW(extract_jet(ScalarField(dom), center(*dom), 5), PreconditionError);
}

TEST(ExtractJet, HarmonicPairingVanishesUnderRefinement) {
  // Flat Laplace jet paired with j_a[w^f] is the fitted Laplacian of w^f.
  std::vector<double> pairing;
  for (int n : {17, 33}) {
    const auto dom = unit_box(n);
    const auto g = metrics::flat(dom);
    const auto op = assemble(g);
    const auto f = random_band_limited_controls(dom, 1, 5).controls[0];
    const auto w = harmonic_extension(op, f);
    pairing.push_back(std::abs(laplace_jet(g, center(*dom)).dot(extract_jet(w, center(*dom)))));
  }
  EXPECT_GE(pairing[0] / pairing[1], 3.5) << pairing[0] << " -> " << pairing[1];
}

TEST(LaplaceJet, FlatMetric) {
  const auto dom = unit_box(9);
  Jet2 expect;
  expect << 0, 0, 0, 0, 1, 0, 0, 1, 0, 1;
  EXPECT_LT((laplace_jet(metrics::flat(dom), center(*dom)) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LaplaceJet, StructureOnCurvedMetric) {
  const auto dom = unit_box(9);
  const auto g = metrics::generic_smooth(dom);
  for (NodeId n : dom->interior_nodes()) {
    const auto l = laplace_jet(g, n);
    const Mat3& gi = g.inverse(n);
    EXPECT_EQ(l[0], 0.0);
    EXPECT_DOUBLE_EQ(l[4], gi(0, 0));
    EXPECT_DOUBLE_EQ(l[5], 2 * gi(0, 1));
    EXPECT_DOUBLE_EQ(l[6], 2 * gi(0, 2));
    EXPECT_DOUBLE_EQ(l[7], gi(1, 1));
    EXPECT_DOUBLE_EQ(l[8], 2 * gi(1, 2));
    EXPECT_DOUBLE_EQ(l[9], gi(2, 2));
  }
}

TEST(LaplaceJet, ExponentialMetricDrift) {
  // g = diag(e^{2x}, 1, 1): sqrt(g) g^{11} = e^{-x}, so drift_1 = e^{-x} (e^{-x})' = -e^{-2x}.
  std::vector<double> err;
  for (int n : {17, 33}) {
    const auto dom = unit_box(n);
    const MetricField g(dom, [](const Vec3& x) {
      Mat3 m = Mat3::Identity();
      m(0, 0) = std::exp(2 * x[0]);
      return m;
    });
    const NodeId a = dom->id((n - 1) / 4, (n - 1) / 2, (n - 1) / 2);
    const auto l = laplace_jet(g, a);
    const double x = dom->position(a)[0];
    err.push_back(std::abs(l[1] + std::exp(-2 * x)));
    EXPECT_NEAR(l[2], 0.0, 1e-14);
    EXPECT_NEAR(l[3], 0.0, 1e-14);
  }
  EXPECT_GE(err[0] / err[1], 3.5) << err[0] << " -> " << err[1];
}

TEST(LaplaceJet, PairingReproducesLaplacianOnQuadratics) {
  const auto dom = unit_box(17);
  const auto g = metrics::diagonal(dom, Vec3(2.0, 0.5, 1.3));
  const auto phi = ScalarField::sample(dom, [](const Vec3& x) { return 3 * x[0] * x[0] - x[1] * x[2] + 2 * x[2] * x[2] + x[1]; });
  const auto lap = laplacian(phi, g);
  for (NodeId a : hqf::test::nodes_at_depth(*dom, 3)) ASSERT_NEAR(laplace_jet(g, a).dot(extract_jet(phi, a)), lap[a], 1e-8);
}

TEST(LaplaceJet, PairingConvergesForSmoothFunctions) {
  const auto m = default_manufactured(metrics::sampler_by_name("generic-smooth"));
  std::vector<double> err;
  for (int n : {17, 33}) {
    const auto dom = unit_box(n);
    const MetricField g(dom, m.metric);
    const auto phi = ScalarField::sample(dom, m.u);
    const NodeId a = dom->id((n - 1) / 4, (n - 1) / 2, 3 * (n - 1) / 4);
    err.push_back(std::abs(laplace_jet(g, a).dot(extract_jet(phi, a)) - m.laplacian(dom->position(a))));
  }
  EXPECT_GE(err[0] / err[1], 3.5) << err[0] << " -> " << err[1];
}

class JetRank : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dom_ = unit_box(33);
    g_ = std::make_shared<MetricField>(metrics::flat(dom_));
    op_ = std::make_shared<DirichletOperator>(assemble(*g_));
    basis_ = default_dictionary(dom_, 40, 12345);
    harmonics_ = harmonic_extensions(*op_, basis_.controls, 4);
  }
  static void TearDownTestSuite() {
    op_.reset();
    g_.reset();
    harmonics_.clear();
  }
  static inline DomainPtr dom_;
  static inline std::shared_ptr<MetricField> g_;
  static inline std::shared_ptr<DirichletOperator> op_;
  static inline ControlBasis basis_;
  static inline std::vector<ScalarField> harmonics_;
};

TEST_F(JetRank, RankNineWithLaplaceNullVector) {
  const NodeId a = center(*dom_);
  const auto lambda = laplace_jet(*g_, a);
  const auto study = jet_rank_study(harmonics_, a, lambda);
  EXPECT_EQ(study.rank, 9);
  EXPECT_LT(study.sigma[9], 1e-3 * study.sigma[0]);
  EXPECT_GE(study.sigma[8], 1e-3 * study.sigma[0]);
  EXPECT_GT(study.cosine, 0.999);
  EXPECT_GE(study.null_vector[kJetG11Slot], 0.0);
  // Independent cosine against the normalized flat jet.
  EXPECT_NEAR(std::abs(study.null_vector.dot(lambda.normalized())), study.cosine, 1e-12);
}

TEST_F(JetRank, ReachesHarmonicPolynomialJet) {
  const NodeId a = dom_->id(12, 18, 15);
  const Vec3 x = dom_->position(a);
  const Jet2 s = jet_of(x[0] * x[1], Vec3(x[1], x[0], 0), (Mat3() << 0, 1, 0, 1, 0, 0, 0, 0, 0).finished());
  ControlBasis first20;
  for (std::size_t m = 0; m < 20; ++m) {
    first20.controls.push_back(basis_.controls[m]);
    first20.labels.push_back(basis_.labels[m]);
  }
  const std::vector<ScalarField> h20(harmonics_.begin(), harmonics_.begin() + 20);
  const auto res = jet_control(*g_, a, s, first20, h20);
  EXPECT_LT(res.relative_defect, 1e-2);

  // Closed loop: the synthesized control's own extension carries the jet.
  const auto w = harmonic_extension(*op_, res.control);
  EXPECT_LT((extract_jet(w, a) - res.achieved).norm(), 1e-8 * s.norm());
}

TEST_F(JetRank, DefectIsMonotoneInBasisSize) {
  const NodeId a = dom_->id(10, 20, 16);
  Jet2 s;
  s << 0.3, -1, 0.5, 2, 1, 0.2, -0.4, 2, 0.7, 0;
  const auto lambda = laplace_jet(*g_, a);
  s -= s.dot(lambda) / lambda.squaredNorm() * lambda;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t size : {20u, 30u, 40u}) {
    ControlBasis b;
    for (std::size_t m = 0; m < size; ++m) {
      b.controls.push_back(basis_.controls[m]);
      b.labels.push_back(basis_.labels[m]);
    }
    const std::vector<ScalarField> h(harmonics_.begin(), harmonics_.begin() + static_cast<long>(size));
    const auto res = jet_control(*g_, a, s, b, h);
    // Below 1e-13 the defect is roundoff and carries no ordering.
    EXPECT_LE(res.relative_defect, std::max(previous * (1 + 1e-12), 1e-13));
    previous = res.relative_defect;
  }
}

TEST_F(JetRank, RefusesUnreachableTargetsAndSmallBases) {
  const NodeId a = center(*dom_);
  const auto lambda = laplace_jet(*g_, a);
  EXPECT_THROW(jet_control(*g_, a, lambda, basis_, harmonics_), PreconditionError);
  ControlBasis small = harmonic_polynomial_controls(dom_);
  std::vector<ScalarField> hs(harmonics_.begin(), harmonics_.begin() + static_cast<long>(small.size()));
  Jet2 s = Jet2::Zero();
  s[1] = 1;
  EXPECT_THROW(jet_control(*g_, a, s, small, hs), PreconditionError);
}

TEST_F(JetRank, DictionaryStartsWithHarmonicPolynomials) {
  const auto poly = harmonic_polynomial_controls(dom_);
  ASSERT_EQ(poly.size(), 16u);
  for (std::size_t m = 0; m < poly.size(); ++m) EXPECT_EQ(poly.controls[m].values(), basis_.controls[m].values());
  // Random part is nested in the requested size.
  const auto smaller = default_dictionary(dom_, 30, 12345);
  for (std::size_t m = 0; m < smaller.size(); ++m) EXPECT_EQ(smaller.controls[m].values(), basis_.controls[m].values());
  for (std::size_t m = 16; m < basis_.size(); ++m) EXPECT_NEAR(basis_.controls[m].sup(), 1.0, 1e-12);
}
