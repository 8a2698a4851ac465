#include <cohset/coherence.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace cohset;
constexpr double pi = std::numbers::pi;

namespace {

const FourierGrid kPlot = FourierGrid::make(2, 1, 16, {2.0, 2.0});

RealField ramp() {
  return RealField::sample(kPlot, [](const Point& p) { return 1.0 - p[0]; });
}

NodalOperator identity_op() {
  return [](const std::vector<double>& f) { return f; };
}

NodalOperator averaging_op() {
  return [](const std::vector<double>& f) {
    double m = 0;
    for (double x : f) m += x / static_cast<double>(f.size());
    return std::vector<double>(f.size(), m);
  };
}

CoherentPair pair_from(const Mask& a0, const Mask& a1) {
  CoherentPair p;
  p.grid = kPlot;
  p.a0 = a0;
  p.a1 = a1;
  return p;
}

}  // namespace

TEST(ThresholdPair, MasksFollowTheSigns) {
  const auto v = ramp();
  const auto u = RealField::sample(kPlot, [](const Point& p) { return std::sin(pi * p[1]); });
  const auto pair = threshold_pair(v, u, 0.2);
  for (std::size_t i = 0; i < kPlot.node_count(); ++i) {
    EXPECT_EQ(pair.a0[i], v.values[i] > 0.2 ? 1 : 0);
    EXPECT_EQ(pair.a1[i], u.values[i] > 0.0 ? 1 : 0);
  }
  EXPECT_DOUBLE_EQ(pair.volume_a0(), 7.0 / 16.0 * 4.0);
}

TEST(ThresholdPair, SymmetricFieldSplitsInHalf) {
  const auto v = RealField::sample(kPlot, [](const Point& p) { return std::sin(pi * (p[0] + 1.0 / 16.0)); });
  const auto pair = threshold_pair(v, v, 0.0);
  EXPECT_DOUBLE_EQ(pair.volume_a0(), 2.0);
}

TEST(ThresholdPair, DegenerateThresholds) {
  const auto v = ramp();
  EXPECT_THROW(threshold_pair(v, v, 5.0), DegenerateError);
  EXPECT_THROW(threshold_pair(v, v, -5.0), DegenerateError);
  const auto zero = RealField::zeros(kPlot);
  EXPECT_THROW(threshold_pair(v, zero, 0.0), DegenerateError);
}

TEST(CoherenceRatio, IdentityGivesTwoOrZero) {
  const auto pair = threshold_pair(ramp(), ramp(), 0.0);
  EXPECT_DOUBLE_EQ(coherence_ratio(identity_op(), pair), 2.0);
  EXPECT_DOUBLE_EQ(coherence_ratio(identity_op(), pair_from(pair.a0, complement(pair.a0))), 0.0);
}

TEST(CoherenceRatio, AveragingGivesOne) {
  const auto pair = threshold_pair(ramp(), RealField::sample(kPlot, [](const Point& p) { return p[1] - 0.3; }), 0.4);
  EXPECT_NEAR(coherence_ratio(averaging_op(), pair), 1.0, 1e-14);
}

TEST(CoherenceRatio, ComplementSymmetry) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd M(kPlot.node_count(), kPlot.node_count());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = u(rng);
  NodalOperator op = [&M](const std::vector<double>& f) {
    const Eigen::VectorXd y = M * Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
    return std::vector<double>(y.data(), y.data() + y.size());
  };
  const auto p = threshold_pair(ramp(), RealField::sample(kPlot, [](const Point& x) { return x[1] - 0.7; }), 0.1);
  const auto q = pair_from(complement(p.a0), complement(p.a1));
  EXPECT_NEAR(coherence_ratio(op, p), coherence_ratio(op, q), 1e-12);
}

TEST(CoherenceRatio, DegenerateA0) {
  EXPECT_THROW(coherence_ratio(identity_op(), pair_from(Mask(kPlot.node_count(), 1), Mask(kPlot.node_count(), 0))),
               DegenerateError);
}

TEST(CoherenceRatio, FokkerPlanckOperatorBounded) {
  FpConfig cfg;
  cfg.epsilon = 0.02;
  cfg.t1 = 10.25;
  cfg.steps = 50;
  const auto P = assemble_transfer(FourierGrid::make(2, 5, 15, {2.0, 2.0}), QuadrupleGyre(), cfg);
  const auto op = nodal_operator(P, kPlot);
  const auto pair = threshold_pair(ramp(), ramp(), 0.0);
  const double rho = coherence_ratio(op, pair);
  EXPECT_GT(rho, 0.0);
  EXPECT_LT(rho, 2.0 + 1e-9);
  // the constant is a fixed point of the projected operator
  const auto one = op(std::vector<double>(kPlot.node_count(), 1.0));
  for (double x : one) EXPECT_NEAR(x, 1.0, 1e-8);
}

TEST(LineSearch, PicksTheMatchingThreshold) {
  const auto v = ramp();
  const auto pair = line_search_threshold(v, v, identity_op(), {-0.5, 0.0, 0.3});
  EXPECT_EQ(pair.theta, 0.0);
  EXPECT_DOUBLE_EQ(pair.rho, 2.0);
}

TEST(LineSearch, SingleCandidateEqualsThresholdPair) {
  const auto v = ramp();
  const auto u = RealField::sample(kPlot, [](const Point& p) { return std::cos(pi * p[1]); });
  const auto a = line_search_threshold(v, u, averaging_op(), {0.1});
  const auto b = threshold_pair(v, u, 0.1);
  EXPECT_EQ(a.a0, b.a0);
  EXPECT_EQ(a.a1, b.a1);
  EXPECT_NEAR(a.rho, coherence_ratio(averaging_op(), b), 1e-15);
}

TEST(LineSearch, TiesGoToThetaNearestZero) {
  const auto pair = line_search_threshold(ramp(), ramp(), averaging_op(), {-0.4, 0.1, 0.3});
  EXPECT_EQ(pair.theta, 0.1);
}

TEST(LineSearch, QuantilesAreSorted) {
  const auto q = quantile_thresholds(ramp(), 8);
  ASSERT_EQ(q.size(), 8u);
  for (std::size_t i = 1; i < q.size(); ++i) EXPECT_LE(q[i - 1], q[i]);
}

TEST(EulerMaruyama, DeterministicTranslation) {
  UniformFlow drift(2, {2.0, 2.0, 1.0}, {0.3, -0.2, 0.0});
  std::vector<Point> pts{{1.9, 0.1, 0.0}};
  std::mt19937_64 rng(1);
  euler_maruyama(drift, 0.0, pts, 0.0, 1.0, 0.1, rng);
  EXPECT_NEAR(pts[0][0], 0.2, 1e-12);
  EXPECT_NEAR(pts[0][1], 1.9, 1e-12);
}

TEST(SdeKappa, NoMotionKeepsEveryParticle) {
  const auto pair = threshold_pair(ramp(), ramp(), 0.0);
  UniformFlow still(2, {2.0, 2.0, 1.0});
  for (auto anchor : {CellAnchor::centered, CellAnchor::lower_corner}) {
    auto p = pair;
    p.anchor = anchor;
    const auto est = sde_kappa(still, 0.0, p, {5000, 0.1, 3, 512}, 0.0, 1.0);
    EXPECT_EQ(est.kappa, 1.0);
    EXPECT_EQ(est.hits, 5000u);
  }
}

TEST(SdeKappa, StrongNoiseMixes) {
  const auto pair = threshold_pair(ramp(), RealField::sample(kPlot, [](const Point& p) { return p[1] - 0.5; }), 0.0);
  UniformFlow still(2, {2.0, 2.0, 1.0});
  const auto est = sde_kappa(still, 1.0, pair, {20000, 0.05, 5, 4096}, 0.0, 5.0);
  const double want = pair.volume_a1() / 4.0;
  EXPECT_NEAR(est.kappa, want, 4.0 * std::sqrt(want * (1 - want) / 20000.0));
}

TEST(SdeKappa, ReproducibleAcrossThreadCounts) {
  const auto pair = threshold_pair(ramp(), ramp(), 0.0);
  const SdeRun run{6000, 0.05, 17, 1000};
  const auto a = sde_kappa(QuadrupleGyre(), 0.1, pair, run, 0.0, 1.0, 1);
  const auto b = sde_kappa(QuadrupleGyre(), 0.1, pair, run, 0.0, 1.0, 3);
  EXPECT_EQ(a.hits, b.hits);
  auto other = run;
  other.seed = 18;
  EXPECT_NE(sde_kappa(QuadrupleGyre(), 0.1, pair, other, 0.0, 1.0).hits, a.hits);
}

TEST(SdeKappa, ComplementOfTargetSumsToOne) {
  const auto pair = threshold_pair(ramp(), ramp(), 0.0);
  const SdeRun run{4000, 0.05, 2, 1000};
  const auto a = sde_kappa(QuadrupleGyre(), 0.1, pair, run, 0.0, 1.0);
  const auto b = sde_kappa(QuadrupleGyre(), 0.1, pair_from(pair.a0, complement(pair.a1)), run, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(a.kappa + b.kappa, 1.0);
}

TEST(KMeans, SeparatesBlocks) {
  auto f = RealField::sample(kPlot, [](const Point& p) { return p[0] < 1.0 ? 0.0 : 10.0; });
  auto g = RealField::sample(kPlot, [](const Point& p) { return p[1] < 1.0 ? 0.0 : 10.0; });
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& x : f.values) x += n(rng);
  const auto labels = kmeans_partition({f, g}, 4, 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto p = kPlot.node_point(i);
    const std::size_t ref = (p[0] < 1.0 ? 0 : 1) + (p[1] < 1.0 ? 0 : 2);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto q = kPlot.node_point(j);
      const std::size_t rq = (q[0] < 1.0 ? 0 : 1) + (q[1] < 1.0 ? 0 : 2);
      EXPECT_EQ(labels[i] == labels[j], ref == rq);
    }
  }
  EXPECT_EQ(labels[0], 0);
}

TEST(KMeans, DeterministicForSeed) {
  const auto f = RealField::sample(kPlot, [](const Point& p) { return std::sin(pi * p[0]) + 0.3 * p[1]; });
  EXPECT_EQ(kmeans_partition({f}, 3, 42), kmeans_partition({f}, 3, 42));
}

TEST(KMeans, RejectsBadK) {
  const auto f = RealField::zeros(FourierGrid::make(1, 1, 4, {1.0}));
  EXPECT_THROW(kmeans_partition({f}, 5, 1), std::invalid_argument);
  EXPECT_THROW(kmeans_partition({f}, 1, 1), std::invalid_argument);
}
