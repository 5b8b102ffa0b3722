#include <gtest/gtest.h>

#include <cmath>

#include "bouncy/bps.hpp"
#include "oracles.hpp"

using namespace bouncy;

namespace {

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }

struct LinearPotential {
  Vec c;
  Index dimension() const { return c.size(); }
  double potential(const Vec& x) const { return c.dot(x); }
  Vec gradient(const Vec&) const { return c; }
  bool log_concave() const { return true; }
};

std::vector<double> column(const Chain& chain, Index j) {
  return std::vector<double>(chain.samples.col(j).data(), chain.samples.col(j).data() + chain.size());
}

double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / xs.size();
}

// Integrated rate of the isotropic unit Gaussian along x + t v, in closed form.
double integrated_rate(const Vec& x, const Vec& v, double t) {
  const double a = v.squaredNorm(), b = x.dot(v);
  if (b >= 0) return 0.5 * a * t * t + b * t;
  const double t_min = -b / a;
  return t <= t_min ? 0.0 : 0.5 * a * (t - t_min) * (t - t_min);
}

}  // namespace

TEST(BpsEventTime, Examples) {
  const auto target = GaussianTarget::isotropic(2);
  EXPECT_NEAR(*bps_event_time(vec2(-1, 0), vec2(1, 0), target, 0.5, 10.0), 2.0, 1e-10);
  EXPECT_NEAR(*bps_event_time(vec2(1, 0), vec2(1, 0), target, 1.5, 10.0), 1.0, 1e-10);
  LinearPotential lin{vec2(1, 1)};
  EXPECT_FALSE(bps_event_time(vec2(0, 0), vec2(-1, 0), lin, 0.5, 100.0).has_value());
}

TEST(BpsEventTime, FirstEventDistributionMatchesClosedForm) {
  const auto target = GaussianTarget::isotropic(2);
  const Vec x = vec2(-0.7, 0.4), v = vec2(1.1, -0.2);
  Rng rng(123);
  std::vector<double> times;
  for (int i = 0; i < 10000; ++i) times.push_back(*bps_event_time(x, v, target, rng.exponential(), 1e6));
  const double ks = testing_oracles::ks_distance(times, [&](double t) { return 1 - std::exp(-integrated_rate(x, v, t)); });
  EXPECT_LT(ks, 0.02);
}

TEST(BpsEventTime, ScanFallbackAgreesOnConvexLines) {
  const auto target = GaussianTarget::correlated_pair(0.6);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Vec x = rng.normal_vector(2), v = rng.normal_vector(2);
    const double e = rng.exponential();
    const auto line = target.line(x, v);
    const auto exact = bps_event_time(line, e, 50.0);
    const auto scanned = detail::scan_positive_part(line, e, 50.0, 0.05, {1e-12, 100});
    ASSERT_EQ(exact.has_value(), scanned.has_value());
    if (exact) {
      EXPECT_NEAR(*exact, *scanned, 1e-8);
    }
  }
}

TEST(BpsEventTime, ScanFallbackAccumulatesAcrossBumps) {
  // Double well along the line: the rise up the first bump counts, the
  // descent between bumps does not.
  MixtureTarget mix({{0.5, -2, 0.25}, {0.5, 2, 0.25}});
  const Vec x = Vec::Constant(1, -2.0), v = Vec::Ones(1);
  const auto line = mix.line(x, v);
  const double ridge = line.value(2.0) - line.value(0.0);  // rise from the left mode to the saddle
  const auto t = bps_event_time(x, v, mix, ridge + 0.5, 20.0);
  ASSERT_TRUE(t);
  EXPECT_GT(*t, 4.0);  // past the right mode
  const double rise_after = line.value(*t) - line.value(4.0);
  EXPECT_NEAR(rise_after, 0.5, 1e-6);
}

TEST(BpsSample, RefreshDominatesAtHighRate) {
  BpsConfig cfg;
  cfg.refresh_rate = 1e3;
  cfg.total_time = 10.0;
  const Chain chain = bps_sample(20, cfg, Vec::Zero(1), GaussianTarget::isotropic(1), 4);
  EXPECT_GT(chain.count(EventKind::Refresh), 20 * chain.count(EventKind::Bounce));
}

TEST(BpsSample, OneDimensionalZigZagMoments) {
  BpsConfig cfg;
  cfg.refresh_rate = 0.0;
  cfg.total_time = 2.0;
  const Chain chain = bps_sample(20000, cfg, Vec::Zero(1), GaussianTarget::isotropic(1), 6);
  const auto xs = column(chain, 0);
  std::vector<double> sq;
  for (double x : xs) sq.push_back(x * x);
  EXPECT_NEAR(mean(xs), 0.0, 3 * testing_oracles::batch_means_se(xs));
  EXPECT_NEAR(mean(sq), 1.0, 3 * testing_oracles::batch_means_se(sq));
}

TEST(BpsSample, CorrelatedGaussianMoments) {
  BpsConfig cfg;
  cfg.refresh_rate = 1.0;
  cfg.total_time = 2.0;
  const Chain chain = bps_sample(20000, cfg, Vec::Zero(2), GaussianTarget::correlated_pair(0.9), 8);
  const auto a = column(chain, 0), b = column(chain, 1);
  std::vector<double> ab;
  for (std::size_t i = 0; i < a.size(); ++i) ab.push_back(a[i] * b[i]);
  EXPECT_NEAR(mean(a), 0.0, 3 * testing_oracles::batch_means_se(a));
  EXPECT_NEAR(mean(b), 0.0, 3 * testing_oracles::batch_means_se(b));
  EXPECT_NEAR(mean(ab), 0.9, 3 * testing_oracles::batch_means_se(ab));
}

TEST(BpsSample, ThinningAndCompetingClockAgree) {
  const auto target = GaussianTarget::correlated_pair(0.5);
  BpsConfig clock;
  clock.refresh_rate = 0.7;
  clock.total_time = 2.0;
  BpsConfig thinning = clock;
  thinning.thinning_refresh = true;
  const Chain a = bps_sample(20000, clock, Vec::Zero(2), target, 10);
  const Chain b = bps_sample(20000, thinning, Vec::Zero(2), target, 11);
  for (Index j = 0; j < 2; ++j) {
    auto ca = column(a, j), cb = column(b, j);
    std::vector<double> sa, sb;
    for (double x : ca) sa.push_back(x * x);
    for (double x : cb) sb.push_back(x * x);
    const double se1 = std::hypot(testing_oracles::batch_means_se(ca), testing_oracles::batch_means_se(cb));
    const double se2 = std::hypot(testing_oracles::batch_means_se(sa), testing_oracles::batch_means_se(sb));
    EXPECT_NEAR(mean(ca), mean(cb), 3 * se1);
    EXPECT_NEAR(mean(sa), mean(sb), 3 * se2);
  }
  EXPECT_GT(b.count(EventKind::Refresh), 0u);
}

TEST(BpsSample, HalfNormalWithBoundary) {
  TruncatedGaussianTarget half(GaussianTarget::isotropic(1), Vec::Ones(1));
  BpsConfig cfg;
  cfg.refresh_rate = 0.5;
  cfg.total_time = 1.5;
  const Chain chain = bps_sample(20000, cfg, Vec::Constant(1, 0.5), half, 12);
  const auto xs = column(chain, 0);
  EXPECT_GE(*std::min_element(xs.begin(), xs.end()), -1e-10);
  EXPECT_NEAR(mean(xs), std::sqrt(2 / std::numbers::pi), 3 * testing_oracles::batch_means_se(xs));
  EXPECT_GT(chain.count(EventKind::Boundary), 0u);
}

TEST(BpsSample, ReproducibleAndValidated) {
  BpsConfig cfg;
  const auto target = GaussianTarget::isotropic(3);
  const Chain a = bps_sample(30, cfg, Vec::Zero(3), target, 77);
  const Chain b = bps_sample(30, cfg, Vec::Zero(3), target, 77);
  EXPECT_TRUE((a.samples.array() == b.samples.array()).all());
  EXPECT_THROW(bps_sample(0, cfg, Vec::Zero(3), target, 77), Error);
  cfg.refresh_rate = -1;
  EXPECT_THROW(bps_sample(3, cfg, Vec::Zero(3), target, 77), Error);
}
