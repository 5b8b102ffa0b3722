#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bouncy/core.hpp"
#include "bouncy/hbps.hpp"
#include "bouncy/surrogates.hpp"
#include "bouncy/targets.hpp"

using namespace bouncy;

namespace {

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Surrogate whose potential equals a given Gaussian target, so U_d vanishes.
struct MatchingFlow {
  static constexpr bool is_linear = false;
  HarmonicFlow harmonic{1.0};
  double potential(const Vec& x) const { return harmonic.potential(x); }
  Vec gradient(const Vec& x) const { return harmonic.gradient(x); }
  std::pair<Vec, Vec> flow(double t, const Vec& x, const Vec& v) const { return harmonic.flow(t, x, v); }
};

}  // namespace

TEST(Reflect, AxisAlignedGradient) {
  EXPECT_EQ(reflect(vec2(1, 1), vec2(1, 0)), vec2(-1, 1));
  EXPECT_EQ(reflect(vec2(2, 0), vec2(1, 0)), vec2(-2, 0));
  EXPECT_EQ(reflect(vec2(0, 1), vec2(1, 0)), vec2(0, 1));
}

TEST(Reflect, ZeroGradientIsRejected) {
  try {
    reflect(vec2(1, 0), vec2(0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroGradient);
  }
}

TEST(Reflect, InvolutionAndNormPreservation) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec v = rng.normal_vector(5);
    const Vec g = rng.normal_vector(5);
    const Vec once = reflect(v, g);
    EXPECT_NEAR(once.norm(), v.norm(), 1e-14 * (1.0 + v.norm()));
    EXPECT_LT((reflect(once, g) - v).norm(), 1e-13 * (1.0 + v.norm()));
  }
}

TEST(InertiaAt, ClosedForm) {
  const auto target = GaussianTarget::isotropic(2);
  AugmentedState s{vec2(1, 0), vec2(1, 0), 2.0};
  EXPECT_DOUBLE_EQ(inertia_at(1.0, s, LinearFlow{}, target), 0.5);
  EXPECT_DOUBLE_EQ(inertia_at(0.0, s, LinearFlow{}, target), 2.0);
  // Surrogate equal to the target: nothing ever depletes.
  EXPECT_NEAR(inertia_at(3.7, s, MatchingFlow{}, target), 2.0, 1e-12);
}

TEST(BounceTime, QuadraticRoots) {
  const auto target = GaussianTarget::isotropic(2);
  AugmentedState uphill{vec2(1, 0), vec2(1, 0), 1.5};
  EXPECT_NEAR(*bounce_time(uphill, LinearFlow{}, target, 10.0), 1.0, 1e-10);
  AugmentedState downhill{vec2(1, 0), vec2(-1, 0), 0.1};
  EXPECT_NEAR(*bounce_time(downhill, LinearFlow{}, target, 10.0), 1.0 + std::sqrt(1.2), 1e-10);
  EXPECT_FALSE(bounce_time(downhill, LinearFlow{}, target, 2.0).has_value());
}

TEST(BounceTime, NoBounceWhenSurrogateMatchesTarget) {
  const auto target = GaussianTarget::isotropic(2);
  AugmentedState s{vec2(1, 0.5), vec2(-1, 2), 0.3};
  EXPECT_FALSE(bounce_time(s, MatchingFlow{}, target, 50.0).has_value());
}

TEST(BounceTime, DegenerateStart) {
  const auto target = GaussianTarget::isotropic(2);
  AugmentedState s{vec2(1, 0), vec2(1, 0), 0.0};
  try {
    bounce_time(s, LinearFlow{}, target, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateStart);
  }
}

TEST(BounceTime, ResidualAtRootIsSmall) {
  const auto target = GaussianTarget::correlated_pair(0.9);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    AugmentedState s{rng.normal_vector(2), rng.normal_vector(2), rng.exponential()};
    const auto t = bounce_time(s, LinearFlow{}, target, 20.0);
    if (!t) continue;
    EXPECT_LE(std::abs(inertia_at(*t, s, LinearFlow{}, target)), 1e-10);
  }
}

TEST(Simulate, NoEventsWhenSurrogateMatchesTarget) {
  const auto target = GaussianTarget::isotropic(2);
  MatchingFlow flow;
  AugmentedState s{vec2(1, 0), vec2(0, 1), 0.7};
  const auto r = simulate(1.3, s, flow, target);
  const auto [xt, vt] = flow.flow(1.3, s.x, s.v);
  EXPECT_LT((r.state.x - xt).norm(), 1e-12);
  EXPECT_LT((r.state.v - vt).norm(), 1e-12);
  EXPECT_NEAR(r.state.p, 0.7, 1e-12);
  EXPECT_EQ(r.events.total(), 0u);
}

TEST(Simulate, ShortTrajectoryWithoutBounce) {
  const auto target = GaussianTarget::isotropic(2);
  const auto r = simulate(0.5, {vec2(1, 0), vec2(1, 0), 1.5}, LinearFlow{}, target);
  EXPECT_NEAR(r.state.x[0], 1.5, 1e-14);
  EXPECT_EQ(r.state.v, vec2(1, 0));
  EXPECT_NEAR(r.state.p, 0.875, 1e-14);
  EXPECT_EQ(r.events.total(), 0u);
}

TEST(Simulate, OneBounceThenRebuildsInertia) {
  const auto target = GaussianTarget::isotropic(2);
  DynamicsOptions opt;
  opt.record_events = true;
  const auto r = simulate(2.0, {vec2(1, 0), vec2(1, 0), 1.5}, LinearFlow{}, target, opt);
  ASSERT_EQ(r.events.count(EventKind::Bounce), 1u);
  EXPECT_NEAR(r.events.records().front().time, 1.0, 1e-10);
  EXPECT_NEAR(r.state.x[0], 1.0, 1e-10);
  EXPECT_NEAR(r.state.x[1], 0.0, 1e-14);
  EXPECT_EQ(r.state.v, vec2(-1, 0));
  EXPECT_NEAR(r.state.p, 1.5, 1e-10);
  EXPECT_EQ(r.events.records().back().kind, EventKind::End);
}

TEST(Simulate, EventTimesStrictlyIncrease) {
  const auto target = GaussianTarget::correlated_pair(0.9);
  DynamicsOptions opt;
  opt.record_events = true;
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto r = simulate(10.0, draw_auxiliary(rng, rng.normal_vector(2)), LinearFlow{}, target, opt);
    const auto& rec = r.events.records();
    for (std::size_t k = 1; k < rec.size(); ++k) EXPECT_GT(rec[k].time, rec[k - 1].time);
  }
}

TEST(Simulate, EnergyConservedAndReversible) {
  const auto target = GaussianTarget::correlated_pair(0.8);
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const AugmentedState s0 = draw_auxiliary(rng, rng.normal_vector(2));
    const auto fwd = simulate(3.0, s0, HarmonicFlow{0.7}, target);
    EXPECT_NEAR(augmented_energy(target, fwd.state), augmented_energy(target, s0), 1e-8);
    AugmentedState back{fwd.state.x, -fwd.state.v, fwd.state.p};
    const auto rev = simulate(3.0, back, HarmonicFlow{0.7}, target);
    EXPECT_LT((rev.state.x - s0.x).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((rev.state.v + s0.v).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(rev.state.p, s0.p, 1e-6);
  }
}

TEST(Simulate, EventStorm) {
  const auto target = GaussianTarget::isotropic(1, 1e-6);
  DynamicsOptions opt;
  opt.max_events = 10;
  AugmentedState s{Vec::Constant(1, 0.0), Vec::Constant(1, 1.0), 0.01};
  try {
    simulate(100.0, s, LinearFlow{}, target, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EventStorm);
  }
}

TEST(Sample, QuarterPeriodRotationReturnsVelocity) {
  const auto target = GaussianTarget::isotropic(2);
  SampleSettings cfg;
  cfg.iterations = 1;
  cfg.travel_time = std::numbers::pi / 2;
  cfg.seed = 99;
  const Chain chain = sample(cfg, Vec::Zero(2), MatchingFlow{}, target);
  Rng rng(cfg.seed, {cfg.stream});
  const AugmentedState drawn = draw_auxiliary(rng, Vec::Zero(2));
  EXPECT_LT((chain.samples.row(0).transpose() - drawn.v).norm(), 1e-12);
}

TEST(Sample, ZeroIterationsRejected) {
  SampleSettings cfg;
  cfg.iterations = 0;
  EXPECT_THROW(sample(cfg, Vec::Zero(2), LinearFlow{}, GaussianTarget::isotropic(2)), Error);
}

TEST(Sample, ThinningRowCount) {
  SampleSettings cfg;
  cfg.iterations = 10;
  cfg.thin = 3;
  const Chain chain = sample(cfg, Vec::Zero(2), LinearFlow{}, GaussianTarget::isotropic(2));
  EXPECT_EQ(chain.size(), 4);
  EXPECT_EQ(chain.event_counts.size(), 10u);
}

TEST(Sample, SameSeedSameChain) {
  SampleSettings cfg;
  cfg.iterations = 50;
  cfg.seed = 1234;
  const auto target = GaussianTarget::correlated_pair(0.5);
  const Chain a = sample(cfg, Vec::Zero(2), LinearFlow{}, target);
  const Chain b = sample(cfg, Vec::Zero(2), LinearFlow{}, target);
  EXPECT_TRUE((a.samples.array() == b.samples.array()).all());
  cfg.stream = 1;
  const Chain c = sample(cfg, Vec::Zero(2), LinearFlow{}, target);
  EXPECT_FALSE((a.samples.array() == c.samples.array()).all());
}
