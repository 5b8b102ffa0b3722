#include <gtest/gtest.h>

#include <numbers>

#include "bouncy/surrogates.hpp"
#include "bouncy/targets.hpp"
#include "oracles.hpp"

using namespace bouncy;

namespace {
Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }
}

TEST(LinearFlow, StraightLine) {
  LinearFlow f;
  auto [x, v] = f.flow(2.0, vec2(1, 0), vec2(1, 0));
  EXPECT_EQ(x, vec2(3, 0));
  EXPECT_EQ(v, vec2(1, 0));
  auto [x0, v0] = f.flow(0.0, vec2(1, 2), vec2(3, 4));
  EXPECT_EQ(x0, vec2(1, 2));
  auto [xb, vb] = f.flow(-1.0, f.flow(1.0, vec2(0.3, 2), vec2(-1.1, 4)).first, vec2(-1.1, 4));
  EXPECT_LT((xb - vec2(0.3, 2)).norm(), 1e-15);
}

TEST(HarmonicFlow, QuarterTurn) {
  HarmonicFlow f;
  auto [x, v] = f.flow(std::numbers::pi / 2, vec2(1, 0), vec2(0, 1));
  EXPECT_LT((x - vec2(0, 1)).norm(), 1e-15);
  EXPECT_LT((v - vec2(-1, 0)).norm(), 1e-15);
}

TEST(HarmonicFlow, FullPeriodAndZeroAreIdentity) {
  HarmonicFlow f(2.5, vec2(0.5, -1));
  const Vec x = vec2(0.3, 0.9), v = vec2(-1.2, 0.4);
  auto [xp, vp] = f.flow(f.period(), x, v);
  EXPECT_LT((xp - x).norm(), 1e-12);
  EXPECT_LT((vp - v).norm(), 1e-12);
  auto [x0, v0] = f.flow(0.0, x, v);
  EXPECT_LT((x0 - x).norm(), 1e-15);
  EXPECT_LT((v0 - v).norm(), 1e-15);
  // Large times are reduced modulo the period before the trig evaluation.
  auto [xl, vl] = f.flow(1e6 * f.period(), x, v);
  EXPECT_LT((xl - x).norm(), 1e-6);
}

template <class F>
void check_flow_invariants(const F& f, double energy_tol) {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const Vec x = rng.normal_vector(3), v = rng.normal_vector(3);
    const double s = rng.uniform() * 3.0, t = rng.uniform() * 3.0;
    auto [xt, vt] = f.flow(t, x, v);
    auto [xst, vst] = f.flow(s, xt, vt);
    auto [xc, vc] = f.flow(s + t, x, v);
    EXPECT_LT((xst - xc).norm(), 1e-12 * (1 + x.norm() + v.norm()));
    EXPECT_LT((vst - vc).norm(), 1e-12 * (1 + x.norm() + v.norm()));
    EXPECT_NEAR(f.potential(xt) + 0.5 * vt.squaredNorm(), f.potential(x) + 0.5 * v.squaredNorm(), energy_tol);
    auto [xr, vr] = f.flow(t, xt, Vec(-vt));
    EXPECT_LT((xr - x).norm(), 1e-12 * (1 + x.norm() + v.norm()));
    EXPECT_LT((vr + v).norm(), 1e-12 * (1 + x.norm() + v.norm()));
  }
}

TEST(Flows, SemigroupEnergyReversibility) {
  check_flow_invariants(LinearFlow{}, 1e-12);
  check_flow_invariants(HarmonicFlow{1.7, Vec::Constant(3, 0.2)}, 1e-12);
}

TEST(Flows, VolumePreservation) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const Vec x = rng.normal_vector(2), v = rng.normal_vector(2);
    for (double omega : {0.5, 1.0, 3.0}) {
      HarmonicFlow f(omega);
      auto map = [&](const Vec& z) {
        auto [xt, vt] = f.flow(1.3, z.head(2), z.tail(2));
        Vec out(4);
        out << xt, vt;
        return out;
      };
      Vec z(4);
      z << x, v;
      EXPECT_NEAR(std::abs(testing_oracles::fd_jacobian(map, z, 1e-5).determinant()), 1.0, 1e-6);
    }
  }
}

TEST(LeapfrogFlow, ReversibleAndVolumePreserving) {
  const auto potential = GaussianTarget::correlated_pair(0.6);
  LeapfrogFlow<GaussianTarget> f(potential, 4);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vec x = rng.normal_vector(2), v = rng.normal_vector(2);
    auto [xt, vt] = f.flow(0.7, x, v);
    auto [xr, vr] = f.flow(0.7, xt, Vec(-vt));
    EXPECT_LT((xr - x).norm(), 1e-12);
    EXPECT_LT((vr + v).norm(), 1e-12);
    auto map = [&](const Vec& z) {
      auto [a, b] = f.flow(0.7, z.head(2), z.tail(2));
      Vec out(4);
      out << a, b;
      return out;
    };
    Vec z(4);
    z << x, v;
    EXPECT_NEAR(std::abs(testing_oracles::fd_jacobian(map, z, 1e-5).determinant()), 1.0, 1e-6);
  }
}

TEST(LeapfrogFlow, MatchesHarmonicFlowAsStepsShrink) {
  const auto potential = GaussianTarget::isotropic(2);
  HarmonicFlow exact;
  const Vec x = vec2(1, 0.5), v = vec2(-0.3, 1);
  const auto ref = exact.flow(1.0, x, v).first;
  const double e1 = (LeapfrogFlow<GaussianTarget>(potential, 50).flow(1.0, x, v).first - ref).norm();
  const double e2 = (LeapfrogFlow<GaussianTarget>(potential, 100).flow(1.0, x, v).first - ref).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}
