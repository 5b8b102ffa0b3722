#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "bouncy/design_csv.hpp"
#include "bouncy/targets.hpp"
#include "oracles.hpp"

using namespace bouncy;

namespace {

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }

template <class T>
void check_gradient(const T& target, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  for (int i = 0; i < 100; ++i) {
    const Vec x = scale * rng.normal_vector(target.dimension());
    const double h = 1e-6 * (1.0 + x.norm());
    const Vec fd = testing_oracles::fd_gradient([&](const Vec& z) { return target.potential(z); }, x, h);
    const Vec g = target.gradient(x);
    EXPECT_LE((fd - g).norm(), 1e-5 * std::max(1.0, g.norm())) << "probe " << i;
  }
}

template <class T>
void check_line(const T& target, std::uint64_t seed) {
  Rng rng(seed);
  for (int i = 0; i < 50; ++i) {
    const Vec x = rng.normal_vector(target.dimension());
    const Vec v = rng.normal_vector(target.dimension());
    const auto line = target.line(x, v);
    const double t = rng.uniform() * 2.0 - 1.0;
    const double h = 1e-5;
    EXPECT_NEAR(line.value(t), target.potential(x + t * v), 1e-9 * (1.0 + std::abs(line.value(t))));
    const double fd1 = (line.value(t + h) - line.value(t - h)) / (2 * h);
    const double fd2 = (line.slope(t + h) - line.slope(t - h)) / (2 * h);
    EXPECT_NEAR(line.slope(t), fd1, 1e-5 * std::max(1.0, std::abs(fd1)));
    EXPECT_NEAR(line.curvature(t), fd2, 1e-5 * std::max(1.0, std::abs(fd2)));
  }
}

LogisticRegressionTarget small_logistic() {
  Mat x(4, 3);
  x << 1, 0.5, -1, -0.3, 2, 0.1, 0.7, -1, 1.5, 2, 0.2, -0.4;
  Vec y(4);
  y << 1, 0, 1, 0;
  return LogisticRegressionTarget(x, y, 1.3);
}

}  // namespace

TEST(Targets, GradientsMatchFiniteDifferences) {
  check_gradient(GaussianTarget::correlated_pair(0.9), 1);
  check_gradient(GaussianTarget::isotropic(4, 2.0), 2);
  check_gradient(small_logistic(), 3);
  check_gradient(synthetic_sparse_logistic(40, 6, 2, 1.0, 9), 4);
  check_gradient(MixtureTarget({{0.5, -2, 1}, {0.5, 2, 1}}, 2), 5, 2.0);
  check_gradient(TruncatedGaussianTarget(GaussianTarget::correlated_pair(0.3), Vec::Ones(2)), 6);
}

TEST(Targets, LineRestrictionsMatchFiniteDifferences) {
  check_line(GaussianTarget::correlated_pair(0.9), 1);
  check_line(small_logistic(), 2);
  check_line(MixtureTarget({{0.3, -2, 0.5}, {0.7, 2, 1.5}}, 3), 3);
}

TEST(Targets, LogConcaveTargetsAreConvexAlongLines) {
  const auto logistic = synthetic_sparse_logistic(60, 5, 2, 1.0, 3);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const Vec x = rng.normal_vector(5), v = rng.normal_vector(5);
    const double t = rng.uniform() * 4 - 2, h = 1e-3;
    const double d2 = logistic.potential(x + (t + h) * v) - 2 * logistic.potential(x + t * v) +
                      logistic.potential(x + (t - h) * v);
    EXPECT_GE(d2 / (h * h), -1e-8);
  }
  EXPECT_FALSE(MixtureTarget({{0.5, -2, 1}, {0.5, 2, 1}}).log_concave());
}

TEST(LinePotential, GaussianQuadratic) {
  const auto line = line_potential(GaussianTarget::isotropic(2), vec2(1, 0), vec2(1, 0));
  for (double t : {-1.0, 0.0, 0.4, 2.0}) EXPECT_NEAR(line.value(t), 0.5 * (1 + t) * (1 + t), 1e-15);
  const auto flat = line_potential(GaussianTarget::correlated_pair(0.5), vec2(0.3, -1), vec2(0, 0));
  EXPECT_EQ(flat.value(3.0), flat.value(0.0));
}

TEST(LinePotential, OneRowLogisticWithoutPrior) {
  Mat x(1, 1);
  x << 1.0;
  LogisticRegressionTarget target(x, Vec::Ones(1), std::numeric_limits<double>::infinity());
  const double x0 = 0.3;
  const auto line = line_potential(target, Vec::Constant(1, x0), Vec::Ones(1));
  for (double t : {-2.0, 0.0, 1.5, 40.0}) {
    EXPECT_NEAR(line.value(t), std::log1p(std::exp(x0 + t)) - (x0 + t), 1e-12);
  }
}

TEST(LinePotential, UnsupportedWithoutRestriction) {
  struct Bare {
    Index dimension() const { return 1; }
    double potential(const Vec& x) const { return x.squaredNorm(); }
    Vec gradient(const Vec& x) const { return 2 * x; }
  };
  try {
    line_potential(Bare{}, Vec::Zero(1), Vec::Ones(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
  }
  // The generic fallback still evaluates along the line.
  const auto generic = line_or_generic(Bare{}, Vec::Zero(1), Vec::Ones(1));
  EXPECT_NEAR(generic.value(2.0), 4.0, 1e-15);
}

TEST(LogisticTarget, StableForLargeMargins) {
  Mat x(1, 1);
  x << 1.0;
  LogisticRegressionTarget target(x, Vec::Zero(1), 1.0);
  const double u = target.potential(Vec::Constant(1, 800.0));
  EXPECT_TRUE(std::isfinite(u));
  EXPECT_NEAR(u, 800.0 + 0.5 * 800.0 * 800.0, 1e-9);
  EXPECT_THROW(LogisticRegressionTarget(x, Vec::Constant(1, 2.0)), Error);
}

TEST(Mixture, DensityIntegratesToOne) {
  MixtureTarget mix({{0.5, -2, 1}, {0.5, 2, 1}});
  double total = 0.0;
  const double h = 1e-3;
  for (double y = -15; y <= 15; y += h) total += std::exp(-mix.univariate(y).value) * h;
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(BoundaryHit, OrthantFace) {
  std::vector<LinearConstraint> c{{vec2(1, 0), 0.0}};
  const auto hit = boundary_hit(c, vec2(2, 1), vec2(-1, 0));
  ASSERT_TRUE(hit);
  EXPECT_DOUBLE_EQ(hit->time, 2.0);
  EXPECT_EQ(hit->index, 0u);
  EXPECT_FALSE(boundary_hit(c, vec2(2, 1), vec2(1, -3)).has_value());
}

TEST(BoundaryHit, EarliestOfTwoFaces) {
  std::vector<LinearConstraint> c{{vec2(1, 0), 0.0}, {vec2(0, 1), 0.0}};
  const auto hit = boundary_hit(c, vec2(1, 2), vec2(-1, -1));
  ASSERT_TRUE(hit);
  EXPECT_DOUBLE_EQ(hit->time, 1.0);
  EXPECT_EQ(hit->index, 0u);
}

TEST(BoundaryHit, InfeasibleStart) {
  std::vector<LinearConstraint> c{{vec2(1, 0), 0.0}};
  try {
    boundary_hit(c, vec2(-1e-6, 1), vec2(1, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
  }
}

TEST(DesignCsv, ValidFile) {
  std::istringstream in("y,x1,x2\n1,0.5,-1\n0,2,3e-1\n1,-4,0\n");
  const Design d = parse_design_csv(in);
  EXPECT_EQ(d.x.rows(), 3);
  EXPECT_EQ(d.x.cols(), 2);
  EXPECT_EQ(d.y.size(), 3);
  EXPECT_DOUBLE_EQ(d.x(1, 1), 0.3);
}

namespace {
void expect_parse_error(const std::string& text, const std::string& fragment) {
  std::istringstream in(text);
  try {
    parse_design_csv(in);
    FAIL() << "accepted " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}
}  // namespace

TEST(DesignCsv, RejectsBadInput) {
  expect_parse_error("y,x1\n2,0.5\n", "row 2, column 1");
  expect_parse_error("1,0.5\n0,1\n", "row 1");
  expect_parse_error("y,x1\n1,nan\n", "row 2, column 2");
  expect_parse_error("y,x1\n1,inf\n", "row 2, column 2");
  expect_parse_error("y,x1\n1,abc\n", "row 2, column 2");
  expect_parse_error("y,x1,x2\n1,0\n", "row 2");
}

TEST(DesignCsv, EmptyFile) {
  std::istringstream empty("");
  try {
    parse_design_csv(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyFile);
  }
}

TEST(AnyTarget, ForwardsEverything) {
  AnyTarget any(TruncatedGaussianTarget(GaussianTarget::isotropic(2), Vec::Ones(2)), "orthant");
  EXPECT_EQ(any.dimension(), 2);
  EXPECT_EQ(any.constraints().size(), 2u);
  EXPECT_TRUE(any.log_concave());
  EXPECT_EQ(any.name(), "orthant");
  EXPECT_NEAR(any.line(vec2(1, 0), vec2(1, 0)).value(1.0), 2.0, 1e-15);
  AnyTarget copy = any;
  EXPECT_NE(copy.as<TruncatedGaussianTarget>(), nullptr);
  EXPECT_EQ(copy.as<GaussianTarget>(), nullptr);
}
