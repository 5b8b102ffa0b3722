#pragma once

#include <cmath>
#include <optional>

#include "bouncy/core.hpp"
#include "bouncy/surrogates.hpp"

namespace bouncy {

struct HbpsSolverConfig {
  double newton_tol = 1e-10;          // on |U(x + t v) - U(x) - p|
  int max_newton_iters = 50;
  std::optional<double> scan_step;    // initial bracket step; adaptive when unset
  std::size_t max_events = 1'000'000;
  double concavity_tol = 1e-8;        // curvature below -tol aborts the convex solver
};

namespace detail {

inline void check_convex(double curvature, const HbpsSolverConfig& cfg) {
  if (curvature < -cfg.concavity_tol) {
    throw Error(ErrorKind::NotLogConcave, "negative curvature along the line");
  }
}

/// Positive root u of c0 + s u + c u^2/2 = 0 (quadratic model), or a fallback.
inline double quadratic_model_step(double c0, double s, double c, double fallback) {
  if (c > 0.0) {
    const double disc = s * s - 2.0 * c * c0;
    if (disc >= 0.0) {
      const double u = (-s + std::sqrt(disc)) / c;
      if (u > 0.0 && std::isfinite(u)) return u;
    }
  } else if (s > 0.0 && c0 < 0.0) {
    return -c0 / s;
  }
  return fallback;
}

/// First time in [0, horizon] at which a convex line stops decreasing (the
/// slope sign change), or nothing if it keeps decreasing over the window.
template <LineFunction L>
std::optional<double> first_ascent(const L& line, double horizon, double step, const HbpsSolverConfig& cfg) {
  double lo = 0.0;
  double s_lo = line.slope(0.0);
  if (s_lo > 0.0) return 0.0;
  double hi = step;
  double s_hi = 0.0;
  for (;;) {
    hi = std::min(hi, horizon);
    s_hi = line.slope(hi);
    if (s_hi > 0.0) break;
    if (s_hi < s_lo - cfg.concavity_tol * (hi - lo)) check_convex(-1.0, cfg);
    if (hi >= horizon) return std::nullopt;
    lo = hi;
    s_lo = s_hi;
    hi *= 2.0;
  }
  if (s_lo == 0.0) return lo;
  auto slope_and_curvature = [&](double t) {
    const double c = line.curvature(t);
    check_convex(c, cfg);
    return std::pair{line.slope(t), c};
  };
  return roots::safeguarded_newton(slope_and_curvature, lo, hi, s_lo, s_hi, {0.0, 100});
}

/// t in (lo, horizon] with line(t) - line(lo) = level, for a convex line that
/// is non-decreasing from lo onwards.
template <LineFunction L>
std::optional<double> ascend_root(const L& line, double lo, double level, double horizon, double step,
                                  const HbpsSolverConfig& cfg) {
  const double base = line.value(lo);
  auto g = [&](double t) { return line.value(t) - base - level; };
  double g_lo = -level;
  double s_lo = line.slope(lo);
  double width = quadratic_model_step(g_lo, s_lo, line.curvature(lo), step);
  double hi = lo + width;
  double g_hi = 0.0;
  for (;;) {
    hi = std::min(hi, horizon);
    g_hi = g(hi);
    if (g_hi >= 0.0) break;
    if (hi >= horizon) return std::nullopt;
    const double s_hi = line.slope(hi);
    if (s_hi < s_lo - cfg.concavity_tol * (hi - lo)) check_convex(-1.0, cfg);
    lo = hi;
    g_lo = g_hi;
    s_lo = s_hi;
    width *= 2.0;
    hi = lo + width;
  }
  if (g_lo == 0.0) g_lo = -std::numeric_limits<double>::min();
  return roots::safeguarded_newton([&](double t) { return std::pair{g(t), line.slope(t)}; }, lo, hi, g_lo, g_hi,
                                   {cfg.newton_tol, cfg.max_newton_iters});
}

template <LineFunction L>
double default_bracket_step(const L& line, double horizon, const HbpsSolverConfig& cfg) {
  return cfg.scan_step.value_or(std::min(horizon, 1.0 / (1.0 + std::abs(line.slope(0.0)))));
}

}  // namespace detail

/// Earliest t in (0, horizon] where the convex function U(x + t v) - U(x)
/// reaches p. When the line starts downhill its minimizer is located first;
/// by convexity the root beyond it is the only candidate.
template <LineFunction L>
std::optional<double> hbps_bounce_time(const L& line, double p, double horizon, const HbpsSolverConfig& cfg = {}) {
  require(p >= 0.0, "inertia must be nonnegative");
  if (!(horizon > 0.0)) return std::nullopt;
  const double s0 = line.slope(0.0);
  if (p == 0.0 && s0 >= 0.0) {
    throw Error(ErrorKind::DegenerateStart, "zero inertia with non-negative directional derivative");
  }
  const double step = detail::default_bracket_step(line, horizon, cfg);
  const std::optional<double> t_min = detail::first_ascent(line, horizon, step, cfg);
  if (!t_min) return std::nullopt;
  if (*t_min == 0.0) return detail::ascend_root(line, 0.0, p, horizon, step, cfg);
  // Level measured from the minimizer: p plus the inertia gained on the way down.
  const double level = p + line.value(0.0) - line.value(*t_min);
  return detail::ascend_root(line, *t_min, std::max(level, 0.0), horizon, step, cfg);
}

template <TargetModel T>
std::optional<double> hbps_bounce_time(const Vec& x, const Vec& v, double p, const T& target, double horizon,
                                       const HbpsSolverConfig& cfg = {}) {
  return hbps_bounce_time(line_or_generic(target, x, v), p, horizon, cfg);
}

/// Convex Newton solver on log-concave targets; falls back to the generic
/// scan solver when the target is not declared log-concave or the line turns
/// out not to be convex.
struct HbpsSolver {
  HbpsSolverConfig config;

  template <SurrogateFlow F, TargetModel T, class Path>
  std::optional<double> operator()(const F& flow, const T& target, const AugmentedState& s, const Path& path,
                                   double horizon, const DynamicsOptions& opt) const {
    if (is_log_concave(target)) {
      try {
        return hbps_bounce_time(path, s.p, horizon, config);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotLogConcave) throw;
      }
    }
    return ScanSolver{}(flow, target, s, path, horizon, opt);
  }
};

inline DynamicsOptions hbps_dynamics_options(const HbpsSolverConfig& cfg, DynamicsOptions opt = {}) {
  opt.max_events = cfg.max_events;
  return opt;
}

/// HBPS dynamics: linear flow, exact bounces, elastic boundary reflections
/// for targets that declare half-space constraints.
template <TargetModel T>
SimulationResult hbps_simulate(double duration, AugmentedState s, const T& target, const HbpsSolverConfig& cfg = {},
                               DynamicsOptions opt = {}) {
  return run_dynamics(duration, std::move(s), LinearFlow{}, target, HbpsSolver{cfg},
                      hbps_dynamics_options(cfg, std::move(opt)));
}

template <TargetModel T>
SimulationResult constrained_simulate(double duration, AugmentedState s, const T& target,
                                      const HbpsSolverConfig& cfg = {}, DynamicsOptions opt = {}) {
  return hbps_simulate(duration, std::move(s), target, cfg, std::move(opt));
}

template <TargetModel T>
Chain hbps_sample(const SampleSettings& settings, const Vec& x0, const T& target, const HbpsSolverConfig& cfg = {}) {
  const DynamicsOptions opt = hbps_dynamics_options(cfg, settings.dynamics);
  return run_sampler(settings, x0, [&](double duration, AugmentedState s) {
    return run_dynamics(duration, std::move(s), LinearFlow{}, target, HbpsSolver{cfg}, opt);
  });
}

}  // namespace bouncy
