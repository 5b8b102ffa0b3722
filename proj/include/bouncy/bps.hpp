#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "bouncy/core.hpp"
#include "bouncy/hbps.hpp"

namespace bouncy {

struct BpsConfig {
  double refresh_rate = 1.0;   // lambda_ref
  double total_time = 1.0;     // trajectory time between stored samples
  bool thinning_refresh = false;  // superposed-rate refresh instead of a competing clock
  HbpsSolverConfig solver{};
  std::size_t max_events = 1'000'000;  // per stored sample
};

namespace detail {

/// Integral of [slope]^+ reaching `level`, by scanning for the increasing
/// pieces of an arbitrary line. Used when the target is not log-concave.
template <LineFunction L>
std::optional<double> scan_positive_part(const L& line, double level, double horizon, double step,
                                         const roots::RootOptions& root) {
  double accumulated = 0.0;  // total rise over completed increasing pieces
  double base = line.value(0.0);  // value where the current increasing piece began
  auto solve_in = [&](double lo, double hi) {
    const double goal = base + level - accumulated;
    auto f = [&](double t) { return std::pair{line.value(t) - goal, line.slope(t)}; };
    const double flo = f(lo).first;
    if (flo >= 0.0) return lo;
    return roots::safeguarded_newton(f, lo, hi, flo, f(hi).first, root);
  };
  double ta = 0.0;
  double sa = line.slope(0.0);
  while (ta < horizon) {
    const double tb = std::min(ta + step, horizon);
    const double sb = line.slope(tb);
    std::optional<double> turn;
    if ((sa > 0.0) != (sb > 0.0)) {
      turn = roots::bracketed_secant([&](double t) { return line.slope(t); }, ta, tb, sa, sb, {0.0, 100});
    }
    if (sa > 0.0) {
      const double end = turn.value_or(tb);
      if (line.value(end) - base + accumulated >= level) return solve_in(ta, end);
      if (turn) accumulated += line.value(*turn) - base;
    } else if (turn) {
      base = line.value(*turn);
      if (line.value(tb) - base + accumulated >= level) return solve_in(*turn, tb);
    }
    ta = tb;
    sa = sb;
  }
  return std::nullopt;
}

}  // namespace detail

/// First event time of the bouncy particle sampler with unit-rate draw E:
/// inf{t > 0 : int_0^t [v . grad U(x + s v)]^+ ds = E}. The minimizer of the
/// restriction is located first, then U(x + t v) - U(x + t_min v) = E is solved.
template <LineFunction L>
std::optional<double> bps_event_time(const L& line, double exp_draw, double horizon, const HbpsSolverConfig& cfg = {}) {
  require(exp_draw > 0.0, "event draw must be positive");
  if (!(horizon > 0.0)) return std::nullopt;
  const double step = detail::default_bracket_step(line, horizon, cfg);
  const std::optional<double> t_min = detail::first_ascent(line, horizon, step, cfg);
  if (!t_min) return std::nullopt;
  return detail::ascend_root(line, *t_min, exp_draw, horizon, step, cfg);
}

template <TargetModel T>
std::optional<double> bps_event_time(const Vec& x, const Vec& v, const T& target, double exp_draw, double horizon,
                                     const HbpsSolverConfig& cfg = {}) {
  const auto line = line_or_generic(target, x, v);
  if (is_log_concave(target)) {
    try {
      return bps_event_time(line, exp_draw, horizon, cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotLogConcave) throw;
    }
  }
  require(exp_draw > 0.0, "event draw must be positive");
  const double step = cfg.scan_step.value_or(
      adaptive_scan_step(horizon, target.gradient(x).norm(), v.norm()));
  return detail::scan_positive_part(line, exp_draw, horizon, step, {cfg.newton_tol, cfg.max_newton_iters});
}

namespace detail {

/// Line of U(x + t v) + lambda t: the integrated rate of the superposed
/// bounce + refresh process on a log-concave target.
template <LineFunction L>
struct RefreshAugmentedLine {
  const L* line;
  double rate;
  double value(double t) const { return line->value(t) + rate * t; }
  double slope(double t) const { return line->slope(t) + rate; }
  double curvature(double t) const { return line->curvature(t); }
};

/// Event time of the superposed process with total rate lambda + [g']^+.
template <LineFunction L>
std::optional<double> superposed_event_time(const L& line, double rate, double exp_draw, double horizon,
                                            const HbpsSolverConfig& cfg) {
  const double step = default_bracket_step(line, horizon, cfg);
  const std::optional<double> t_min = first_ascent(line, horizon, step, cfg);
  const double refresh_only = rate > 0.0 ? exp_draw / rate : std::numeric_limits<double>::infinity();
  if (!t_min || refresh_only <= *t_min) {
    if (refresh_only <= horizon) return refresh_only;
    return std::nullopt;
  }
  const RefreshAugmentedLine<L> augmented{&line, rate};
  return ascend_root(augmented, *t_min, exp_draw - rate * *t_min, horizon, step, cfg);
}

}  // namespace detail

/// Reference bouncy particle sampler: linear motion, bounces at the first
/// event of the rate [v . grad U]^+, velocity refreshment at rate lambda_ref,
/// elastic reflection at half-space constraints. The position is stored every
/// `total_time` units of trajectory time.
template <TargetModel T>
Chain bps_sample(std::size_t iterations, const BpsConfig& config, const Vec& x0, const T& target, std::uint64_t seed,
                 std::uint64_t stream = 0, std::size_t thin = 1) {
  require(iterations >= 1, "iterations must be at least 1");
  require(config.refresh_rate >= 0.0, "refresh rate must be nonnegative");
  require(config.total_time > 0.0, "total time must be positive");
  require(x0.size() == target.dimension(), "initial position dimension mismatch");
  if (config.thinning_refresh) {
    require(is_log_concave(target), "superposed-rate refresh requires a log-concave target");
  }
  const auto* constraints = constraints_of(target);
  if (constraints != nullptr) check_feasible(*constraints, x0);

  Rng rng(seed, {stream});
  ChainRecorder recorder(iterations, x0.size(), thin);
  Vec x = x0;
  Vec v = rng.normal_vector(x0.size());
  const double inf = std::numeric_limits<double>::infinity();
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < iterations; ++i) {
    std::size_t events = 0;
    double remaining = config.total_time;
    while (remaining > 0.0) {
      std::optional<BoundaryHit> wall;
      double horizon = remaining;
      if (constraints != nullptr) {
        wall = boundary_hit(*constraints, x, v);
        if (wall && wall->time <= remaining) horizon = wall->time;
        else wall.reset();
      }

      const double exp_draw = rng.exponential();
      double t_event = inf;
      bool is_refresh = false;
      if (!config.thinning_refresh) {
        const std::optional<double> t_bounce = bps_event_time(x, v, target, exp_draw, horizon, config.solver);
        const double t_refresh = config.refresh_rate > 0.0 ? rng.exponential() / config.refresh_rate : inf;
        t_event = t_bounce.value_or(inf);
        if (t_refresh < t_event) {
          t_event = t_refresh;
          is_refresh = true;
        }
      } else {
        const auto line = line_or_generic(target, x, v);
        const std::optional<double> t = detail::superposed_event_time(line, config.refresh_rate, exp_draw, horizon,
                                                                      config.solver);
        if (t) {
          t_event = *t;
          const double total_rate = config.refresh_rate + std::max(line.slope(*t), 0.0);
          is_refresh = rng.uniform() * total_rate < config.refresh_rate;
        }
      }

      if (wall && t_event > wall->time) {
        x += wall->time * v;
        v = reflect(v, (*constraints)[wall->index].normal);
        recorder.tally(EventKind::Boundary);
        remaining = (wall->time == remaining) ? 0.0 : remaining - wall->time;
      } else if (t_event >= remaining) {
        x += remaining * v;
        break;
      } else {
        x += t_event * v;
        if (is_refresh) {
          v = rng.normal_vector(x.size());
          recorder.tally(EventKind::Refresh);
        } else {
          v = reflect(v, target.gradient(x));
          recorder.tally(EventKind::Bounce);
        }
        remaining -= t_event;
      }
      if (++events > config.max_events) {
        throw Error(ErrorKind::EventStorm, "more than " + std::to_string(config.max_events) + " events per sample");
      }
    }
    recorder.record(x, events, config.total_time);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return recorder.finish(elapsed.count());
}

}  // namespace bouncy
