#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

#include "bouncy/chain.hpp"
#include "bouncy/concepts.hpp"
#include "bouncy/error.hpp"
#include "bouncy/rng.hpp"
#include "bouncy/roots.hpp"
#include "bouncy/targets.hpp"
#include "bouncy/types.hpp"

namespace bouncy {

struct DynamicsOptions {
  bool record_events = false;
  std::size_t max_events = 1'000'000;
  double grad_tol = 1e-14;      // reflection against a smaller gradient is refused
  double restart_eps = 1e-12;   // first scan point after a bounce
  double tie_tol = 1e-12;       // boundary wins ties with a bounce
  std::optional<double> scan_step;
  roots::RootOptions root{1e-12, 200};
};

struct SimulationResult {
  AugmentedState state;
  EventLog events;
};

/// Elastic reflection of v against the hyperplane orthogonal to g.
inline Vec reflect(const Vec& v, const Vec& g, double grad_tol = 1e-14) {
  const double gg = g.squaredNorm();
  if (!(std::sqrt(gg) > grad_tol)) {
    throw Error(ErrorKind::ZeroGradient, "reflection against a vanishing gradient");
  }
  return v - (2.0 * v.dot(g) / gg) * g;
}

/// Inertia after flowing from U_d value `start` to `end`. All engines use this
/// one expression so that equivalent dynamics agree to the last bit.
inline double deplete(double p, double start, double end) { return p + start - end; }

template <SurrogateFlow F, TargetModel T>
Vec discrepancy_gradient(const F& flow, const T& target, const Vec& x) {
  if constexpr (LinearSurrogate<F>) return target.gradient(x);
  else return target.gradient(x) - flow.gradient(x);
}

/// U_d = U_tar - U_* along a straight line, through the target's line restriction.
template <LineFunction L>
class LinearPath {
 public:
  LinearPath(Vec x, Vec v, L line) : x_(std::move(x)), v_(std::move(v)), line_(std::move(line)) {}

  double value(double t) const { return line_.value(t); }
  double slope(double t) const { return line_.slope(t); }
  double curvature(double t) const { return line_.curvature(t); }
  std::pair<Vec, Vec> state(double t) const { return {x_ + t * v_, v_}; }
  const L& line() const { return line_; }

 private:
  Vec x_;
  Vec v_;
  L line_;
};

/// U_d along a general surrogate flow, evaluated through the solution operator.
template <SurrogateFlow F, TargetModel T>
class FlowPath {
 public:
  FlowPath(const F& flow, const T& target, Vec x, Vec v)
      : flow_(&flow), target_(&target), x_(std::move(x)), v_(std::move(v)) {}

  double value(double t) const {
    const Vec xt = flow_->flow(t, x_, v_).first;
    return target_->potential(xt) - flow_->potential(xt);
  }
  double slope(double t) const {
    const auto [xt, vt] = flow_->flow(t, x_, v_);
    return vt.dot(target_->gradient(xt) - flow_->gradient(xt));
  }
  double curvature(double t) const {
    const double h = 1e-5 * (1.0 + std::abs(t));
    return (slope(t + h) - slope(t - h)) / (2.0 * h);
  }
  std::pair<Vec, Vec> state(double t) const { return flow_->flow(t, x_, v_); }

 private:
  const F* flow_;
  const T* target_;
  Vec x_;
  Vec v_;
};

template <SurrogateFlow F, TargetModel T>
auto make_path(const F& flow, const T& target, const Vec& x, const Vec& v) {
  if constexpr (LinearSurrogate<F>) return LinearPath(x, v, line_or_generic(target, x, v));
  else return FlowPath<F, T>(flow, target, x, v);
}

/// Inertia p_t = p_0 + U_d(x_0) - U_d(x_t) along a bounce-free flow segment.
/// Negative values mean the inertia has run out before t.
template <SurrogateFlow F, TargetModel T>
double inertia_at(double t, const AugmentedState& s, const F& flow, const T& target) {
  require(t >= 0.0, "inertia_at requires t >= 0");
  const Vec xt = flow.flow(t, s.x, s.v).first;
  const double ud0 = target.potential(s.x) - flow.potential(s.x);
  const double udt = target.potential(xt) - flow.potential(xt);
  return deplete(s.p, ud0, udt);
}

/// Default scan resolution: min(0.1 horizon, 1 / (1 + |grad U_d| |v|)).
inline double adaptive_scan_step(double horizon, double grad_norm, double speed) {
  return std::min(0.1 * horizon, 1.0 / (1.0 + grad_norm * speed));
}

/// First t in (0, horizon] with path.value(t) - path.value(0) = p, found by a
/// forward scan for a sign change and a safeguarded Newton polish. Between
/// scan points an interior maximum of the depletion is also checked so that a
/// brief excursion above p is not stepped over.
template <class Path>
std::optional<double> scan_bounce_time(const Path& path, double p, double horizon, double step,
                                       const DynamicsOptions& opt = {}) {
  if (!(horizon > 0.0)) return std::nullopt;
  require(p >= 0.0, "inertia must be nonnegative");
  require(step > 0.0, "scan step must be positive");
  const double base = path.value(0.0);
  auto g = [&](double t) { return path.value(t) - base - p; };
  auto g_and_slope = [&](double t) { return std::pair{g(t), path.slope(t)}; };

  double ta = 0.0;
  double ga = -p;
  double sa = path.slope(0.0);
  if (p == 0.0) {
    if (sa >= 0.0) {
      throw Error(ErrorKind::DegenerateStart, "zero inertia with non-negative directional derivative");
    }
    ta = std::min(opt.restart_eps, horizon);
    ga = std::min(g(ta), -std::numeric_limits<double>::min());
    sa = path.slope(ta);
  }

  auto polish = [&](double lo, double hi, double glo, double ghi) {
    if (glo == 0.0) glo = -std::numeric_limits<double>::min();
    return roots::safeguarded_newton(g_and_slope, lo, hi, glo, ghi, opt.root);
  };

  while (ta < horizon) {
    const double tb = std::min(ta + step, horizon);
    const double gb = g(tb);
    const double sb = path.slope(tb);
    if (gb >= 0.0) return polish(ta, tb, ga, gb);
    if (sa > 0.0 && sb < 0.0) {
      const double tm = roots::bracketed_secant([&](double t) { return path.slope(t); }, ta, tb, sa, sb,
                                                {0.0, 100});
      const double gm = g(tm);
      if (gm >= 0.0) return polish(ta, tm, ga, gm);
    }
    ta = tb;
    ga = gb;
    sa = sb;
  }
  return std::nullopt;
}

/// Generic bounce-time solver for any surrogate flow and target.
template <SurrogateFlow F, TargetModel T>
std::optional<double> bounce_time(const AugmentedState& s, const F& flow, const T& target, double horizon,
                                  const DynamicsOptions& opt = {}) {
  const auto path = make_path(flow, target, s.x, s.v);
  const double step = opt.scan_step.value_or(
      adaptive_scan_step(horizon, discrepancy_gradient(flow, target, s.x).norm(), s.v.norm()));
  return scan_bounce_time(path, s.p, horizon, step, opt);
}

/// Solver policy that runs the scan + polish strategy on every segment.
struct ScanSolver {
  template <SurrogateFlow F, TargetModel T, class Path>
  std::optional<double> operator()(const F& flow, const T& target, const AugmentedState& s, const Path& path,
                                   double horizon, const DynamicsOptions& opt) const {
    if (!(horizon > 0.0)) return std::nullopt;
    const double step = opt.scan_step.value_or(
        adaptive_scan_step(horizon, discrepancy_gradient(flow, target, s.x).norm(), s.v.norm()));
    return scan_bounce_time(path, s.p, horizon, step, opt);
  }
};

template <TargetModel T>
const std::vector<LinearConstraint>* constraints_of(const T& target) {
  if constexpr (HasConstraints<T>) {
    const auto& c = target.constraints();
    return c.empty() ? nullptr : &c;
  } else {
    return nullptr;
  }
}

namespace detail {
inline void count_event(const EventLog& log, const DynamicsOptions& opt) {
  if (log.total() > opt.max_events) {
    throw Error(ErrorKind::EventStorm, "more than " + std::to_string(opt.max_events) + " events in one trajectory");
  }
}
}  // namespace detail

/// Bouncy Hamiltonian dynamics for total time `duration`, with the bounce
/// time of each segment delegated to `solver`. Half-space constraints on the
/// target are handled by elastic reflection (linear flows only).
template <SurrogateFlow F, TargetModel T, class Solver>
SimulationResult run_dynamics(double duration, AugmentedState s, const F& flow, const T& target,
                              const Solver& solver, const DynamicsOptions& opt = {}) {
  require(duration > 0.0, "trajectory time must be positive");
  require(s.p >= 0.0, "inertia must be nonnegative");
  require(s.x.size() == target.dimension() && s.v.size() == target.dimension(), "state dimension mismatch");
  const auto* constraints = constraints_of(target);
  if (constraints != nullptr) {
    if constexpr (!LinearSurrogate<F>) {
      throw Error(ErrorKind::Unsupported, "constraints require the linear flow");
    }
    check_feasible(*constraints, s.x);
  }

  EventLog log(opt.record_events);
  double tau = 0.0;
  while (tau < duration) {
    const double remaining = duration - tau;
    const auto path = make_path(flow, target, s.x, s.v);

    if (s.p == 0.0 && path.slope(0.0) > 0.0) {
      // Inertia already exhausted while climbing: bounce before moving.
      const Vec grad = discrepancy_gradient(flow, target, s.x);
      s.v = reflect(s.v, grad, opt.grad_tol);
      log.add(tau, EventKind::Bounce, grad, s.x, s.v);
      detail::count_event(log, opt);
      continue;
    }

    std::optional<BoundaryHit> wall;
    double horizon = remaining;
    if (constraints != nullptr) {
      wall = boundary_hit(*constraints, s.x, s.v);
      if (wall && wall->time > remaining) wall.reset();
      if (wall) horizon = wall->time;
    }

    const std::optional<double> hit = solver(flow, target, s, path, horizon, opt);

    if (wall && (!hit || *hit > wall->time - opt.tie_tol)) {
      const double t = wall->time;
      const double start = path.value(0.0);
      auto [xt, vt] = path.state(t);
      s.p = deplete(s.p, start, path.value(t));
      s.x = std::move(xt);
      s.v = reflect(vt, (*constraints)[wall->index].normal, opt.grad_tol);
      tau = (t == remaining) ? duration : tau + t;
      log.add(tau, EventKind::Boundary, (*constraints)[wall->index].normal, s.x, s.v);
      detail::count_event(log, opt);
      continue;
    }

    if (!hit) {
      const double start = path.value(0.0);
      auto [xt, vt] = path.state(remaining);
      s.p = deplete(s.p, start, path.value(remaining));
      s.x = std::move(xt);
      s.v = std::move(vt);
      break;
    }

    const double t = *hit;
    auto [xt, vt] = path.state(t);
    s.x = std::move(xt);
    const Vec grad = discrepancy_gradient(flow, target, s.x);
    s.v = reflect(vt, grad, opt.grad_tol);
    s.p = 0.0;
    tau = (t == remaining) ? duration : tau + t;
    log.add(tau, EventKind::Bounce, grad, s.x, s.v);
    detail::count_event(log, opt);
  }
  if (log.keeps_records()) log.add(duration, EventKind::End, Vec(), s.x, s.v);
  return {std::move(s), std::move(log)};
}

/// Bouncy Hamiltonian dynamics with the generic scan + polish bounce solver.
template <SurrogateFlow F, TargetModel T>
SimulationResult simulate(double duration, AugmentedState s, const F& flow, const T& target,
                          const DynamicsOptions& opt = {}) {
  return run_dynamics(duration, std::move(s), flow, target, ScanSolver{}, opt);
}

/// Augmented energy U_tar(x) + |v|^2/2 + p.
template <TargetModel T>
double augmented_energy(const T& target, const AugmentedState& s) {
  return target.potential(s.x) + 0.5 * s.v.squaredNorm() + s.p;
}

/// Draws v ~ N(0, I) and p ~ Exp(1) from `rng`, in that order.
inline AugmentedState draw_auxiliary(Rng& rng, const Vec& x) {
  AugmentedState s{x, rng.normal_vector(x.size()), 0.0};
  s.p = rng.exponential();
  return s;
}

struct SampleSettings {
  std::size_t iterations = 1000;
  double travel_time = 1.0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // chain index; independent RNG stream per value
  DynamicsOptions dynamics{};
};

/// Rejection-free sampler: refresh (v, p), run the dynamics for the travel
/// time, keep the end position. `dynamics(T, state)` advances one trajectory.
template <class Dynamics>
Chain run_sampler(const SampleSettings& cfg, const Vec& x0, Dynamics&& dynamics) {
  require(cfg.iterations >= 1, "iterations must be at least 1");
  require(cfg.travel_time > 0.0, "travel time must be positive");
  Rng rng(cfg.seed, {cfg.stream});
  ChainRecorder recorder(cfg.iterations, x0.size(), cfg.thin);
  Vec x = x0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    SimulationResult r = dynamics(cfg.travel_time, draw_auxiliary(rng, x));
    x = std::move(r.state.x);
    recorder.record(x, r.events, cfg.travel_time);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return recorder.finish(elapsed.count());
}

template <SurrogateFlow F, TargetModel T>
Chain sample(const SampleSettings& cfg, const Vec& x0, const F& flow, const T& target) {
  return run_sampler(cfg, x0, [&](double duration, AugmentedState s) {
    return simulate(duration, std::move(s), flow, target, cfg.dynamics);
  });
}

}  // namespace bouncy
