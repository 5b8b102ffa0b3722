#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "bouncy/bps.hpp"
#include "bouncy/hbps.hpp"
#include "bouncy/parallel.hpp"

namespace bouncy {

/// Position/velocity knot of a piecewise path; `v` holds from `time` until
/// the next knot.
struct PathKnot {
  double time;
  Vec x;
  Vec v;
  EventKind kind;
};

/// Piecewise-linear path described by its event knots.
struct PiecewisePath {
  std::vector<PathKnot> knots;

  Vec position(double t) const {
    auto it = std::upper_bound(knots.begin(), knots.end(), t,
                               [](double value, const PathKnot& k) { return value < k.time; });
    const PathKnot& k = (it == knots.begin()) ? knots.front() : *std::prev(it);
    return k.x + (t - k.time) * k.v;
  }

  std::vector<double> event_times() const {
    std::vector<double> out;
    for (const auto& k : knots) {
      if (k.kind == EventKind::Bounce || k.kind == EventKind::Boundary) out.push_back(k.time);
    }
    return out;
  }
};

struct RefreshedPath {
  PiecewisePath path;
  AugmentedState final_state;
};

namespace detail {
inline std::size_t interval_count(double dt, double horizon) {
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));
}
inline double interval_start(std::size_t n, double dt) { return static_cast<double>(n) * dt; }
}  // namespace detail

/// Bouncy dynamics whose inertia is reset to exp_draws[n] at each time n dt.
template <SurrogateFlow F, TargetModel T>
RefreshedPath refreshed_simulate(double dt, double horizon, const Vec& x0, const Vec& v0,
                                 const std::vector<double>& exp_draws, const F& flow, const T& target,
                                 const HbpsSolverConfig& cfg = {}) {
  require(dt > 0.0 && horizon > 0.0, "refresh interval and horizon must be positive");
  const std::size_t intervals = detail::interval_count(dt, horizon);
  require(exp_draws.size() >= intervals, "one exponential draw per interval is required");
  DynamicsOptions opt = hbps_dynamics_options(cfg);
  opt.record_events = true;

  RefreshedPath out;
  out.path.knots.push_back({0.0, x0, v0, EventKind::Refresh});
  AugmentedState s{x0, v0, 0.0};
  for (std::size_t n = 0; n < intervals; ++n) {
    const double t0 = detail::interval_start(n, dt);
    const double t1 = std::min(detail::interval_start(n + 1, dt), horizon);
    s.p = exp_draws[n];
    SimulationResult r = [&] {
      if constexpr (LinearSurrogate<F>) return run_dynamics(t1 - t0, std::move(s), flow, target, HbpsSolver{cfg}, opt);
      else return run_dynamics(t1 - t0, std::move(s), flow, target, ScanSolver{}, opt);
    }();
    for (const auto& rec : r.events.records()) {
      if (rec.kind == EventKind::End) continue;
      out.path.knots.push_back({t0 + rec.time, rec.position, rec.velocity, rec.kind});
    }
    s = std::move(r.state);
  }
  out.path.knots.push_back({horizon, s.x, s.v, EventKind::End});
  out.final_state = std::move(s);
  return out;
}

/// Bouncy particle sampler path coupled to the refreshed dynamics: in each
/// interval the first event uses exp_draws[n]; later events in the same
/// interval use draws keyed on (seed, replication, interval, ordinal).
template <TargetModel T>
PiecewisePath coupled_bps_path(double dt, double horizon, const Vec& x0, const Vec& v0,
                               const std::vector<double>& exp_draws, std::uint64_t seed, std::uint64_t replication,
                               const T& target, const HbpsSolverConfig& cfg = {}) {
  const std::size_t intervals = detail::interval_count(dt, horizon);
  require(exp_draws.size() >= intervals, "one exponential draw per interval is required");
  PiecewisePath path;
  path.knots.push_back({0.0, x0, v0, EventKind::Refresh});
  Vec x = x0, v = v0;
  std::size_t events = 0;
  for (std::size_t n = 0; n < intervals; ++n) {
    const double t1 = std::min(detail::interval_start(n + 1, dt), horizon);
    double t = detail::interval_start(n, dt);
    for (std::uint64_t ordinal = 0;; ++ordinal) {
      const double remaining = t1 - t;
      const double draw =
          ordinal == 0 ? exp_draws[n] : Rng(seed, {replication, static_cast<std::uint64_t>(n), ordinal}).exponential();
      const std::optional<double> te = bps_event_time(x, v, target, draw, remaining, cfg);
      if (!te) {
        x = x + remaining * v;
        break;
      }
      x = x + *te * v;
      t = (*te == remaining) ? t1 : t + *te;
      v = reflect(v, target.gradient(x));
      path.knots.push_back({t, x, v, EventKind::Bounce});
      if (++events > cfg.max_events) throw Error(ErrorKind::EventStorm, "too many events in coupled path");
    }
  }
  path.knots.push_back({horizon, x, v, EventKind::End});
  return path;
}

namespace detail {
inline std::vector<double> merged_times(const PiecewisePath& a, const PiecewisePath& b) {
  std::vector<double> times;
  for (const auto& k : a.knots) times.push_back(k.time);
  for (const auto& k : b.knots) times.push_back(k.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}
}  // namespace detail

/// Exact sup over [0, horizon] of the distance between two piecewise-linear
/// paths: on each common piece the distance is convex, so the maximum sits
/// at a knot of one of the paths.
inline double sup_distance(const PiecewisePath& a, const PiecewisePath& b) {
  double best = 0.0;
  for (double t : detail::merged_times(a, b)) best = std::max(best, (a.position(t) - b.position(t)).norm());
  return best;
}

inline double grid_sup_distance(const PiecewisePath& a, const PiecewisePath& b, double horizon, int points = 1000) {
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    const double t = horizon * static_cast<double>(k) / static_cast<double>(points - 1);
    best = std::max(best, (a.position(t) - b.position(t)).norm());
  }
  return best;
}

/// First time the two paths are more than tol apart, if ever.
inline std::optional<double> first_exceedance(const PiecewisePath& a, const PiecewisePath& b, double tol) {
  const auto times = detail::merged_times(a, b);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Vec d1 = a.position(times[k]) - b.position(times[k]);
    if (d1.norm() <= tol) continue;
    if (k == 0) return times[0];
    const double s = times[k - 1];
    const Vec d0 = a.position(s) - b.position(s);
    const Vec w = (d1 - d0) / (times[k] - s);
    // |d0 + u w| = tol on the piece, the first root past s.
    const double qa = w.squaredNorm(), qb = 2.0 * d0.dot(w), qc = d0.squaredNorm() - tol * tol;
    const double u = (-qb + std::sqrt(std::max(qb * qb - 4.0 * qa * qc, 0.0))) / (2.0 * qa);
    return std::clamp(s + u, s, times[k]);
  }
  return std::nullopt;
}

struct CouplingRun {
  double delta_t = 0.0;
  double horizon = 0.0;
  bool diverged = false;
  std::optional<double> divergence_time;
  double sup_distance = 0.0;       // exact, over the union of knots
  double grid_sup_distance = 0.0;  // coarse 10^3-point grid, diagnostics only
  std::size_t bouncy_events = 0;
  std::size_t bps_events = 0;
};

struct CouplingOptions {
  double match_tol = 1e-9;
  HbpsSolverConfig solver{};
};

/// Shared exponential draws of one replication.
inline std::vector<double> shared_exponentials(std::uint64_t seed, std::uint64_t replication, std::size_t count) {
  Rng rng(seed, {replication, 0xe0});
  std::vector<double> draws(count);
  for (double& e : draws) e = rng.exponential();
  return draws;
}

/// Refreshed bouncy dynamics and the coupled BPS from the same start.
template <TargetModel T>
CouplingRun coupled_pair(double dt, double horizon, const Vec& x0, const Vec& v0, const T& target, std::uint64_t seed,
                         std::uint64_t replication = 0, const CouplingOptions& options = {}) {
  const auto draws = shared_exponentials(seed, replication, detail::interval_count(dt, horizon));
  const RefreshedPath bouncy = refreshed_simulate(dt, horizon, x0, v0, draws, LinearFlow{}, target, options.solver);
  const PiecewisePath bps = coupled_bps_path(dt, horizon, x0, v0, draws, seed, replication, target, options.solver);
  CouplingRun run;
  run.delta_t = dt;
  run.horizon = horizon;
  run.sup_distance = sup_distance(bouncy.path, bps);
  run.grid_sup_distance = grid_sup_distance(bouncy.path, bps, horizon);
  run.diverged = run.sup_distance > options.match_tol;
  if (run.diverged) run.divergence_time = first_exceedance(bouncy.path, bps, options.match_tol);
  run.bouncy_events = bouncy.path.event_times().size();
  run.bps_events = bps.event_times().size();
  return run;
}

struct DivergencePoint {
  double delta_t;
  double frequency;
  double std_error;
  std::size_t replications;
};

/// Start of a replication: exact draw from a Gaussian target (zero
/// otherwise) and a standard normal velocity, shared across the grid.
template <TargetModel T>
std::pair<Vec, Vec> replication_start(const T& target, std::uint64_t seed, std::uint64_t replication) {
  Rng rng(seed, {replication, 0x57a7});
  const Index d = target.dimension();
  Vec x = Vec::Zero(d);
  const GaussianTarget* gaussian = nullptr;
  if constexpr (std::same_as<T, GaussianTarget>) gaussian = &target;
  else if constexpr (std::same_as<T, AnyTarget>) gaussian = target.template as<GaussianTarget>();
  if (gaussian != nullptr) {
    // Lambda = L L^T, so mu + L^{-T} z has covariance Lambda^{-1}.
    const Vec z = rng.normal_vector(d);
    x = gaussian->mean() + gaussian->precision_factor().transpose().triangularView<Eigen::Upper>().solve(z);
  }
  Vec v = rng.normal_vector(d);
  return {std::move(x), std::move(v)};
}

/// Monte Carlo divergence frequency of the coupled pair for each refresh
/// interval, with binomial standard errors. Replications run concurrently.
template <TargetModel T>
std::vector<DivergencePoint> divergence_curve(const std::vector<double>& grid, std::size_t replications,
                                              double horizon, const T& target, std::uint64_t seed,
                                              const CouplingOptions& options = {},
                                              std::size_t workers = worker_count()) {
  require(replications >= 100, "at least 100 replications are required");
  require(!grid.empty(), "refresh interval grid is empty");
  std::vector<unsigned char> diverged(grid.size() * replications, 0);
  parallel_for(grid.size() * replications, workers, [&](std::size_t task) {
    const std::size_t g = task / replications, r = task % replications;
    const auto [x0, v0] = replication_start(target, seed, r);
    diverged[task] = coupled_pair(grid[g], horizon, x0, v0, target, seed, r, options).diverged ? 1 : 0;
  });
  std::vector<DivergencePoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < replications; ++r) hits += diverged[g * replications + r];
    const double f = static_cast<double>(hits) / static_cast<double>(replications);
    out.push_back({grid[g], f, std::sqrt(f * (1.0 - f) / static_cast<double>(replications)), replications});
  }
  return out;
}

/// Least-squares slope of log frequency against log delta t (points with
/// zero frequency are skipped).
inline double log_log_slope(const std::vector<DivergencePoint>& curve) {
  std::vector<double> lx, ly;
  for (const auto& p : curve) {
    if (p.frequency <= 0.0) continue;
    lx.push_back(std::log(p.delta_t));
    ly.push_back(std::log(p.frequency));
  }
  require(lx.size() >= 2, "need two nonzero frequencies for a slope");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace bouncy
