#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "bouncy/hbps.hpp"

namespace bouncy {

struct NutsConfig {
  double base_step = 0.1;  // trajectory-time quantum
  int max_depth = 10;
  double uturn_tol = 0.0;
  HbpsSolverConfig solver{};
};

/// 0.1 sqrt(lambda_max) of a covariance estimate, lambda_max by power iteration.
inline double heuristic_base_step(const Mat& covariance, double rel_tol = 1e-6, int max_iter = 10000) {
  require(covariance.rows() == covariance.cols() && covariance.rows() > 0, "covariance must be square");
  const Index d = covariance.rows();
  Vec u(d);
  for (Index i = 0; i < d; ++i) u[i] = 1.0 + 0.1 * static_cast<double>(i) / static_cast<double>(d);
  u.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec w = covariance * u;
    const double rayleigh = u.dot(w);
    if (rayleigh < -1e-10) throw Error(ErrorKind::NotPSD, "negative Rayleigh quotient in power iteration");
    const double norm = w.norm();
    if (norm == 0.0) break;
    const bool converged = it > 0 && std::abs(rayleigh - lambda) <= rel_tol * std::abs(rayleigh);
    lambda = rayleigh;
    u = w / norm;
    if (converged) break;
  }
  if (!(lambda > 0.0)) throw Error(ErrorKind::NotPSD, "covariance has no positive eigenvalue");
  return 0.1 * std::sqrt(lambda);
}

/// A No-U-Turn path in time order with the doubling history that produced it.
struct NutsTree {
  std::vector<AugmentedState> states;
  std::vector<int> directions;  // +1 forward, -1 backward; one per attempted doubling
  std::size_t origin = 0;       // index of the starting state
  int depth = 0;                // accepted doublings
  bool max_depth_reached = false;
};

namespace detail {

inline bool u_turn(const AugmentedState& minus, const AugmentedState& plus, double tol) {
  const Vec dx = plus.x - minus.x;
  return dx.dot(minus.v) < tol || dx.dot(plus.v) < tol;
}

/// One base step of HBPS dynamics forward in time, or backward by running
/// the dynamics on the negated velocity (time reversibility).
template <TargetModel T>
AugmentedState nuts_base_step(const AugmentedState& s, int direction, const T& target, const NutsConfig& cfg) {
  if (direction > 0) return hbps_simulate(cfg.base_step, s, target, cfg.solver).state;
  AugmentedState flipped{s.x, -s.v, s.p};
  AugmentedState out = hbps_simulate(cfg.base_step, std::move(flipped), target, cfg.solver).state;
  out.v = -out.v;
  return out;
}

/// 2^level new states beyond `edge`, in generation order, or nothing when an
/// aligned block inside them makes a U-turn.
template <TargetModel T>
std::optional<std::vector<AugmentedState>> nuts_extension(const AugmentedState& edge, int direction, int level,
                                                          const T& target, const NutsConfig& cfg) {
  const std::size_t count = std::size_t{1} << level;
  std::vector<AugmentedState> fresh;
  fresh.reserve(count);
  AugmentedState cursor = edge;
  for (std::size_t k = 0; k < count; ++k) {
    cursor = nuts_base_step(cursor, direction, target, cfg);
    fresh.push_back(cursor);
    // Every aligned block that just completed is checked for a U-turn.
    for (std::size_t block = 2; block <= count && (k + 1) % block == 0; block *= 2) {
      const AugmentedState& first = fresh[k + 1 - block];
      const AugmentedState& last = fresh[k];
      const bool turned = direction > 0 ? u_turn(first, last, cfg.uturn_tol) : u_turn(last, first, cfg.uturn_tol);
      if (turned) return std::nullopt;
    }
  }
  return fresh;
}

template <TargetModel T, class ChooseDirection, class OnAccept>
NutsTree grow_tree(const AugmentedState& start, const T& target, const NutsConfig& cfg, ChooseDirection&& choose,
                   OnAccept&& on_accept) {
  require(cfg.base_step > 0.0, "base step must be positive");
  require(cfg.max_depth >= 1, "max depth must be at least 1");
  NutsTree tree;
  tree.states.push_back(start);
  for (int level = 0;; ++level) {
    if (level >= cfg.max_depth) {
      tree.max_depth_reached = true;
      break;
    }
    const int direction = choose(level);
    tree.directions.push_back(direction);
    const AugmentedState& edge = direction > 0 ? tree.states.back() : tree.states.front();
    auto fresh = nuts_extension(edge, direction, level, target, cfg);
    if (!fresh) break;
    on_accept(tree.states.size(), *fresh, direction);
    if (direction > 0) {
      tree.states.insert(tree.states.end(), fresh->begin(), fresh->end());
    } else {
      tree.states.insert(tree.states.begin(), fresh->rbegin(), fresh->rend());
      tree.origin += fresh->size();
    }
    ++tree.depth;
    if (u_turn(tree.states.front(), tree.states.back(), cfg.uturn_tol)) break;
  }
  return tree;
}

}  // namespace detail

/// Builds the doubling path from `start` with prescribed directions; the
/// sequence must cover every doubling that is attempted.
template <TargetModel T>
NutsTree build_path(const AugmentedState& start, const std::vector<int>& directions, const T& target,
                    const NutsConfig& cfg) {
  return detail::grow_tree(
      start, target, cfg,
      [&](int level) {
        require(static_cast<std::size_t>(level) < directions.size(), "direction sequence too short");
        return directions[static_cast<std::size_t>(level)];
      },
      [](std::size_t, const std::vector<AugmentedState>&, int) {});
}

/// Directions that regrow the same path from the state at `index`: at each
/// doubling the selected state's block lies on one side of its sibling.
inline std::vector<int> mirrored_directions(const NutsTree& tree, std::size_t index) {
  std::vector<int> out;
  for (int level = 0; level < tree.depth; ++level) out.push_back(((index >> level) & 1U) == 0 ? 1 : -1);
  if (tree.directions.size() > static_cast<std::size_t>(tree.depth)) out.push_back(tree.directions.back());
  return out;
}

struct NutsStep {
  AugmentedState state;
  int depth = 0;
  double total_time = 0.0;  // trajectory time spanned by the path
  bool max_depth_reached = false;
  NutsTree tree;
};

/// One No-U-Turn transition from x: draw (v, p), double the path in random
/// directions until a U-turn, and return a state chosen uniformly from the
/// accepted path. All path states share one augmented energy, so no
/// weighting is needed.
template <TargetModel T>
NutsStep nuts_step(const Vec& x, const NutsConfig& cfg, const T& target, Rng& rng) {
  const AugmentedState start = draw_auxiliary(rng, x);
  AugmentedState selected = start;
  NutsTree tree = detail::grow_tree(
      start, target, cfg, [&](int) { return rng.coin() ? 1 : -1; },
      [&](std::size_t old_size, const std::vector<AugmentedState>& fresh, int) {
        const double n_old = static_cast<double>(old_size);
        const double n_new = static_cast<double>(fresh.size());
        if (rng.uniform() * (n_old + n_new) < n_new) selected = fresh[rng.uniform_index(fresh.size())];
      });
  NutsStep out;
  out.state = std::move(selected);
  out.depth = tree.depth;
  out.total_time = static_cast<double>(tree.states.size() - 1) * cfg.base_step;
  out.max_depth_reached = tree.max_depth_reached;
  out.tree = std::move(tree);
  return out;
}

template <TargetModel T>
Chain nuts_sample(std::size_t iterations, const NutsConfig& cfg, const Vec& x0, const T& target, std::uint64_t seed,
                  std::uint64_t stream = 0, std::size_t thin = 1) {
  require(iterations >= 1, "iterations must be at least 1");
  Rng rng(seed, {stream});
  ChainRecorder recorder(iterations, x0.size(), thin);
  Vec x = x0;
  double depth_sum = 0.0;
  std::size_t capped = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < iterations; ++i) {
    NutsStep step = nuts_step(x, cfg, target, rng);
    x = std::move(step.state.x);
    depth_sum += step.depth;
    capped += step.max_depth_reached ? 1 : 0;
    recorder.record(x, step.tree.states.size() - 1, step.total_time);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  Chain chain = recorder.finish(elapsed.count());
  chain.meta["mean_depth"] = std::to_string(depth_sum / static_cast<double>(iterations));
  chain.meta["max_depth_hits"] = std::to_string(capped);
  return chain;
}

/// Mean trajectory time selected by a No-U-Turn chain.
inline double mean_travel_time(const Chain& chain) {
  double s = 0.0;
  for (double t : chain.travel_times) s += t;
  return chain.travel_times.empty() ? 0.0 : s / static_cast<double>(chain.travel_times.size());
}

/// Base step from a pilot run of plain HBPS: covariance of the pilot chain fed
/// to the eigenvalue heuristic.
template <TargetModel T>
double pilot_base_step(const T& target, const Vec& x0, std::size_t pilot_iterations, double travel_time,
                       std::uint64_t seed) {
  SampleSettings pilot;
  pilot.iterations = pilot_iterations;
  pilot.travel_time = travel_time;
  pilot.seed = seed;
  pilot.stream = 0x9170;
  const Chain chain = hbps_sample(pilot, x0, target);
  const Mat centered = chain.samples.rowwise() - chain.samples.colwise().mean();
  const Mat cov = centered.transpose() * centered / static_cast<double>(std::max<Index>(chain.size() - 1, 1));
  return heuristic_base_step(cov);
}

}  // namespace bouncy
