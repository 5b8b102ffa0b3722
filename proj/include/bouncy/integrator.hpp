#pragma once

#include <chrono>
#include <cmath>

#include "bouncy/core.hpp"
#include "bouncy/surrogates.hpp"

namespace bouncy {

enum class InnerFlow { Exact, Leapfrog };

struct SplitConfig {
  double step = 0.05;             // delta t
  int steps_per_proposal = 20;    // L
  InnerFlow inner_flow = InnerFlow::Exact;
  int leapfrog_substeps = 1;      // per half step, when inner_flow is Leapfrog
  double grad_tol = 1e-14;
};

struct SplitOutcome {
  AugmentedState state;
  bool bounced = false;
};

/// One step of the symmetric splitting scheme: half flow, midpoint inertia
/// update (or reflection when it would run out), half flow. Exactly zero
/// updated inertia counts as running out.
template <SurrogateFlow F, TargetModel T>
SplitOutcome split_step_detail(double dt, const AugmentedState& s, const F& flow, const T& target,
                               double grad_tol = 1e-14) {
  require(dt > 0.0, "step must be positive");
  auto [xm, vm] = flow.flow(0.5 * dt, s.x, s.v);
  const Vec grad = discrepancy_gradient(flow, target, xm);
  const double updated = s.p - dt * grad.dot(vm);
  SplitOutcome out;
  out.state.p = s.p;
  if (updated > 0.0) {
    out.state.p = updated;
  } else {
    vm = reflect(vm, grad, grad_tol);
    out.bounced = true;
  }
  auto [x1, v1] = flow.flow(0.5 * dt, xm, vm);
  out.state.x = std::move(x1);
  out.state.v = std::move(v1);
  return out;
}

template <SurrogateFlow F, TargetModel T>
AugmentedState split_step(double dt, const AugmentedState& s, const F& flow, const T& target, double grad_tol = 1e-14) {
  return split_step_detail(dt, s, flow, target, grad_tol).state;
}

/// L consecutive split steps; returns the end state and the number of
/// reflections taken.
template <SurrogateFlow F, TargetModel T>
std::pair<AugmentedState, std::size_t> split_trajectory(const SplitConfig& cfg, AugmentedState s, const F& flow,
                                                        const T& target) {
  require(cfg.steps_per_proposal >= 1, "steps per proposal must be at least 1");
  std::size_t bounces = 0;
  for (int k = 0; k < cfg.steps_per_proposal; ++k) {
    SplitOutcome o = split_step_detail(cfg.step, s, flow, target, cfg.grad_tol);
    bounces += o.bounced ? 1 : 0;
    s = std::move(o.state);
  }
  return {std::move(s), bounces};
}

/// Split-integrator proposals corrected by a Metropolis test on the
/// augmented energy U_tar + |v|^2/2 + p. A reflection demanded against a
/// vanishing gradient rejects the proposal.
template <SurrogateFlow F, TargetModel T>
Chain metropolis_sample(std::size_t iterations, const SplitConfig& cfg, const Vec& x0, const F& flow, const T& target,
                        std::uint64_t seed, std::uint64_t stream = 0, std::size_t thin = 1) {
  require(iterations >= 1, "iterations must be at least 1");
  require(cfg.step > 0.0, "step must be positive");
  require(cfg.steps_per_proposal >= 1, "steps per proposal must be at least 1");
  Rng rng(seed, {stream});
  ChainRecorder recorder(iterations, x0.size(), thin);
  Vec x = x0;
  std::size_t accepted = 0;
  const double travel = cfg.step * cfg.steps_per_proposal;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < iterations; ++i) {
    const AugmentedState s0 = draw_auxiliary(rng, x);
    const double h0 = augmented_energy(target, s0);
    std::size_t bounces = 0;
    bool accept = false;
    AugmentedState s1;
    try {
      std::tie(s1, bounces) = split_trajectory(cfg, s0, flow, target);
      const double h1 = augmented_energy(target, s1);
      accept = std::log(rng.uniform()) < h0 - h1;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroGradient) throw;
    }
    if (accept) {
      x = std::move(s1.x);
      ++accepted;
    }
    recorder.tally(EventKind::Bounce, bounces);
    recorder.record(x, bounces, travel);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  Chain chain = recorder.finish(elapsed.count());
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(iterations);
  return chain;
}

}  // namespace bouncy
