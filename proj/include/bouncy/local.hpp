#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "bouncy/hbps.hpp"

namespace bouncy {

/// Depletion of one factor's inertia along a single straight segment x + t v.
class FactorSegment {
 public:
  virtual ~FactorSegment() = default;
  /// d/dt of the depleted amount at time t.
  virtual double rate(double t) const = 0;
  /// First t in (0, horizon] at which inertia p is used up.
  virtual std::optional<double> depletion_time(double p, double horizon, const DynamicsOptions& opt) const = 0;
  /// Inertia left at time t when starting the segment with p.
  virtual double inertia_after(double p, double t) const = 0;
};

/// One factor of a local decomposition: a coordinate subset N_f and the
/// part of the potential gradient it owns.
class Factor {
 public:
  explicit Factor(std::vector<Index> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    require(!indices_.empty(), "factor needs at least one coordinate");
    require(std::adjacent_find(indices_.begin(), indices_.end()) == indices_.end(), "factor indices repeat");
  }
  virtual ~Factor() = default;

  const std::vector<Index>& indices() const { return indices_; }
  /// Gradient of the factor, full length and zero outside the indices.
  virtual Vec gradient(const Vec& x) const = 0;
  virtual std::unique_ptr<FactorSegment> segment(const Vec& x, const Vec& v) const = 0;

 private:
  std::vector<Index> indices_;
};

using FactorList = std::vector<std::shared_ptr<const Factor>>;

/// Reflection against a factor gradient; coordinates outside the factor are
/// untouched because the gradient vanishes there.
inline Vec restricted_reflect(const Vec& v, const Vec& grad_f, double grad_tol = 1e-14) {
  return reflect(v, grad_f, grad_tol);
}

// ---------------------------------------------------------------------------

/// Factor with its own potential U_f(x), depleted through the potential
/// difference exactly as the global engine does.
template <TargetModel U, class Solver = HbpsSolver>
class PotentialFactor final : public Factor {
 public:
  PotentialFactor(std::vector<Index> indices, U potential, Solver solver = {})
      : Factor(std::move(indices)), potential_(std::move(potential)), solver_(std::move(solver)) {}

  Vec gradient(const Vec& x) const override { return potential_.gradient(x); }

  std::unique_ptr<FactorSegment> segment(const Vec& x, const Vec& v) const override {
    return std::make_unique<Segment>(this, x, v);
  }

  const U& potential() const { return potential_; }

 private:
  using Path = decltype(make_path(LinearFlow{}, std::declval<const U&>(), std::declval<const Vec&>(),
                                  std::declval<const Vec&>()));

  class Segment final : public FactorSegment {
   public:
    Segment(const PotentialFactor* owner, const Vec& x, const Vec& v)
        : owner_(owner), x_(x), v_(v), path_(make_path(LinearFlow{}, owner->potential_, x, v)) {}

    double rate(double t) const override { return path_.slope(t); }

    std::optional<double> depletion_time(double p, double horizon, const DynamicsOptions& opt) const override {
      return owner_->solver_(LinearFlow{}, owner_->potential_, AugmentedState{x_, v_, p}, path_, horizon, opt);
    }

    double inertia_after(double p, double t) const override {
      const double start = path_.value(0.0);
      return deplete(p, start, path_.value(t));
    }

   private:
    const PotentialFactor* owner_;
    Vec x_, v_;
    Path path_;
  };

  U potential_;
  Solver solver_;
};

namespace detail {

/// Smallest t in (0, horizon] with c2 t^2 + c1 t + c0 = 0 and the quadratic
/// crossing upwards, computed without cancellation.
inline std::optional<double> first_upward_root(double c2, double c1, double c0, double horizon) {
  std::array<double, 2> roots{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  if (c2 == 0.0) {
    if (c1 != 0.0) roots[0] = -c0 / c1;
  } else {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return std::nullopt;
    const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
    if (q != 0.0) {
      roots[0] = q / c2;
      roots[1] = c0 / q;
    } else {
      roots[0] = 0.0;
      roots[1] = 0.0;
    }
  }
  std::optional<double> best;
  for (double r : roots) {
    if (!(r > 0.0) || r > horizon) continue;
    if (2.0 * c2 * r + c1 < 0.0) continue;  // downward crossing
    if (!best || r < *best) best = r;
  }
  return best;
}

}  // namespace detail

/// Block of coordinates of a Gaussian target, depleted at rate
/// v_N . (grad U)_N. Along a line this rate is affine in t, so depletion
/// times are roots of a quadratic.
class GaussianBlockFactor final : public Factor {
 public:
  GaussianBlockFactor(std::vector<Index> indices, std::shared_ptr<const GaussianTarget> target)
      : Factor(std::move(indices)), target_(std::move(target)) {
    for (Index i : this->indices()) require(i >= 0 && i < target_->dimension(), "factor index out of range");
  }

  Vec gradient(const Vec& x) const override { return restrict(target_->gradient(x)); }

  std::unique_ptr<FactorSegment> segment(const Vec& x, const Vec& v) const override {
    const Vec g = target_->gradient(x);
    const Vec lv = target_->precision() * v;
    double b = 0.0, a = 0.0;
    for (Index i : indices()) {
      b += v[i] * g[i];
      a += v[i] * lv[i];
    }
    return std::make_unique<Segment>(b, a);
  }

 private:
  class Segment final : public FactorSegment {
   public:
    Segment(double initial_rate, double acceleration) : b_(initial_rate), a_(acceleration) {}
    double rate(double t) const override { return b_ + a_ * t; }
    double depleted(double t) const { return t * (b_ + 0.5 * a_ * t); }
    std::optional<double> depletion_time(double p, double horizon, const DynamicsOptions&) const override {
      if (p == 0.0 && b_ >= 0.0) {
        throw Error(ErrorKind::DegenerateStart, "zero factor inertia with non-negative depletion rate");
      }
      return detail::first_upward_root(0.5 * a_, b_, -p, horizon);
    }
    double inertia_after(double p, double t) const override { return p - depleted(t); }

   private:
    double b_, a_;
  };

  Vec restrict(const Vec& g) const {
    Vec out = Vec::Zero(g.size());
    for (Index i : indices()) out[i] = g[i];
    return out;
  }

  std::shared_ptr<const GaussianTarget> target_;
};

/// Block of coordinates of an arbitrary target, depleted at rate
/// v_N . (grad U)_N. The depletion integral is evaluated by composite
/// Gauss-Legendre quadrature.
template <TargetModel T>
class GradientBlockFactor final : public Factor {
 public:
  GradientBlockFactor(std::vector<Index> indices, std::shared_ptr<const T> target)
      : Factor(std::move(indices)), target_(std::move(target)) {
    for (Index i : this->indices()) require(i >= 0 && i < target_->dimension(), "factor index out of range");
  }

  Vec gradient(const Vec& x) const override {
    const Vec g = target_->gradient(x);
    Vec out = Vec::Zero(g.size());
    for (Index i : indices()) out[i] = g[i];
    return out;
  }

  std::unique_ptr<FactorSegment> segment(const Vec& x, const Vec& v) const override {
    return std::make_unique<Segment>(this, x, v);
  }

 private:
  class Segment final : public FactorSegment {
   public:
    Segment(const GradientBlockFactor* owner, const Vec& x, const Vec& v) : owner_(owner), x_(x), v_(v) {}

    double rate(double t) const override {
      const Vec g = owner_->target_->gradient(x_ + t * v_);
      double r = 0.0;
      for (Index i : owner_->indices()) r += v_[i] * g[i];
      return r;
    }

    /// Integral of the rate over [a, b], 8-point Gauss-Legendre.
    double integral(double a, double b) const {
      static constexpr std::array<double, 4> nodes{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                   0.9602898564975363};
      static constexpr std::array<double, 4> weights{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                     0.1012285362903763};
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      double s = 0.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        s += weights[k] * (rate(mid - half * nodes[k]) + rate(mid + half * nodes[k]));
      }
      return half * s;
    }

    double depleted(double t) const {
      const double h = panel(t);
      double s = 0.0, a = 0.0;
      while (a < t) {
        const double b = std::min(a + h, t);
        s += integral(a, b);
        a = b;
      }
      return s;
    }

    std::optional<double> depletion_time(double p, double horizon, const DynamicsOptions& opt) const override {
      if (!(horizon > 0.0)) return std::nullopt;
      double ra = rate(0.0);
      if (p == 0.0 && ra >= 0.0) {
        throw Error(ErrorKind::DegenerateStart, "zero factor inertia with non-negative depletion rate");
      }
      const double step = opt.scan_step.value_or(std::min(0.1 * horizon, 1.0 / (1.0 + std::abs(ra))));
      double ta = 0.0, da = 0.0;  // depleted amount at ta
      auto solve = [&](double lo, double dlo, double hi, double dhi) {
        auto f = [&](double t) { return std::pair{dlo + integral(lo, t) - p, rate(t)}; };
        double flo = dlo - p;
        if (flo >= 0.0) return lo;
        if (flo == 0.0) flo = -std::numeric_limits<double>::min();
        return roots::safeguarded_newton(f, lo, hi, flo, dhi - p, opt.root);
      };
      while (ta < horizon) {
        const double tb = std::min(ta + step, horizon);
        const double rb = rate(tb);
        const double db = da + integral(ta, tb);
        if (db - p >= 0.0) return solve(ta, da, tb, db);
        if (ra > 0.0 && rb < 0.0) {
          const double tm = roots::bracketed_secant([&](double t) { return rate(t); }, ta, tb, ra, rb, {0.0, 100});
          const double dm = da + integral(ta, tm);
          if (dm - p >= 0.0) return solve(ta, da, tm, dm);
        }
        ta = tb;
        da = db;
        ra = rb;
      }
      return std::nullopt;
    }

    double inertia_after(double p, double t) const override { return p - depleted(t); }

   private:
    double panel(double t) const { return std::max(t / 8.0, std::min(t, 0.25)); }

    const GradientBlockFactor* owner_;
    Vec x_, v_;
  };

  std::shared_ptr<const T> target_;
};

// ---------------------------------------------------------------------------

/// A single factor covering every coordinate, depleted through the target
/// potential. Local dynamics with this factor alone are the global dynamics.
template <TargetModel T, class Solver = HbpsSolver>
std::shared_ptr<const Factor> global_factor(const T& target, Solver solver = {}) {
  std::vector<Index> all(static_cast<std::size_t>(target.dimension()));
  for (Index i = 0; i < target.dimension(); ++i) all[static_cast<std::size_t>(i)] = i;
  return std::make_shared<PotentialFactor<T, Solver>>(std::move(all), target, std::move(solver));
}

/// Factors over explicit coordinate blocks, which must partition 0..d-1 so
/// that the factor rates sum to the full directional derivative.
template <TargetModel T>
FactorList block_factors(const T& target, const std::vector<std::vector<Index>>& blocks,
                         const HbpsSolverConfig& cfg = {}) {
  const Index d = target.dimension();
  std::vector<int> seen(static_cast<std::size_t>(d), 0);
  for (const auto& block : blocks) {
    for (Index i : block) {
      require(i >= 0 && i < d, "factor index out of range");
      ++seen[static_cast<std::size_t>(i)];
    }
  }
  for (int count : seen) require(count == 1, "factor blocks must partition the coordinates");
  if (blocks.size() == 1) return {global_factor(target, HbpsSolver{cfg})};

  FactorList out;
  if constexpr (std::same_as<T, GaussianTarget>) {
    auto shared = std::make_shared<const GaussianTarget>(target);
    for (const auto& block : blocks) out.push_back(std::make_shared<GaussianBlockFactor>(block, shared));
  } else {
    if constexpr (std::same_as<T, AnyTarget>) {
      if (const auto* g = target.template as<GaussianTarget>()) return block_factors(*g, blocks, cfg);
    }
    auto shared = std::make_shared<const T>(target);
    for (const auto& block : blocks) out.push_back(std::make_shared<GradientBlockFactor<T>>(block, shared));
  }
  return out;
}

/// One factor per coordinate (the Hamiltonian zig-zag decomposition).
template <TargetModel T>
FactorList coordinate_factors(const T& target, const HbpsSolverConfig& cfg = {}) {
  std::vector<std::vector<Index>> blocks;
  for (Index i = 0; i < target.dimension(); ++i) blocks.push_back({i});
  return block_factors(target, blocks, cfg);
}

// ---------------------------------------------------------------------------

struct LocalState {
  Vec x;
  Vec v;
  std::vector<double> inertias;  // one per factor
};

struct LocalResult {
  LocalState state;
  EventLog events;
};

/// Local bouncy dynamics: every factor carries its own inertia; the factor
/// whose inertia runs out first bounces with a restricted reflection while
/// the others keep their partial depletion.
inline LocalResult local_simulate(double duration, LocalState s, const FactorList& factors,
                                  const DynamicsOptions& opt = {}) {
  require(duration > 0.0, "trajectory time must be positive");
  require(!factors.empty(), "at least one factor is required");
  require(s.inertias.size() == factors.size(), "one inertia per factor is required");
  require(s.x.size() == s.v.size(), "state dimension mismatch");
  for (double p : s.inertias) require(p >= 0.0, "inertias must be nonnegative");

  EventLog log(opt.record_events);
  std::vector<std::unique_ptr<FactorSegment>> segments(factors.size());
  auto bounce = [&](std::size_t f, const Vec& x, const Vec& v, double tau) {
    const Vec grad = factors[f]->gradient(x);
    Vec reflected = restricted_reflect(v, grad, opt.grad_tol);
    log.add(tau, EventKind::Bounce, grad, x, reflected);
    if (log.total() > opt.max_events) {
      throw Error(ErrorKind::EventStorm, "more than " + std::to_string(opt.max_events) + " events in one trajectory");
    }
    return reflected;
  };

  double tau = 0.0;
  while (tau < duration) {
    const double remaining = duration - tau;
    for (std::size_t f = 0; f < factors.size(); ++f) segments[f] = factors[f]->segment(s.x, s.v);

    std::optional<std::size_t> immediate;
    for (std::size_t f = 0; f < factors.size() && !immediate; ++f) {
      if (s.inertias[f] == 0.0 && segments[f]->rate(0.0) > 0.0) immediate = f;
    }
    if (immediate) {
      s.v = bounce(*immediate, s.x, s.v, tau);
      continue;
    }

    std::optional<double> first;
    std::size_t owner = 0;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const auto t = segments[f]->depletion_time(s.inertias[f], remaining, opt);
      if (t && (!first || *t < *first)) {
        first = t;
        owner = f;
      }
    }

    if (!first) {
      for (std::size_t f = 0; f < factors.size(); ++f) s.inertias[f] = segments[f]->inertia_after(s.inertias[f], remaining);
      s.x = s.x + remaining * s.v;
      break;
    }

    const double t = *first;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      s.inertias[f] = f == owner ? 0.0 : std::max(segments[f]->inertia_after(s.inertias[f], t), 0.0);
    }
    s.x = s.x + t * s.v;
    tau = (t == remaining) ? duration : tau + t;
    s.v = bounce(owner, s.x, s.v, tau);
  }
  if (log.keeps_records()) log.add(duration, EventKind::End, Vec(), s.x, s.v);
  return {std::move(s), std::move(log)};
}

/// Augmented energy with one inertia per factor.
template <TargetModel T>
double local_energy(const T& target, const LocalState& s) {
  double total = target.potential(s.x) + 0.5 * s.v.squaredNorm();
  for (double p : s.inertias) total += p;
  return total;
}

/// Draws v ~ N(0, I) and then one Exp(1) inertia per factor.
inline LocalState draw_local_auxiliary(Rng& rng, const Vec& x, std::size_t factor_count) {
  LocalState s{x, rng.normal_vector(x.size()), std::vector<double>(factor_count)};
  for (double& p : s.inertias) p = rng.exponential();
  return s;
}

/// Rejection-free sampler around local dynamics.
inline Chain local_sample(const SampleSettings& cfg, const Vec& x0, const FactorList& factors,
                          const HbpsSolverConfig& solver = {}) {
  require(cfg.iterations >= 1, "iterations must be at least 1");
  require(cfg.travel_time > 0.0, "travel time must be positive");
  const DynamicsOptions opt = hbps_dynamics_options(solver, cfg.dynamics);
  Rng rng(cfg.seed, {cfg.stream});
  ChainRecorder recorder(cfg.iterations, x0.size(), cfg.thin);
  Vec x = x0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    LocalResult r = local_simulate(cfg.travel_time, draw_local_auxiliary(rng, x, factors.size()), factors, opt);
    x = std::move(r.state.x);
    recorder.record(x, r.events, cfg.travel_time);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return recorder.finish(elapsed.count());
}

/// Hamiltonian zig-zag: local dynamics over coordinate factors.
template <TargetModel T>
Chain zigzag_sample(const SampleSettings& cfg, const Vec& x0, const T& target, const HbpsSolverConfig& solver = {}) {
  return local_sample(cfg, x0, coordinate_factors(target, solver), solver);
}

}  // namespace bouncy
