#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "bouncy/concepts.hpp"
#include "bouncy/error.hpp"
#include "bouncy/types.hpp"

namespace bouncy {

/// Flat surrogate U_* = 0: straight-line motion at constant velocity.
struct LinearFlow {
  static constexpr bool is_linear = true;

  double potential(const Vec&) const { return 0.0; }
  Vec gradient(const Vec& x) const { return Vec::Zero(x.size()); }
  std::pair<Vec, Vec> flow(double t, const Vec& x, const Vec& v) const { return {x + t * v, v}; }
};

/// Isotropic quadratic surrogate U_*(x) = omega^2 |x - center|^2 / 2.
/// An empty center means the origin.
class HarmonicFlow {
 public:
  static constexpr bool is_linear = false;

  explicit HarmonicFlow(double omega = 1.0, Vec center = Vec()) : omega_(omega), center_(std::move(center)) {
    require(omega > 0.0, "harmonic flow requires omega > 0");
  }

  double omega() const { return omega_; }
  double period() const { return 2.0 * std::numbers::pi / omega_; }

  double potential(const Vec& x) const { return 0.5 * omega_ * omega_ * offset(x).squaredNorm(); }
  Vec gradient(const Vec& x) const { return omega_ * omega_ * offset(x); }

  std::pair<Vec, Vec> flow(double t, const Vec& x, const Vec& v) const {
    // Reduce the phase before the trig calls so long flows keep full accuracy.
    const double phase = std::remainder(omega_ * t, 2.0 * std::numbers::pi);
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    const Vec y = offset(x);
    Vec xt = y * c + v * (s / omega_);
    if (center_.size() != 0) xt += center_;
    Vec vt = v * c - y * (omega_ * s);
    return {std::move(xt), std::move(vt)};
  }

 private:
  Vec offset(const Vec& x) const { return center_.size() == 0 ? x : Vec(x - center_); }

  double omega_;
  Vec center_;
};

/// Kick-drift-kick leapfrog approximation of the surrogate dynamics of
/// `Potential`, taking `substeps` steps per call to flow().
template <class Potential>
class LeapfrogFlow {
 public:
  static constexpr bool is_linear = false;

  LeapfrogFlow(Potential potential, int substeps) : potential_(std::move(potential)), substeps_(substeps) {
    require(substeps >= 1, "leapfrog requires at least one substep");
  }

  double potential(const Vec& x) const { return potential_.potential(x); }
  Vec gradient(const Vec& x) const { return potential_.gradient(x); }

  std::pair<Vec, Vec> flow(double t, const Vec& x, const Vec& v) const {
    const double h = t / substeps_;
    Vec xt = x;
    Vec vt = v;
    for (int k = 0; k < substeps_; ++k) {
      vt -= 0.5 * h * potential_.gradient(xt);
      xt += h * vt;
      vt -= 0.5 * h * potential_.gradient(xt);
    }
    return {std::move(xt), std::move(vt)};
  }

  int substeps() const { return substeps_; }

 private:
  Potential potential_;
  int substeps_;
};

}  // namespace bouncy
