#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "bouncy/error.hpp"

namespace bouncy::roots {

struct RootOptions {
  double tol = 1e-10;  // on |f|
  int max_iter = 200;
};

namespace detail {
inline bool inside(double t, double a, double b) { return t > std::min(a, b) && t < std::max(a, b); }
inline bool within(double t, double a, double b) { return t >= std::min(a, b) && t <= std::max(a, b); }
inline bool width_exhausted(double a, double b) {
  return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(a), std::abs(b), 1e-300});
}
}  // namespace detail

/// Newton iteration confined to a sign-change bracket; a step that leaves the
/// bracket or fails to halve the residual is replaced by bisection.
/// `f(t)` must return `{value, derivative}`. Iteration starts from `hi`: the
/// lower end is often a restart point whose residual is small only because
/// the function also vanishes just below it.
template <class F>
double safeguarded_newton(F&& f, double lo, double hi, double flo, double fhi, const RootOptions& opt = {}) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw Error(ErrorKind::RootBracketFailure, "endpoints do not bracket a sign change");
  }
  // neg/pos track the bracket ends by sign of f.
  double neg = flo < 0.0 ? lo : hi;
  double pos = flo < 0.0 ? hi : lo;
  double t = hi;
  double best = t;
  double best_abs = std::abs(fhi);
  double last_step = std::abs(hi - lo);

  for (int it = 0; it < opt.max_iter; ++it) {
    auto [ft, dft] = f(t);
    if (std::abs(ft) < best_abs) {
      best_abs = std::abs(ft);
      best = t;
    }
    if (ft == 0.0) return t;
    if (ft < 0.0) neg = t; else pos = t;
    const double newton = (dft != 0.0 && std::isfinite(dft)) ? t - ft / dft : std::numeric_limits<double>::quiet_NaN();
    if (std::abs(ft) <= opt.tol) {
      // One extra step is nearly free and squares the residual.
      if (!std::isfinite(newton)) return t;
      return std::clamp(newton, std::min(neg, pos), std::max(neg, pos));
    }
    double next;
    if (std::isfinite(newton) && detail::within(newton, neg, pos) && std::abs(newton - t) < 0.5 * last_step) {
      next = newton;
    } else {
      next = 0.5 * (neg + pos);
    }
    last_step = std::abs(next - t);
    t = next;
    if (detail::width_exhausted(neg, pos)) return best;
  }
  return best;
}

/// Illinois-modified regula falsi for brackets where no derivative is available.
template <class F>
double bracketed_secant(F&& f, double lo, double hi, double flo, double fhi, const RootOptions& opt = {}) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw Error(ErrorKind::RootBracketFailure, "endpoints do not bracket a sign change");
  }
  double a = lo, b = hi, fa = flo, fb = fhi;
  int side = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    double c = (a * fb - b * fa) / (fb - fa);
    if (!detail::inside(c, a, b)) c = 0.5 * (a + b);
    const double fc = f(c);
    if (std::abs(fc) <= opt.tol || detail::width_exhausted(a, b)) return c;
    if ((fc < 0.0) == (fb < 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return std::abs(fa) < std::abs(fb) ? a : b;
}

}  // namespace bouncy::roots
