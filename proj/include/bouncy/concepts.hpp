#pragma once

#include <concepts>
#include <utility>
#include <vector>

#include "bouncy/types.hpp"

namespace bouncy {

struct LinearConstraint;

/// Surrogate Hamiltonian dynamics with kinetic energy |v|^2/2: potential U_*,
/// its gradient, and the solution operator (t, x, v) -> (x_t, v_t).
template <class F>
concept SurrogateFlow = requires(const F& f, const Vec& x, const Vec& v, double t) {
  { f.potential(x) } -> std::convertible_to<double>;
  { f.gradient(x) } -> std::convertible_to<Vec>;
  { f.flow(t, x, v) } -> std::same_as<std::pair<Vec, Vec>>;
};

/// Flows whose trajectories are straight lines x + t v (flat surrogate).
template <class F>
concept LinearSurrogate = SurrogateFlow<F> && F::is_linear;

template <class T>
concept TargetModel = requires(const T& t, const Vec& x) {
  { t.dimension() } -> std::convertible_to<Index>;
  { t.potential(x) } -> std::convertible_to<double>;
  { t.gradient(x) } -> std::convertible_to<Vec>;
};

/// Closed-form restriction g(t) = U(x + t v) with first and second derivatives.
template <class L>
concept LineFunction = requires(const L& line, double t) {
  { line.value(t) } -> std::convertible_to<double>;
  { line.slope(t) } -> std::convertible_to<double>;
  { line.curvature(t) } -> std::convertible_to<double>;
};

template <class T>
concept HasLineRestriction = TargetModel<T> && requires(const T& t, const Vec& x, const Vec& v) {
  { t.line(x, v) } -> LineFunction;
};

template <class T>
concept HasConstraints = requires(const T& t) {
  { t.constraints() } -> std::convertible_to<const std::vector<LinearConstraint>&>;
};

template <class T>
concept DeclaresLogConcavity = requires(const T& t) {
  { t.log_concave() } -> std::convertible_to<bool>;
};

template <class T>
bool is_log_concave(const T& target) {
  if constexpr (DeclaresLogConcavity<T>) return target.log_concave();
  else return false;
}

}  // namespace bouncy
