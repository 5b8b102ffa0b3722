#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "bouncy/chain.hpp"
#include "bouncy/error.hpp"
#include "bouncy/types.hpp"

namespace bouncy {

struct ArFit {
  int order = 0;
  std::vector<double> coefficients;
  double innovation_variance = 0.0;  // scaled for the fitted order
};

/// Yule-Walker autoregression with the order chosen by AIC among 0..max_order.
inline ArFit fit_ar_aic(const Eigen::Ref<const Vec>& series, int max_order) {
  const Index n = series.size();
  const double mean = series.mean();
  const Vec centered = series.array() - mean;
  std::vector<double> acov(static_cast<std::size_t>(max_order) + 1);
  for (int k = 0; k <= max_order; ++k) {
    acov[static_cast<std::size_t>(k)] = centered.head(n - k).dot(centered.tail(n - k)) / static_cast<double>(n);
  }

  // Levinson-Durbin, keeping the best AIC fit seen.
  std::vector<double> phi, prev;
  double sigma2 = acov[0];
  ArFit best{0, {}, sigma2};
  double best_aic = static_cast<double>(n) * std::log(sigma2);
  for (int k = 1; k <= max_order; ++k) {
    double num = acov[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j) num -= phi[static_cast<std::size_t>(j - 1)] * acov[static_cast<std::size_t>(k - j)];
    const double reflection = num / sigma2;
    prev = phi;
    phi.assign(static_cast<std::size_t>(k), 0.0);
    for (int j = 1; j < k; ++j) {
      phi[static_cast<std::size_t>(j - 1)] =
          prev[static_cast<std::size_t>(j - 1)] - reflection * prev[static_cast<std::size_t>(k - j - 1)];
    }
    phi[static_cast<std::size_t>(k - 1)] = reflection;
    sigma2 *= (1.0 - reflection * reflection);
    if (!(sigma2 > 0.0)) break;
    const double aic = static_cast<double>(n) * std::log(sigma2) + 2.0 * k;
    if (aic < best_aic) {
      best_aic = aic;
      best = {k, phi, sigma2};
    }
  }
  best.innovation_variance *= static_cast<double>(n) / static_cast<double>(n - (best.order + 1));
  return best;
}

/// Spectral density at frequency zero from an AR fit.
inline double spectrum_at_zero(const Eigen::Ref<const Vec>& series) {
  const Index n = series.size();
  const int max_order = static_cast<int>(std::min<Index>(50, n / 10));
  const ArFit fit = fit_ar_aic(series, max_order);
  double sum = 0.0;
  for (double c : fit.coefficients) sum += c;
  return fit.innovation_variance / ((1.0 - sum) * (1.0 - sum));
}

/// Effective sample size n var / S(0), clamped to (0, n].
inline double ess(const Eigen::Ref<const Vec>& series) {
  const Index n = series.size();
  require(n >= 100, "effective sample size needs at least 100 values");
  const double mean = series.mean();
  const double var = (series.array() - mean).square().sum() / static_cast<double>(n - 1);
  if (!(var >= 1e-300)) throw Error(ErrorKind::DegenerateSeries, "series variance is zero");
  const double s0 = spectrum_at_zero(series);
  const double value = static_cast<double>(n) * var / s0;
  if (!std::isfinite(value)) return static_cast<double>(n);
  return std::clamp(value, std::numeric_limits<double>::min(), static_cast<double>(n));
}

inline double ess(const std::vector<double>& series) {
  return ess(Eigen::Map<const Vec>(series.data(), static_cast<Index>(series.size())));
}

struct EssReport {
  std::vector<double> per_dimension;
  std::vector<Index> dimensions;
  double min_ess = 0.0;
  Index argmin = 0;           // dimension attaining the minimum
  double ess_per_second = 0.0;  // min ESS over the chain's wall time; NaN without timing
};

/// Per-dimension ESS and its minimum, optionally over a subset of columns.
inline EssReport min_ess_report(const Chain& chain, const std::optional<std::vector<Index>>& dims = std::nullopt) {
  require(chain.size() > 0, "chain is empty");
  EssReport r;
  if (dims) {
    r.dimensions = *dims;
  } else {
    for (Index j = 0; j < chain.dimension(); ++j) r.dimensions.push_back(j);
  }
  require(!r.dimensions.empty(), "no dimensions selected");
  r.min_ess = std::numeric_limits<double>::infinity();
  for (Index j : r.dimensions) {
    require(j >= 0 && j < chain.dimension(), "dimension out of range");
    const double e = ess(chain.samples.col(j));
    r.per_dimension.push_back(e);
    if (e < r.min_ess) {
      r.min_ess = e;
      r.argmin = j;
    }
  }
  r.ess_per_second =
      chain.wall_seconds > 0.0 ? r.min_ess / chain.wall_seconds : std::numeric_limits<double>::quiet_NaN();
  return r;
}

/// Monte Carlo standard error of the mean of a series, sqrt(var / ESS).
inline double mc_standard_error(const Eigen::Ref<const Vec>& series) {
  const Index n = series.size();
  const double mean = series.mean();
  const double var = (series.array() - mean).square().sum() / static_cast<double>(n - 1);
  return std::sqrt(var / ess(series));
}

}  // namespace bouncy
