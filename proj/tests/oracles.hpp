#pragma once

// Independent reference computations shared by the test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace testing_oracles {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Central-difference Jacobian of map at z.
template <class Map>
Mat fd_jacobian(Map&& map, const Vec& z, double h) {
  const Vec f0 = map(z);
  Mat jac(f0.size(), z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    Vec zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    jac.col(j) = (map(zp) - map(zm)) / (2.0 * h);
  }
  return jac;
}

/// Richardson-extrapolated central differences, error O(h^4).
template <class Map>
Mat fd_jacobian_richardson(Map&& map, const Vec& z, double h) {
  return (4.0 * fd_jacobian(map, z, 0.5 * h) - fd_jacobian(map, z, h)) / 3.0;
}

/// Central-difference gradient of a scalar function.
template <class F>
Vec fd_gradient(F&& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Two-sided Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> xs, Cdf&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Batch-means standard error of the mean, an estimator independent of the
/// spectral ESS used by the library.
inline double batch_means_se(const std::vector<double>& xs, std::size_t batches = 50) {
  const std::size_t size = xs.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < size; ++i) means[b] += xs[b * size + i];
    means[b] /= static_cast<double>(size);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

}  // namespace testing_oracles
