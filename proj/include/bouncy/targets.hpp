#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bouncy/concepts.hpp"
#include "bouncy/error.hpp"
#include "bouncy/rng.hpp"
#include "bouncy/types.hpp"

namespace bouncy {

/// Half-space {x : normal^T x >= offset}.
struct LinearConstraint {
  Vec normal;
  double offset = 0.0;

  double slack(const Vec& x) const { return normal.dot(x) - offset; }
};

inline constexpr double kFeasibilityTol = 1e-10;

struct BoundaryHit {
  double time;
  std::size_t index;
};

/// Earliest crossing of x + t v with a face whose normal points against v.
/// Ties resolve to the lowest constraint index.
inline std::optional<BoundaryHit> boundary_hit(const std::vector<LinearConstraint>& constraints, const Vec& x,
                                               const Vec& v, double tol = kFeasibilityTol) {
  std::optional<BoundaryHit> hit;
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const double slack = constraints[k].slack(x);
    if (slack < -tol) {
      throw Error(ErrorKind::Infeasible, "position violates constraint " + std::to_string(k) + " by " +
                                             std::to_string(-slack));
    }
    const double rate = constraints[k].normal.dot(v);
    if (rate >= 0.0) continue;
    const double t = std::max(slack, 0.0) / -rate;
    if (!hit || t < hit->time) hit = BoundaryHit{t, k};
  }
  return hit;
}

inline void check_feasible(const std::vector<LinearConstraint>& constraints, const Vec& x,
                           double tol = kFeasibilityTol) {
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    if (constraints[k].slack(x) < -tol) {
      throw Error(ErrorKind::Infeasible, "position violates constraint " + std::to_string(k));
    }
  }
}

/// g(t) = c0 + c1 t + c2 t^2 / 2.
struct QuadraticLine {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double value(double t) const { return c0 + t * (c1 + 0.5 * c2 * t); }
  double slope(double t) const { return c1 + c2 * t; }
  double curvature(double) const { return c2; }
};

/// Evaluates a target along x + t v through its potential and gradient; the
/// curvature comes from a central difference of the slope.
template <TargetModel T>
class GenericLine {
 public:
  GenericLine(const T& target, Vec x, Vec v) : target_(&target), x_(std::move(x)), v_(std::move(v)) {}

  double value(double t) const { return target_->potential(x_ + t * v_); }
  double slope(double t) const { return v_.dot(target_->gradient(x_ + t * v_)); }
  double curvature(double t) const {
    const double h = 1e-5 * (1.0 + std::abs(t));
    return (slope(t + h) - slope(t - h)) / (2.0 * h);
  }

 private:
  const T* target_;
  Vec x_;
  Vec v_;
};

/// Closed-form line restriction; throws Unsupported for targets without one.
template <TargetModel T>
auto line_potential(const T& target, const Vec& x, const Vec& v) {
  if constexpr (HasLineRestriction<T>) {
    return target.line(x, v);
  } else {
    throw Error(ErrorKind::Unsupported, "target has no closed-form line restriction");
    return GenericLine<T>(target, x, v);
  }
}

template <TargetModel T>
auto line_or_generic(const T& target, const Vec& x, const Vec& v) {
  if constexpr (HasLineRestriction<T>) return target.line(x, v);
  else return GenericLine<T>(target, x, v);
}

// ---------------------------------------------------------------------------

/// U(x) = (x - mu)^T Lambda (x - mu) / 2 with Lambda = L L^T.
class GaussianTarget {
 public:
  GaussianTarget(Mat precision_factor, Vec mean) : factor_(std::move(precision_factor)), mean_(std::move(mean)) {
    require(factor_.rows() == factor_.cols(), "precision factor must be square");
    require(factor_.rows() == mean_.size(), "precision factor and mean disagree in dimension");
    factor_ = factor_.triangularView<Eigen::Lower>();
    precision_ = factor_ * factor_.transpose();
  }

  static GaussianTarget isotropic(Index d, double variance = 1.0) {
    return GaussianTarget(Mat::Identity(d, d) / std::sqrt(variance), Vec::Zero(d));
  }

  static GaussianTarget from_covariance(const Mat& covariance, Vec mean) {
    Eigen::LLT<Mat> llt(covariance.inverse());
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPSD, "covariance is not positive definite");
    return GaussianTarget(llt.matrixL(), std::move(mean));
  }

  static GaussianTarget from_precision(const Mat& precision, Vec mean) {
    Eigen::LLT<Mat> llt(precision);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPSD, "precision is not positive definite");
    return GaussianTarget(llt.matrixL(), std::move(mean));
  }

  /// Unit-variance bivariate Gaussian with correlation rho.
  static GaussianTarget correlated_pair(double rho) {
    Mat cov(2, 2);
    cov << 1.0, rho, rho, 1.0;
    return from_covariance(cov, Vec::Zero(2));
  }

  Index dimension() const { return mean_.size(); }
  bool log_concave() const { return true; }

  double potential(const Vec& x) const {
    const Vec a = x - mean_;
    return 0.5 * a.dot(precision_ * a);
  }
  Vec gradient(const Vec& x) const { return precision_ * (x - mean_); }

  QuadraticLine line(const Vec& x, const Vec& v) const {
    const Vec a = x - mean_;
    const Vec pa = precision_ * a;
    return {0.5 * a.dot(pa), v.dot(pa), v.dot(precision_ * v)};
  }

  const Mat& precision() const { return precision_; }
  const Mat& precision_factor() const { return factor_; }
  const Vec& mean() const { return mean_; }
  Mat covariance() const { return precision_.inverse(); }

 private:
  Mat factor_;
  Vec mean_;
  Mat precision_;
};

// ---------------------------------------------------------------------------

namespace detail {
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
}  // namespace detail

/// Logistic regression likelihood with an isotropic Gaussian prior of scale
/// sigma on the (preconditioned) coefficients. sigma = inf drops the prior.
class LogisticRegressionTarget {
 public:
  class Line {
   public:
    Line(Eigen::ArrayXd offset, Eigen::ArrayXd rate, const Eigen::ArrayXd* labels, double xx, double xv, double vv,
         double inv_var)
        : offset_(std::move(offset)), rate_(std::move(rate)), labels_(labels), xx_(xx), xv_(xv), vv_(vv),
          inv_var_(inv_var) {}

    double value(double t) const {
      double total = 0.0;
      for (Index i = 0; i < offset_.size(); ++i) {
        const double z = offset_[i] + t * rate_[i];
        total += detail::softplus(z) - (*labels_)[i] * z;
      }
      return total + 0.5 * inv_var_ * (xx_ + t * (2.0 * xv_ + t * vv_));
    }
    double slope(double t) const {
      double total = 0.0;
      for (Index i = 0; i < offset_.size(); ++i) {
        total += rate_[i] * (detail::sigmoid(offset_[i] + t * rate_[i]) - (*labels_)[i]);
      }
      return total + inv_var_ * (xv_ + t * vv_);
    }
    double curvature(double t) const {
      double total = 0.0;
      for (Index i = 0; i < offset_.size(); ++i) {
        const double s = detail::sigmoid(offset_[i] + t * rate_[i]);
        total += rate_[i] * rate_[i] * s * (1.0 - s);
      }
      return total + inv_var_ * vv_;
    }

   private:
    Eigen::ArrayXd offset_;
    Eigen::ArrayXd rate_;
    const Eigen::ArrayXd* labels_;
    double xx_, xv_, vv_, inv_var_;
  };

  LogisticRegressionTarget(Mat design, Vec labels, double prior_scale = 1.0)
      : design_(std::move(design)), labels_(labels.array()), prior_scale_(prior_scale) {
    require(design_.rows() == labels_.size(), "design rows and labels disagree");
    require(prior_scale > 0.0, "prior scale must be positive");
    for (Index i = 0; i < labels_.size(); ++i) {
      require(labels_[i] == 0.0 || labels_[i] == 1.0, "labels must be 0 or 1");
    }
    inv_var_ = std::isinf(prior_scale) ? 0.0 : 1.0 / (prior_scale * prior_scale);
  }

  Index dimension() const { return design_.cols(); }
  bool log_concave() const { return true; }

  double potential(const Vec& beta) const {
    const Eigen::ArrayXd z = (design_ * beta).array();
    double total = 0.0;
    for (Index i = 0; i < z.size(); ++i) total += detail::softplus(z[i]) - labels_[i] * z[i];
    return total + 0.5 * inv_var_ * beta.squaredNorm();
  }

  Vec gradient(const Vec& beta) const {
    const Eigen::ArrayXd z = (design_ * beta).array();
    Vec residual(z.size());
    for (Index i = 0; i < z.size(); ++i) residual[i] = detail::sigmoid(z[i]) - labels_[i];
    return design_.transpose() * residual + inv_var_ * beta;
  }

  Line line(const Vec& x, const Vec& v) const {
    return Line((design_ * x).array(), (design_ * v).array(), &labels_, x.squaredNorm(), x.dot(v), v.squaredNorm(),
                inv_var_);
  }

  const Mat& design() const { return design_; }
  double prior_scale() const { return prior_scale_; }

 private:
  Mat design_;
  Eigen::ArrayXd labels_;
  double prior_scale_;
  double inv_var_;
};

/// Synthetic sparse logistic regression: +-1 design, `nonzero` leading
/// coefficients drawn with magnitude `signal` and random signs.
inline LogisticRegressionTarget synthetic_sparse_logistic(Index rows, Index dim, Index nonzero, double signal,
                                                          std::uint64_t seed, double prior_scale = 1.0) {
  Rng rng(seed, {0x5ba7});
  Mat design(rows, dim);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < dim; ++j) design(i, j) = rng.coin() ? 1.0 : -1.0;
  Vec beta = Vec::Zero(dim);
  for (Index j = 0; j < std::min(nonzero, dim); ++j) beta[j] = rng.coin() ? signal : -signal;
  Vec labels(rows);
  for (Index i = 0; i < rows; ++i) labels[i] = rng.uniform() < detail::sigmoid(design.row(i).dot(beta)) ? 1.0 : 0.0;
  return LogisticRegressionTarget(std::move(design), std::move(labels), prior_scale);
}

// ---------------------------------------------------------------------------

/// Gaussian restricted to an intersection of half-spaces.
class TruncatedGaussianTarget {
 public:
  /// Orthant {sign(x_i) = signs_i}.
  TruncatedGaussianTarget(GaussianTarget base, const Vec& signs) : base_(std::move(base)) {
    require(signs.size() == base_.dimension(), "sign vector dimension mismatch");
    for (Index i = 0; i < signs.size(); ++i) {
      require(signs[i] == 1.0 || signs[i] == -1.0, "orthant signs must be +1 or -1");
      Vec normal = Vec::Zero(signs.size());
      normal[i] = signs[i];
      constraints_.push_back({std::move(normal), 0.0});
    }
  }

  TruncatedGaussianTarget(GaussianTarget base, std::vector<LinearConstraint> constraints)
      : base_(std::move(base)), constraints_(std::move(constraints)) {
    for (const auto& c : constraints_) {
      require(c.normal.size() == base_.dimension(), "constraint dimension mismatch");
      require(c.normal.norm() > 0.0, "constraint normal must be nonzero");
    }
  }

  Index dimension() const { return base_.dimension(); }
  bool log_concave() const { return true; }
  double potential(const Vec& x) const { return base_.potential(x); }
  Vec gradient(const Vec& x) const { return base_.gradient(x); }
  QuadraticLine line(const Vec& x, const Vec& v) const { return base_.line(x, v); }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const GaussianTarget& base() const { return base_; }

 private:
  GaussianTarget base_;
  std::vector<LinearConstraint> constraints_;
};

// ---------------------------------------------------------------------------

struct MixtureComponent {
  double weight;
  double mean;
  double variance;
};

/// Product over coordinates of one univariate Gaussian mixture.
class MixtureTarget {
 public:
  MixtureTarget(std::vector<MixtureComponent> components, Index dim = 1)
      : components_(std::move(components)), dim_(dim) {
    require(!components_.empty(), "mixture needs at least one component");
    require(dim >= 1, "mixture dimension must be positive");
    double total = 0.0;
    for (const auto& c : components_) {
      require(c.weight > 0.0 && c.variance > 0.0, "mixture weights and variances must be positive");
      total += c.weight;
    }
    for (auto& c : components_) c.weight /= total;
  }

  struct Scalar {
    double value, slope, curvature;
  };

  /// -log density of the univariate mixture and its first two derivatives.
  Scalar univariate(double y) const {
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const auto& c = components_[k];
      const double e = y - c.mean;
      logs[k] = std::log(c.weight) - 0.5 * std::log(2.0 * std::numbers::pi * c.variance) - 0.5 * e * e / c.variance;
      max_log = std::max(max_log, logs[k]);
    }
    double norm = 0.0;
    for (double l : logs) norm += std::exp(l - max_log);
    const double log_density = max_log + std::log(norm);
    double first = 0.0, second = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const auto& c = components_[k];
      const double r = std::exp(logs[k] - log_density);
      const double e = (y - c.mean) / c.variance;
      first += r * e;
      second += r * (1.0 / c.variance - e * e);
    }
    return {-log_density, first, second + first * first};
  }

  class Line {
   public:
    Line(const MixtureTarget* target, Vec x, Vec v) : target_(target), x_(std::move(x)), v_(std::move(v)) {}
    double value(double t) const {
      double s = 0.0;
      for (Index i = 0; i < x_.size(); ++i) s += target_->univariate(x_[i] + t * v_[i]).value;
      return s;
    }
    double slope(double t) const {
      double s = 0.0;
      for (Index i = 0; i < x_.size(); ++i) s += v_[i] * target_->univariate(x_[i] + t * v_[i]).slope;
      return s;
    }
    double curvature(double t) const {
      double s = 0.0;
      for (Index i = 0; i < x_.size(); ++i) s += v_[i] * v_[i] * target_->univariate(x_[i] + t * v_[i]).curvature;
      return s;
    }

   private:
    const MixtureTarget* target_;
    Vec x_, v_;
  };

  Index dimension() const { return dim_; }
  bool log_concave() const { return components_.size() == 1; }

  double potential(const Vec& x) const {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) s += univariate(x[i]).value;
    return s;
  }
  Vec gradient(const Vec& x) const {
    Vec g(x.size());
    for (Index i = 0; i < x.size(); ++i) g[i] = univariate(x[i]).slope;
    return g;
  }
  Line line(const Vec& x, const Vec& v) const { return Line(this, x, v); }

  const std::vector<MixtureComponent>& components() const { return components_; }

 private:
  std::vector<MixtureComponent> components_;
  Index dim_;
};

// ---------------------------------------------------------------------------

/// Type-erased line restriction.
class AnyLine {
 public:
  struct Concept {
    virtual ~Concept() = default;
    virtual double value(double t) const = 0;
    virtual double slope(double t) const = 0;
    virtual double curvature(double t) const = 0;
  };

  template <LineFunction L>
  explicit AnyLine(L line) : impl_(std::make_shared<Model<L>>(std::move(line))) {}

  double value(double t) const { return impl_->value(t); }
  double slope(double t) const { return impl_->slope(t); }
  double curvature(double t) const { return impl_->curvature(t); }

 private:
  template <class L>
  struct Model final : Concept {
    explicit Model(L l) : line(std::move(l)) {}
    double value(double t) const override { return line.value(t); }
    double slope(double t) const override { return line.slope(t); }
    double curvature(double t) const override { return line.curvature(t); }
    L line;
  };
  std::shared_ptr<const Concept> impl_;
};

/// Type-erased target used where the concrete model is chosen at runtime.
class AnyTarget {
 public:
  template <TargetModel T>
    requires(!std::same_as<T, AnyTarget>)
  explicit AnyTarget(T target, std::string name = "custom")
      : impl_(std::make_shared<Model<T>>(std::move(target))), name_(std::move(name)) {}

  Index dimension() const { return impl_->dimension(); }
  double potential(const Vec& x) const { return impl_->potential(x); }
  Vec gradient(const Vec& x) const { return impl_->gradient(x); }
  AnyLine line(const Vec& x, const Vec& v) const { return impl_->line(x, v); }
  const std::vector<LinearConstraint>& constraints() const { return impl_->constraints(); }
  bool log_concave() const { return impl_->log_concave(); }
  const std::string& name() const { return name_; }

  template <class T>
  const T* as() const {
    auto model = dynamic_cast<const Model<T>*>(impl_.get());
    return model ? &model->target : nullptr;
  }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual Index dimension() const = 0;
    virtual double potential(const Vec& x) const = 0;
    virtual Vec gradient(const Vec& x) const = 0;
    virtual AnyLine line(const Vec& x, const Vec& v) const = 0;
    virtual const std::vector<LinearConstraint>& constraints() const = 0;
    virtual bool log_concave() const = 0;
  };

  template <class T>
  struct Model final : Concept {
    explicit Model(T t) : target(std::move(t)) {}
    Index dimension() const override { return target.dimension(); }
    double potential(const Vec& x) const override { return target.potential(x); }
    Vec gradient(const Vec& x) const override { return target.gradient(x); }
    AnyLine line(const Vec& x, const Vec& v) const override { return AnyLine(line_or_generic(target, x, v)); }
    const std::vector<LinearConstraint>& constraints() const override {
      if constexpr (HasConstraints<T>) return target.constraints();
      else return empty_;
    }
    bool log_concave() const override { return is_log_concave(target); }

    T target;
    std::vector<LinearConstraint> empty_;
  };

  std::shared_ptr<const Concept> impl_;
  std::string name_;
};

}  // namespace bouncy
