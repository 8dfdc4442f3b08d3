#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <vector>

#include "mfvi/distributions.hpp"
#include "mfvi/posterior.hpp"

namespace mfvi {

/// Poisson counts with a Gamma prior on the shared rate theta.
class GammaPoissonModel {
 public:
  GammaPoissonModel(Gamma prior, std::vector<std::int64_t> counts)
      : prior_(prior), counts_(std::move(counts)) {
    require_counts(counts_);
    for (auto y : counts_) {
      sum_ += static_cast<double>(y);
      log_factorials_ += log_gamma(static_cast<double>(y) + 1.0);
    }
  }

  const Gamma& prior() const noexcept { return prior_; }
  const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

  ParameterLayout layout() const {
    ParameterLayout l;
    l.add("theta", Transform::log_exp());
    return l;
  }

  Eigen::VectorXd prior_mean() const { return Eigen::VectorXd::Constant(1, prior_.shape / prior_.rate); }

  struct Value {
    double log_joint;
    double d_theta;
  };

  /// log prod Poisson(y_i | theta) + log Gamma(theta | a, b), constants included.
  Value evaluate(double theta) const {
    if (!(theta > 0) || !std::isfinite(theta)) throw SupportError("gamma-Poisson: theta must be > 0");
    const double n = static_cast<double>(counts_.size());
    const double lt = std::log(theta);
    const double lp = sum_ * lt - n * theta - log_factorials_ + log_density(prior_, theta);
    const double d = (prior_.shape - 1.0 + sum_) / theta - (prior_.rate + n);
    return {lp, d};
  }

  double log_joint(const Eigen::VectorXd& x) const {
    if (!(x[0] > 0)) return -std::numeric_limits<double>::infinity();
    return evaluate(x[0]).log_joint;
  }

  double log_joint_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    if (!(x[0] > 0)) return -std::numeric_limits<double>::infinity();
    const auto v = evaluate(x[0]);
    grad.resize(1);
    grad[0] = v.d_theta;
    return v.log_joint;
  }

 private:
  Gamma prior_;
  std::vector<std::int64_t> counts_;
  double sum_ = 0.0;
  double log_factorials_ = 0.0;
};

inline GammaPoissonModel::Value gp_log_joint(const GammaPoissonModel& m, double theta) {
  return m.evaluate(theta);
}

/// Daily active-player counts (thousands) over two weeks, Sun..Sat.
inline std::vector<std::int64_t> handout_counts() {
  return {50, 47, 46, 52, 49, 55, 53, 48, 45, 51, 50, 53, 46, 47};
}

inline Gamma handout_prior() { return Gamma(100.0, 2.0); }

}  // namespace mfvi
