#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfvi/distributions.hpp"
#include "mfvi/posterior.hpp"
#include "mfvi/special.hpp"
#include "mfvi/stats.hpp"

namespace mfvi {

/// Single-predictor Bayesian logistic regression:
/// y_i ~ Bernoulli(logistic(alpha + beta x_i)), independent Normal priors.
class LogisticModel {
 public:
  LogisticModel(std::vector<double> x, std::vector<int> y, Normal prior_alpha = Normal(0.0, 5.0),
                Normal prior_beta = Normal(0.0, 5.0))
      : x_(std::move(x)), y_(std::move(y)), prior_alpha_(prior_alpha), prior_beta_(prior_beta) {
    if (x_.empty() || x_.size() != y_.size())
      throw ParameterError("LogisticModel: x and y must be non-empty and of equal length");
    for (int v : y_)
      if (v != 0 && v != 1) throw ParameterError("LogisticModel: y must be 0 or 1");
    for (double v : x_)
      if (!std::isfinite(v)) throw ParameterError("LogisticModel: x must be finite");
  }

  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<int>& y() const noexcept { return y_; }
  const Normal& prior_alpha() const noexcept { return prior_alpha_; }
  const Normal& prior_beta() const noexcept { return prior_beta_; }

  ParameterLayout layout() const {
    ParameterLayout l;
    l.add("alpha", Transform::identity());
    l.add("beta", Transform::identity());
    return l;
  }

  Eigen::VectorXd prior_mean() const {
    Eigen::VectorXd m(2);
    m << prior_alpha_.mean, prior_beta_.mean;
    return m;
  }

  struct Value {
    double log_joint;
    double d_alpha;
    double d_beta;
  };

  /// sum_i [y_i eta_i - log(1 + e^eta_i)] + log priors, eta_i = alpha + beta x_i.
  Value evaluate(double alpha, double beta) const {
    double ll = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double eta = alpha + beta * x_[i];
      ll += y_[i] * eta - log1p_exp(eta);
      const double r = y_[i] - logistic(eta);
      da += r;
      db += r * x_[i];
    }
    ll += log_density(prior_alpha_, alpha) + log_density(prior_beta_, beta);
    da -= (alpha - prior_alpha_.mean) / (prior_alpha_.sd * prior_alpha_.sd);
    db -= (beta - prior_beta_.mean) / (prior_beta_.sd * prior_beta_.sd);
    return {ll, da, db};
  }

  double log_joint(const Eigen::VectorXd& p) const { return evaluate(p[0], p[1]).log_joint; }

  double log_joint_gradient(const Eigen::VectorXd& p, Eigen::VectorXd& grad) const {
    const auto v = evaluate(p[0], p[1]);
    grad.resize(2);
    grad << v.d_alpha, v.d_beta;
    return v.log_joint;
  }

 private:
  std::vector<double> x_;
  std::vector<int> y_;
  Normal prior_alpha_;
  Normal prior_beta_;
};

inline LogisticModel::Value logistic_log_joint(const LogisticModel& m, double alpha, double beta) {
  return m.evaluate(alpha, beta);
}

/// P(y = 1 | x) = e^(alpha + beta x) / (1 + e^(alpha + beta x)).
inline double logistic_predict(double alpha, double beta, double x) { return logistic(alpha + beta * x); }

/// Empirical quantiles of the success probability at predictor value x over a
/// set of (alpha, beta) draws (one draw per row, columns alpha and beta).
inline std::vector<double> prob_interval(const Eigen::MatrixXd& draws, double x,
                                         const std::vector<double>& levels = {0.05, 0.50, 0.95}) {
  if (draws.rows() < 2 || draws.cols() != 2)
    throw ParameterError("prob_interval: need at least 2 draws of (alpha, beta)");
  std::vector<double> p(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index s = 0; s < draws.rows(); ++s)
    p[static_cast<std::size_t>(s)] = logistic_predict(draws(s, 0), draws(s, 1), x);
  std::sort(p.begin(), p.end());
  std::vector<double> out;
  out.reserve(levels.size());
  for (double lv : levels) out.push_back(quantile_sorted(p, lv));
  return out;
}

}  // namespace mfvi
