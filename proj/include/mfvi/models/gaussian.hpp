#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/Cholesky>

#include <cmath>

#include "mfvi/posterior.hpp"
#include "mfvi/special.hpp"

namespace mfvi {

/// Multivariate normal target over unconstrained reals. Used to show how a
/// factorized approximation behaves on a correlated posterior.
class GaussianTarget {
 public:
  GaussianTarget(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
      : mean_(std::move(mean)), cov_(cov), precision_(cov.inverse()) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || cov.rows() != mean_.size())
      throw ParameterError("GaussianTarget: covariance must be positive definite and match the mean");
    log_norm_ = -static_cast<double>(mean_.size()) * kLogSqrtTwoPi -
                Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  }

  /// Bivariate target with unit-free marginal sds and correlation rho.
  static GaussianTarget bivariate(double mean1, double mean2, double sd1, double sd2, double rho) {
    Eigen::Vector2d m(mean1, mean2);
    Eigen::Matrix2d c;
    c << sd1 * sd1, rho * sd1 * sd2, rho * sd1 * sd2, sd2 * sd2;
    return GaussianTarget(m, c);
  }

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
  const Eigen::MatrixXd& precision() const noexcept { return precision_; }

  ParameterLayout layout() const {
    ParameterLayout l;
    for (Eigen::Index i = 0; i < mean_.size(); ++i) l.add("x[" + std::to_string(i + 1) + "]", Transform::identity());
    return l;
  }

  double log_joint(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd d = x - mean_;
    return log_norm_ - 0.5 * d.dot(precision_ * d);
  }

  double log_joint_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    const Eigen::VectorXd d = x - mean_;
    grad = -(precision_ * d);
    return log_norm_ - 0.5 * d.dot(precision_ * d);
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd precision_;
  double log_norm_ = 0.0;
};

}  // namespace mfvi
