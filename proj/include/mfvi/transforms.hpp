#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "mfvi/errors.hpp"
#include "mfvi/special.hpp"

namespace mfvi {

/// Bijection between a constrained support and unconstrained reals.
///
/// - Identity: R^n <-> R^n.
/// - LogExp: (0, inf)^n <-> R^n, x = exp(z).
/// - StickBreaking: K-simplex <-> R^(K-1). Proportions are broken off in order,
///   x_k = zeta_k * (1 - sum_{j<k} x_j), zeta_k = logistic(z_k - log(K - k - 1)),
///   so z = 0 maps to the uniform simplex.
struct Transform {
  enum class Kind { Identity, LogExp, StickBreaking };

  Kind kind = Kind::Identity;
  Eigen::Index size = 1;  // constrained dimension

  static Transform identity(Eigen::Index n = 1) { return {Kind::Identity, n}; }
  static Transform log_exp(Eigen::Index n = 1) { return {Kind::LogExp, n}; }
  static Transform stick_breaking(Eigen::Index k) {
    if (k < 2) throw ParameterError("StickBreaking: K must be >= 2");
    return {Kind::StickBreaking, k};
  }

  Eigen::Index unconstrained_size() const {
    return kind == Kind::StickBreaking ? size - 1 : size;
  }

  bool operator==(const Transform&) const = default;
};

inline std::string to_string(Transform::Kind k) {
  switch (k) {
    case Transform::Kind::Identity: return "identity";
    case Transform::Kind::LogExp: return "log_exp";
    case Transform::Kind::StickBreaking: return "stick_breaking";
  }
  return "?";
}

inline constexpr double kBoundaryEps = 1e-12;

/// Constrained -> unconstrained. Values within kBoundaryEps of a boundary are
/// clamped; values exactly on it (or outside) raise BoundaryError/SupportError.
inline Eigen::VectorXd forward(const Transform& t, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != t.size) throw SupportError("forward: dimension mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw SupportError("forward: non-finite input");
  Eigen::VectorXd z(t.unconstrained_size());
  switch (t.kind) {
    case Transform::Kind::Identity:
      z = x;
      break;
    case Transform::Kind::LogExp:
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) throw BoundaryError("forward: positive parameter is exactly 0");
        if (x[i] < 0.0) throw SupportError("forward: positive parameter is negative");
        z[i] = std::log(std::max(x[i], kBoundaryEps));
      }
      break;
    case Transform::Kind::StickBreaking: {
      const Eigen::Index k_total = t.size;
      double sum = 0.0;
      for (Eigen::Index k = 0; k < k_total; ++k) {
        if (x[k] == 0.0 || x[k] == 1.0)
          throw BoundaryError("forward: simplex component exactly on the boundary");
        if (x[k] < 0.0 || x[k] > 1.0) throw SupportError("forward: simplex component outside [0, 1]");
        sum += x[k];
      }
      if (std::abs(sum - 1.0) > 1e-8) throw SupportError("forward: simplex does not sum to 1");
      // remaining stick as a suffix sum; subtracting from 1 loses the tail
      Eigen::VectorXd stick(k_total);
      stick[k_total - 1] = x[k_total - 1];
      for (Eigen::Index k = k_total - 1; k-- > 0;) stick[k] = stick[k + 1] + x[k];
      for (Eigen::Index k = 0; k + 1 < k_total; ++k) {
        const double ratio = std::clamp(x[k] / stick[k], kBoundaryEps, 1.0 - kBoundaryEps);
        z[k] = logit(ratio) + std::log(static_cast<double>(k_total - k - 1));
      }
      break;
    }
  }
  return z;
}

/// Unconstrained -> constrained, writing into `x`; returns log |det dx/dz|.
inline double inverse_into(const Transform& t, const Eigen::Ref<const Eigen::VectorXd>& z,
                           Eigen::Ref<Eigen::VectorXd> x) {
  switch (t.kind) {
    case Transform::Kind::Identity:
      x = z;
      return 0.0;
    case Transform::Kind::LogExp:
      x = z.array().exp();
      return z.sum();
    case Transform::Kind::StickBreaking: {
      const Eigen::Index k_total = t.size;
      double log_stick = 0.0;
      double log_jac = 0.0;
      for (Eigen::Index k = 0; k + 1 < k_total; ++k) {
        const double u = z[k] - std::log(static_cast<double>(k_total - k - 1));
        const double log_zeta = -log1p_exp(-u);
        const double log_rest = -log1p_exp(u);
        x[k] = std::exp(log_stick + log_zeta);
        log_jac += log_stick + log_zeta + log_rest;
        log_stick += log_rest;
      }
      x[k_total - 1] = std::exp(log_stick);
      return log_jac;
    }
  }
  return 0.0;
}

struct Constrained {
  Eigen::VectorXd value;
  double log_jacobian;
};

inline Constrained inverse_with_log_jacobian(const Transform& t,
                                             const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != t.unconstrained_size()) throw SupportError("inverse: dimension mismatch");
  Constrained out{Eigen::VectorXd(t.size), 0.0};
  out.log_jacobian = inverse_into(t, z, out.value);
  return out;
}

/// Chain rule through the inverse map: given grad_x = df/dx at x = inverse(z),
/// writes d/dz [ f(inverse(z)) + log|det J(z)| ] into grad_z.
inline void backprop(const Transform& t, const Eigen::Ref<const Eigen::VectorXd>& z,
                     const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& grad_x,
                     Eigen::Ref<Eigen::VectorXd> grad_z) {
  switch (t.kind) {
    case Transform::Kind::Identity:
      grad_z = grad_x;
      return;
    case Transform::Kind::LogExp:
      grad_z = grad_x.array() * x.array() + 1.0;
      return;
    case Transform::Kind::StickBreaking: {
      // Reverse sweep; `adj` holds the adjoint of the remaining stick length.
      const Eigen::Index k_total = t.size;
      double adj = grad_x[k_total - 1];
      double stick = x[k_total - 1];
      for (Eigen::Index k = k_total - 2; k >= 0; --k) {
        const double u = z[k] - std::log(static_cast<double>(k_total - k - 1));
        const double zeta = logistic(u);
        stick += x[k];  // stick length before break k
        grad_z[k] = stick * zeta * (1.0 - zeta) * (grad_x[k] - adj) + 1.0 - 2.0 * zeta;
        adj = grad_x[k] * zeta + adj * (1.0 - zeta) + 1.0 / stick;
      }
      return;
    }
  }
}

}  // namespace mfvi
