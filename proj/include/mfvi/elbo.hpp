#pragma once

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <vector>

#include "mfvi/distributions.hpp"
#include "mfvi/errors.hpp"
#include "mfvi/posterior.hpp"
#include "mfvi/rng.hpp"
#include "mfvi/special.hpp"

namespace mfvi {

/// Monte Carlo mean with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline Estimate summarize(const std::vector<double>& v) {
  Estimate e;
  e.samples = v.size();
  if (v.empty()) return e;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  e.value = mean;
  e.std_error = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
  return e;
}

inline std::vector<double> to_std(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

[[noreturn]] inline void throw_non_finite(const char* what, const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << what << " at draw [";
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(x.size(), 8); ++i) os << (i ? ", " : "") << x[i];
  if (x.size() > 8) os << ", ...";
  os << "]";
  throw NonFiniteError(os.str(), to_std(x));
}

}  // namespace detail

/// Standard-normal noise, one row per Monte Carlo sample. Row s comes from
/// substream s of a batch forked off `rng`, so the matrix is identical however
/// the rows are later processed.
inline Eigen::MatrixXd draw_noise(RngStream& rng, std::size_t n, Eigen::Index dim) {
  RngStream batch = rng.fork();
  Eigen::MatrixXd eps(static_cast<Eigen::Index>(n), dim);
  for (Eigen::Index s = 0; s < eps.rows(); ++s) {
    RngStream r = batch.substream(static_cast<std::uint64_t>(s));
    for (Eigen::Index j = 0; j < dim; ++j) eps(s, j) = r.normal();
  }
  return eps;
}

/// ELBO = E_q[log p(y, x) - log q(x)] over reparameterized draws
/// z = loc + exp(log_scale) * eps, x = inverse(z), with fixed noise.
template <Model M>
Estimate elbo_with_noise(const M& model, const MeanFieldPosterior& q, const Eigen::MatrixXd& eps) {
  const auto& layout = q.layout();
  const Eigen::VectorXd scale = q.log_scale().array().exp();
  const double entropy_const = q.log_scale().sum() + static_cast<double>(q.dim()) * kLogSqrtTwoPi;
  Eigen::VectorXd z(q.dim());
  Eigen::VectorXd x(layout.constrained_size());
  std::vector<double> terms(static_cast<std::size_t>(eps.rows()));
  for (Eigen::Index s = 0; s < eps.rows(); ++s) {
    const auto e = eps.row(s).transpose();
    z = q.loc() + scale.cwiseProduct(e);
    const double log_jac = layout.constrain(z, x);
    const double lp = model.log_joint(x);
    if (!std::isfinite(lp)) detail::throw_non_finite("non-finite log joint", x);
    terms[static_cast<std::size_t>(s)] = lp + log_jac + 0.5 * e.squaredNorm() + entropy_const;
  }
  return detail::summarize(terms);
}

template <Model M>
Estimate estimate_elbo(const M& model, const MeanFieldPosterior& q, std::size_t n, RngStream& rng) {
  if (!(q.layout() == model.layout())) throw ParameterError("estimate_elbo: posterior does not match model layout");
  if (n < 1) throw ParameterError("estimate_elbo: n must be >= 1");
  return elbo_with_noise(model, q, draw_noise(rng, n, q.dim()));
}

/// Pathwise gradient of the Monte Carlo ELBO with respect to
/// lambda = [loc; log_scale], for fixed noise.
template <Model M>
Eigen::VectorXd elbo_gradient_with_noise(const M& model, const MeanFieldPosterior& q,
                                         const Eigen::MatrixXd& eps) {
  const auto& layout = q.layout();
  const Eigen::Index d = q.dim();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * d);
  if (d == 0) return grad;
  const Eigen::VectorXd scale = q.log_scale().array().exp();
  Eigen::VectorXd z(d), gz(d);
  Eigen::VectorXd x(layout.constrained_size()), gx(layout.constrained_size());
  for (Eigen::Index s = 0; s < eps.rows(); ++s) {
    const auto e = eps.row(s).transpose();
    z = q.loc() + scale.cwiseProduct(e);
    layout.constrain(z, x);
    gx.setZero();
    const double lp = model.log_joint_gradient(x, gx);
    if (!std::isfinite(lp)) detail::throw_non_finite("non-finite log joint", x);
    layout.backprop(z, x, gx, gz);
    if (!gz.allFinite()) detail::throw_non_finite("non-finite gradient", x);
    grad.head(d) += gz;
    grad.tail(d) += gz.cwiseProduct(e).cwiseProduct(scale);
  }
  grad /= static_cast<double>(eps.rows());
  grad.tail(d).array() += 1.0;  // entropy
  return grad;
}

template <Model M>
Eigen::VectorXd elbo_gradient(const M& model, const MeanFieldPosterior& q, std::size_t n, RngStream& rng) {
  if (!(q.layout() == model.layout())) throw ParameterError("elbo_gradient: posterior does not match model layout");
  if (n < 1) throw ParameterError("elbo_gradient: n must be >= 1");
  return elbo_gradient_with_noise(model, q, draw_noise(rng, n, q.dim()));
}

/// Central differences of the fixed-noise Monte Carlo ELBO. Test oracle for
/// elbo_gradient: consumes `rng` exactly as elbo_gradient does, so a copy of
/// the same stream yields the same noise.
template <Model M>
Eigen::VectorXd finite_diff_gradient(const M& model, const MeanFieldPosterior& q, std::size_t n,
                                     RngStream& rng, double h = 1e-5) {
  const Eigen::MatrixXd eps = draw_noise(rng, n, q.dim());
  const Eigen::VectorXd lambda = q.params();
  Eigen::VectorXd grad(lambda.size());
  MeanFieldPosterior probe = q;
  Eigen::VectorXd p = lambda;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    p[i] = lambda[i] + h;
    probe.set_params(p);
    const double up = elbo_with_noise(model, probe, eps).value;
    p[i] = lambda[i] - h;
    probe.set_params(p);
    const double down = elbo_with_noise(model, probe, eps).value;
    p[i] = lambda[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// log q(x) for a flat constrained point, via the change of variables.
inline double log_q_density(const MeanFieldPosterior& q, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd z = q.layout().unconstrain(x);
  Eigen::VectorXd back(x.size());
  const double log_jac = q.layout().constrain(z, back);
  double lq = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double u = (z[i] - q.loc()[i]) * std::exp(-q.log_scale()[i]);
    lq += -0.5 * u * u - q.log_scale()[i] - kLogSqrtTwoPi;
  }
  return lq - log_jac;
}

/// KL(q || p) = E_q[log q(x) - log p(x)] for a single-block q and a fully
/// normalized target p on the same constrained space.
inline Estimate estimate_kl(const MeanFieldPosterior& q, const Distribution& p, std::size_t n, RngStream& rng) {
  if (q.layout().blocks().size() != 1 || q.layout().constrained_size() != event_size(p))
    throw ParameterError("estimate_kl: q must have one block matching the target's dimension");
  if (n < 1) throw ParameterError("estimate_kl: n must be >= 1");
  const Eigen::MatrixXd eps = draw_noise(rng, n, q.dim());
  const auto& layout = q.layout();
  const Eigen::VectorXd scale = q.log_scale().array().exp();
  Eigen::VectorXd z(q.dim()), x(layout.constrained_size());
  std::vector<double> terms(n);
  for (Eigen::Index s = 0; s < eps.rows(); ++s) {
    const auto e = eps.row(s).transpose();
    z = q.loc() + scale.cwiseProduct(e);
    const double log_jac = layout.constrain(z, x);
    const double log_q = -0.5 * e.squaredNorm() - q.log_scale().sum() -
                         static_cast<double>(q.dim()) * kLogSqrtTwoPi - log_jac;
    double log_p;
    try {
      log_p = log_density(p, x);
    } catch (const SupportError&) {
      log_p = -std::numeric_limits<double>::infinity();
    }
    const double t = log_q - log_p;
    if (!std::isfinite(t)) detail::throw_non_finite("non-finite KL integrand", x);
    terms[static_cast<std::size_t>(s)] = t;
  }
  return detail::summarize(terms);
}

/// n draws from q in constrained space, one per row.
inline Eigen::MatrixXd posterior_draws(const MeanFieldPosterior& q, std::size_t n, RngStream& rng) {
  const Eigen::MatrixXd eps = draw_noise(rng, n, q.dim());
  const Eigen::VectorXd scale = q.log_scale().array().exp();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), q.layout().constrained_size());
  Eigen::VectorXd z(q.dim()), x(q.layout().constrained_size());
  for (Eigen::Index s = 0; s < eps.rows(); ++s) {
    z = q.loc() + scale.cwiseProduct(eps.row(s).transpose());
    q.layout().constrain(z, x);
    out.row(s) = x.transpose();
  }
  return out;
}

}  // namespace mfvi
