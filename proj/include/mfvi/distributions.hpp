#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfvi/errors.hpp"
#include "mfvi/rng.hpp"
#include "mfvi/special.hpp"

namespace mfvi {

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

inline bool is_integral(double x) { return std::isfinite(x) && x == std::floor(x); }

inline void require_simplex(const Eigen::VectorXd& p, const char* name) {
  require(p.size() >= 1, std::string(name) + ": empty probability vector");
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0, std::string(name) + ": probabilities must be >= 0");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-12 * std::max<double>(1.0, p.size()),
          std::string(name) + ": probabilities must sum to 1");
}

}  // namespace detail

// Families. Constructors validate their parameters and throw ParameterError.

struct Gamma {
  double shape, rate;
  Gamma(double shape_, double rate_) : shape(shape_), rate(rate_) {
    detail::require(std::isfinite(shape) && shape > 0, "Gamma: shape must be > 0");
    detail::require(std::isfinite(rate) && rate > 0, "Gamma: rate must be > 0");
  }
  bool operator==(const Gamma&) const = default;
};

struct Poisson {
  double rate;
  explicit Poisson(double rate_) : rate(rate_) {
    detail::require(std::isfinite(rate) && rate > 0, "Poisson: rate must be > 0");
  }
};

struct Normal {
  double mean, sd;
  Normal(double mean_, double sd_) : mean(mean_), sd(sd_) {
    detail::require(std::isfinite(mean), "Normal: mean must be finite");
    detail::require(std::isfinite(sd) && sd > 0, "Normal: sd must be > 0");
  }
};

/// Distribution of e^Z for Z ~ Normal(log_mean, log_sd).
struct LogNormal {
  double log_mean, log_sd;
  LogNormal(double log_mean_, double log_sd_) : log_mean(log_mean_), log_sd(log_sd_) {
    detail::require(std::isfinite(log_mean), "LogNormal: log-mean must be finite");
    detail::require(std::isfinite(log_sd) && log_sd > 0, "LogNormal: log-sd must be > 0");
  }
};

struct Bernoulli {
  double p;
  explicit Bernoulli(double p_) : p(p_) {
    detail::require(p >= 0.0 && p <= 1.0, "Bernoulli: p must lie in [0, 1]");
  }
};

/// Categorical over outcomes 0..K-1.
struct Categorical {
  Eigen::VectorXd probs;
  explicit Categorical(Eigen::VectorXd probs_) : probs(std::move(probs_)) {
    detail::require_simplex(probs, "Categorical");
  }
};

struct Dirichlet {
  Eigen::VectorXd concentration;
  explicit Dirichlet(Eigen::VectorXd c) : concentration(std::move(c)) {
    detail::require(concentration.size() >= 2, "Dirichlet: need at least 2 components");
    for (double a : concentration)
      detail::require(std::isfinite(a) && a > 0, "Dirichlet: concentration must be > 0");
  }
  static Dirichlet symmetric(Eigen::Index k, double a) {
    return Dirichlet(Eigen::VectorXd::Constant(k, a));
  }
};

using Distribution =
    std::variant<Gamma, Poisson, Normal, LogNormal, Bernoulli, Categorical, Dirichlet>;

/// Dimension of one draw: K for Dirichlet, 1 otherwise.
inline Eigen::Index event_size(const Distribution& d) {
  if (const auto* dir = std::get_if<Dirichlet>(&d)) return dir->concentration.size();
  return 1;
}

// ---------------------------------------------------------------------------
// Log densities (all normalizing constants included).

inline double log_density(const Gamma& d, double x) {
  if (!(x > 0) || !std::isfinite(x)) throw SupportError("Gamma: x must be > 0");
  return d.shape * std::log(d.rate) - log_gamma(d.shape) + (d.shape - 1.0) * std::log(x) -
         d.rate * x;
}

inline double log_density(const Poisson& d, double k) {
  if (!detail::is_integral(k) || k < 0) throw SupportError("Poisson: k must be a nonnegative integer");
  return k * std::log(d.rate) - d.rate - log_gamma(k + 1.0);
}

inline double log_density(const Normal& d, double x) {
  if (!std::isfinite(x)) throw SupportError("Normal: x must be finite");
  const double u = (x - d.mean) / d.sd;
  return -0.5 * u * u - std::log(d.sd) - kLogSqrtTwoPi;
}

inline double log_density(const LogNormal& d, double x) {
  if (!(x > 0) || !std::isfinite(x)) throw SupportError("LogNormal: x must be > 0");
  const double lx = std::log(x);
  const double u = (lx - d.log_mean) / d.log_sd;
  return -0.5 * u * u - std::log(d.log_sd) - kLogSqrtTwoPi - lx;
}

inline double log_density(const Bernoulli& d, double x) {
  if (x == 1.0) return std::log(d.p);
  if (x == 0.0) return std::log1p(-d.p);
  throw SupportError("Bernoulli: x must be 0 or 1");
}

inline double log_density(const Categorical& d, double k) {
  if (!detail::is_integral(k) || k < 0 || k >= static_cast<double>(d.probs.size()))
    throw SupportError("Categorical: outcome out of range");
  return std::log(d.probs[static_cast<Eigen::Index>(k)]);
}

inline double log_density(const Dirichlet& d, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != d.concentration.size())
    throw SupportError("Dirichlet: dimension mismatch");
  double total = 0.0;
  double a0 = 0.0;
  double lp = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0) || !std::isfinite(x[k]))
      throw SupportError("Dirichlet: components must be > 0");
    total += x[k];
    a0 += d.concentration[k];
    lp += (d.concentration[k] - 1.0) * std::log(x[k]) - log_gamma(d.concentration[k]);
  }
  if (std::abs(total - 1.0) > 1e-10 * x.size())
    throw SupportError("Dirichlet: components must sum to 1");
  return lp + log_gamma(a0);
}

inline double log_density(const Distribution& d, double x) {
  return std::visit(
      [x](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Dirichlet>) {
          throw SupportError("Dirichlet: expected a vector value");
        } else {
          return log_density(fam, x);
        }
      },
      d);
}

inline double log_density(const Distribution& d, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (const auto* dir = std::get_if<Dirichlet>(&d)) return log_density(*dir, x);
  if (x.size() != 1) throw SupportError("scalar family: expected a single value");
  return log_density(d, x[0]);
}

// ---------------------------------------------------------------------------
// Sampling.

inline double draw(const Normal& d, RngStream& rng) { return d.mean + d.sd * rng.normal(); }

inline double draw(const LogNormal& d, RngStream& rng) {
  return std::exp(d.log_mean + d.log_sd * rng.normal());
}

/// Marsaglia-Tsang squeeze; shapes below 1 are boosted by U^(1/shape).
inline double draw(const Gamma& d, RngStream& rng) {
  double boost = 1.0;
  double a = d.shape;
  if (a < 1.0) {
    boost = std::pow(rng.uniform(), 1.0 / a);
    a += 1.0;
  }
  const double dd = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * dd);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 || std::log(u) < 0.5 * x2 + dd * (1.0 - v + std::log(v)))
      return boost * dd * v / d.rate;
  }
}

/// Multiplication method for small rates, Hormann's PTRS otherwise.
inline double draw(const Poisson& d, RngStream& rng) {
  const double lam = d.rate;
  if (lam < 10.0) {
    const double limit = std::exp(-lam);
    double prod = rng.uniform();
    double k = 0;
    while (prod > limit) {
      prod *= rng.uniform();
      k += 1;
    }
    return k;
  }
  const double slam = std::sqrt(lam);
  const double loglam = std::log(lam);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lam + 0.43);
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lam + k * loglam - log_gamma(k + 1.0))
      return k;
  }
}

inline double draw(const Bernoulli& d, RngStream& rng) { return rng.uniform() < d.p ? 1.0 : 0.0; }

inline double draw(const Categorical& d, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const Eigen::Index last = d.probs.size() - 1;
  for (Eigen::Index k = 0; k < last; ++k) {
    acc += d.probs[k];
    if (u < acc) return static_cast<double>(k);
  }
  return static_cast<double>(last);
}

inline Eigen::VectorXd draw(const Dirichlet& d, RngStream& rng) {
  Eigen::VectorXd g(d.concentration.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) g[k] = draw(Gamma(d.concentration[k], 1.0), rng);
  return g / g.sum();
}

/// n independent draws, one per row; columns = event_size(d).
inline Eigen::MatrixXd sample(const Distribution& d, RngStream& rng, std::size_t n) {
  if (n < 1) throw ParameterError("sample: n must be >= 1");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), event_size(d));
  std::visit(
      [&](const auto& fam) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
          if constexpr (std::is_same_v<std::decay_t<decltype(fam)>, Dirichlet>)
            out.row(i) = draw(fam, rng).transpose();
          else
            out(i, 0) = draw(fam, rng);
        }
      },
      d);
  return out;
}

// ---------------------------------------------------------------------------
// Moments.

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

inline Moments moments(const Distribution& d) {
  auto scalar = [](double m, double v) {
    return Moments{Eigen::VectorXd::Constant(1, m), Eigen::VectorXd::Constant(1, v)};
  };
  return std::visit(
      [&](const auto& f) -> Moments {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gamma>) {
          return scalar(f.shape / f.rate, f.shape / (f.rate * f.rate));
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return scalar(f.rate, f.rate);
        } else if constexpr (std::is_same_v<T, Normal>) {
          return scalar(f.mean, f.sd * f.sd);
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          const double s2 = f.log_sd * f.log_sd;
          return scalar(std::exp(f.log_mean + 0.5 * s2),
                        std::expm1(s2) * std::exp(2.0 * f.log_mean + s2));
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          return scalar(f.p, f.p * (1.0 - f.p));
        } else if constexpr (std::is_same_v<T, Categorical>) {
          double m = 0.0, m2 = 0.0;
          for (Eigen::Index k = 0; k < f.probs.size(); ++k) {
            m += k * f.probs[k];
            m2 += double(k) * k * f.probs[k];
          }
          return scalar(m, m2 - m * m);
        } else {
          const double a0 = f.concentration.sum();
          Eigen::VectorXd mean = f.concentration / a0;
          Eigen::VectorXd var = mean.array() * (1.0 - mean.array()) / (a0 + 1.0);
          return Moments{mean, var};
        }
      },
      d);
}

// ---------------------------------------------------------------------------
// Gamma-Poisson conjugacy.

inline void require_counts(std::span<const std::int64_t> counts) {
  for (auto y : counts)
    if (y < 0) throw ParameterError("counts must be nonnegative integers");
}

/// Posterior of a Poisson rate under a Gamma prior: Gamma(a + sum y, b + n).
inline Gamma gamma_poisson_posterior(const Gamma& prior, std::span<const std::int64_t> counts) {
  require_counts(counts);
  double total = 0.0;
  for (auto y : counts) total += static_cast<double>(y);
  return Gamma(prior.shape + total, prior.rate + static_cast<double>(counts.size()));
}

/// Exact log marginal likelihood log p(y) of Poisson counts under a Gamma prior.
inline double gamma_poisson_log_evidence(const Gamma& prior, std::span<const std::int64_t> counts) {
  require_counts(counts);
  if (counts.empty()) return 0.0;
  const Gamma post = gamma_poisson_posterior(prior, counts);
  double log_fact = 0.0;
  for (auto y : counts) log_fact += log_gamma(static_cast<double>(y) + 1.0);
  return prior.shape * std::log(prior.rate) + log_gamma(post.shape) - log_gamma(prior.shape) -
         post.shape * std::log(post.rate) - log_fact;
}

}  // namespace mfvi
