#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "mfvi/errors.hpp"
#include "mfvi/rng.hpp"
#include "mfvi/stats.hpp"

namespace mfvi {

struct MetropolisResult {
  Eigen::MatrixXd draws;  // n_iter x d, post-warmup
  double acceptance_rate = 0.0;
  Eigen::VectorXd proposal_sd;
};

inline constexpr double kTargetAcceptLow = 0.2;
inline constexpr double kTargetAcceptHigh = 0.5;

namespace detail {

template <class F>
struct Chain {
  F& log_target;
  Eigen::VectorXd state;
  double lp;

  /// One random-walk step; returns true if accepted.
  bool step(const Eigen::VectorXd& sd, RngStream& rng) {
    Eigen::VectorXd prop = state;
    for (Eigen::Index i = 0; i < prop.size(); ++i) prop[i] += sd[i] * rng.normal();
    const double lp_prop = log_target(prop);
    if (std::isfinite(lp_prop) && std::log(rng.uniform()) < lp_prop - lp) {
      state = std::move(prop);
      lp = lp_prop;
      return true;
    }
    return false;
  }

  double run(const Eigen::VectorXd& sd, int n, RngStream& rng, Eigen::MatrixXd* out = nullptr) {
    int acc = 0;
    for (int i = 0; i < n; ++i) {
      acc += step(sd, rng) ? 1 : 0;
      if (out) out->row(i) = state.transpose();
    }
    return n > 0 ? static_cast<double>(acc) / n : 0.0;
  }
};

}  // namespace detail

/// Pilot tuning: rescale a common step until acceptance falls in [0.2, 0.5],
/// estimate per-coordinate posterior sd from a pilot chain, set
/// sd_i = 2.4 * sd_i / sqrt(d), then re-band the overall scale.
template <class F>
Eigen::VectorXd tune_proposal(F&& log_target, const Eigen::VectorXd& init, RngStream& rng, int batch = 500) {
  const Eigen::Index d = init.size();
  detail::Chain<F> chain{log_target, init, log_target(init)};
  if (!std::isfinite(chain.lp)) throw InitError("metropolis: log target is not finite at init");

  auto reband = [&](Eigen::VectorXd sd) {
    for (int round = 0; round < 40; ++round) {
      const double a = chain.run(sd, batch, rng);
      if (a < kTargetAcceptLow)
        sd *= a > 0 ? std::max(0.1, a / 0.3) : 0.1;
      else if (a > kTargetAcceptHigh)
        sd *= std::min(10.0, a / 0.3);
      else
        break;
    }
    return sd;
  };

  Eigen::VectorXd sd = reband(init.cwiseAbs().cwiseMax(1.0) * 0.1);
  Eigen::MatrixXd pilot(4 * batch, d);
  chain.run(sd, 4 * batch, rng, &pilot);
  Eigen::VectorXd est(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double s = mfvi::sd(pilot.col(i));
    est[i] = s > 0 ? 2.4 * s / std::sqrt(static_cast<double>(d)) : sd[i];
  }
  return reband(est);
}

/// Random-walk Metropolis with independent Gaussian proposals. Runs `warmup`
/// discarded steps, then keeps `n_iter` draws. An empty proposal_sd triggers
/// pilot tuning from `init`.
template <class F>
MetropolisResult metropolis_sample(F&& log_target, const Eigen::VectorXd& init, Eigen::VectorXd proposal_sd,
                                   int n_iter, int warmup, RngStream& rng) {
  if (n_iter < 1 || warmup < 0) throw ParameterError("metropolis: need n_iter >= 1 and warmup >= 0");
  if (proposal_sd.size() == 0) proposal_sd = tune_proposal(log_target, init, rng);
  if (proposal_sd.size() != init.size()) throw ParameterError("metropolis: proposal_sd has the wrong length");
  if ((proposal_sd.array() <= 0).any() || !proposal_sd.allFinite())
    throw ParameterError("metropolis: proposal_sd must be positive");

  detail::Chain<F> chain{log_target, init, log_target(init)};
  if (!std::isfinite(chain.lp)) throw InitError("metropolis: log target is not finite at init");
  if (warmup > 0 && chain.run(proposal_sd, warmup, rng) == 0.0)
    throw MixingError("metropolis: no proposal accepted during warmup; try a smaller proposal_sd");

  MetropolisResult r;
  r.draws.resize(n_iter, init.size());
  r.acceptance_rate = chain.run(proposal_sd, n_iter, rng, &r.draws);
  r.proposal_sd = std::move(proposal_sd);
  return r;
}

}  // namespace mfvi
