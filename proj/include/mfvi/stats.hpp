#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfvi/errors.hpp"

namespace mfvi {

inline double mean(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) throw ParameterError("mean of empty sample");
  return v.mean();
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double sd(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

/// Linear-interpolation quantile of sorted values (R's default, type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ParameterError("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(const Eigen::Ref<const Eigen::VectorXd>& v, double p) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

/// Effective sample size of one chain via Geyer's initial monotone sequence
/// over paired autocorrelations.
inline double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& chain) {
  const Eigen::Index n = chain.size();
  if (n < 4) return static_cast<double>(n);
  const Eigen::VectorXd c = chain.array() - chain.mean();
  const double var0 = c.squaredNorm() / static_cast<double>(n);
  if (var0 <= 0.0) return static_cast<double>(n);
  auto rho = [&](Eigen::Index lag) {
    return c.head(n - lag).dot(c.tail(n - lag)) / static_cast<double>(n) / var0;
  };
  double tau = -1.0;  // 2 * sum of pairs minus rho_0
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

/// Trailing moving average over `window` points; the first window-1 outputs
/// average whatever is available.
inline std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
  if (window == 0) throw ParameterError("moving_average: window must be >= 1");
  std::vector<double> out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v[i];
    if (i >= window) s -= v[i - window];
    out[i] = s / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace mfvi
