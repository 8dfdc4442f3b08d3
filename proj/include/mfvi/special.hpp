#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace mfvi {

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // ln sqrt(2 pi)

/// Log-gamma via the Lanczos approximation (g = 7, 9 coefficients),
/// with reflection for x < 1/2. Relative accuracy around 1e-15.
inline double log_gamma(double x) {
  static constexpr std::array<double, 9> c = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
           log_gamma(1.0 - x);
  }
  x -= 1.0;
  double a = c[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
  return kLogSqrtTwoPi + (x + 0.5) * std::log(t) - t + std::log(a);
}

/// log(1 + e^a) without overflow.
inline double log1p_exp(double a) {
  if (a > 0.0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

inline double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Sum of a short vector after sorting, so the result does not depend on the
/// order the terms arrive in. Used where label-permutation symmetry must hold
/// bit-for-bit.
inline double sorted_sum(std::span<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

/// Order-independent log-sum-exp; sorts `v` in place.
inline double sorted_log_sum_exp(std::span<double> v) {
  std::sort(v.begin(), v.end());
  const double m = v.back();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace mfvi
