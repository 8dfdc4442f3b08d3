#pragma once

#include <Eigen/Core>

#include <array>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfvi/elbo.hpp"
#include "mfvi/errors.hpp"
#include "mfvi/posterior.hpp"
#include "mfvi/rng.hpp"

namespace mfvi {

/// Optimizer settings. Defaults follow the standard lab configuration.
struct FitConfig {
  int iter = 1000;             // maximum iterations (sweeps for coordinate ascent)
  int grad_samples = 15;       // MC draws per gradient
  int elbo_samples = 15;       // MC draws per ELBO evaluation
  int eval_elbo = 1;           // evaluate the ELBO every k iterations
  double tol_rel_obj = 1e-4;   // convergence threshold on mean |dELBO / ELBO|
  int adapt_iter = 20;         // iterations per step-size trial
  bool adapt = true;           // trial step sizes; otherwise use step_size as is
  double step_size = 1.0;      // base learning rate eta
  int output_samples = 5000;   // posterior draws emitted after a fit
  int line_search_samples = 1000;  // frozen draws per coordinate-ascent sweep
  std::uint64_t seed = 1;

  void validate() const {
    if (iter < 1 || grad_samples < 1 || elbo_samples < 1 || eval_elbo < 1 || adapt_iter < 1 ||
        output_samples < 1 || line_search_samples < 1)
      throw ParameterError("FitConfig: all counts must be >= 1");
    if (!(tol_rel_obj > 0)) throw ParameterError("FitConfig: tol_rel_obj must be > 0");
    if (!(step_size > 0) || !std::isfinite(step_size)) throw ParameterError("FitConfig: step_size must be > 0");
  }
};

struct TraceRow {
  int iteration;
  double seconds;
  double elbo;
};

/// ELBO per evaluated iteration; iterations strictly increase.
struct ElboTrace {
  std::vector<TraceRow> rows;
  void push(int iteration, double seconds, double elbo) { rows.push_back({iteration, seconds, elbo}); }
  std::size_t size() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }
};

struct FitResult {
  MeanFieldPosterior posterior;
  ElboTrace trace;
  bool converged = false;
  int iterations = 0;
  double step_size = 0.0;  // eta actually used
};

/// Called after each trace row is recorded.
using TraceObserver = std::function<void(const TraceRow&)>;

inline constexpr std::array<double, 3> kStepSizeCandidates = {1.0, 0.1, 0.01};
inline constexpr int kConvergenceWindow = 5;
inline constexpr double kDivergenceDrop = 1e6;

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Rolling mean of |relative ELBO change| over the last kConvergenceWindow changes.
class ConvergenceMonitor {
 public:
  explicit ConvergenceMonitor(double tol) : tol_(tol) {}

  bool update(double elbo) {
    if (prev_) {
      changes_.push_back(std::abs((elbo - *prev_) / elbo));
      if (changes_.size() > kConvergenceWindow) changes_.pop_front();
    }
    prev_ = elbo;
    if (changes_.size() < kConvergenceWindow) return false;
    double m = 0.0;
    for (double c : changes_) m += c;
    return m / kConvergenceWindow < tol_;
  }

 private:
  double tol_;
  std::optional<double> prev_;
  std::deque<double> changes_;
};

/// Adaptive stochastic gradient ascent. Step for coordinate i at iteration k is
/// eta * k^{-1/2} / (1 + sqrt(s_k,i)) with s a 0.9-decayed mean of squared
/// gradients. Iterates are tail-averaged over (k/2, k]; the average is what
/// gets evaluated, traced and returned.
class AscentRun {
 public:
  AscentRun(Eigen::VectorXd start, double eta)
      : lambda_(std::move(start)), eta_(eta), sum_history_{Eigen::VectorXd::Zero(lambda_.size())} {}

  template <Model M>
  void step(const M& model, const MeanFieldPosterior& shape, int grad_samples, RngStream& rng) {
    ++k_;
    const Eigen::VectorXd g =
        elbo_gradient_with_noise(model, shape.with_params(lambda_), draw_noise(rng, grad_samples, shape.dim()));
    if (k_ == 1)
      s_ = g.cwiseAbs2();
    else
      s_ = 0.9 * s_ + 0.1 * g.cwiseAbs2();
    const double rate = eta_ / std::sqrt(static_cast<double>(k_));
    lambda_.array() += rate * g.array() / (1.0 + s_.array().sqrt());
    sum_history_.push_back(sum_history_.back() + lambda_);
  }

  Eigen::VectorXd averaged() const {
    const int half = k_ / 2;
    return (sum_history_[static_cast<std::size_t>(k_)] - sum_history_[static_cast<std::size_t>(half)]) /
           static_cast<double>(k_ - half);
  }

  int iterations() const noexcept { return k_; }

 private:
  Eigen::VectorXd lambda_;
  double eta_;
  Eigen::VectorXd s_;
  int k_ = 0;
  std::vector<Eigen::VectorXd> sum_history_;
};

}  // namespace detail

/// Maximize the ELBO by stochastic gradient ascent on lambda = [loc; log_scale].
///
/// With cfg.adapt, each eta in {1, 0.1, 0.01} is run for adapt_iter iterations
/// from `init` and the one with the best resulting ELBO is kept; the main run
/// then restarts from `init`. Stops when the mean relative ELBO change over
/// the last 5 evaluations drops below tol_rel_obj, or after cfg.iter
/// iterations.
template <Model M>
FitResult fit_gradient_ascent(const M& model, const MeanFieldPosterior& init, const FitConfig& cfg,
                              RngStream& rng, const TraceObserver& observer = {}) {
  cfg.validate();
  if (!(init.layout() == model.layout())) throw ParameterError("fit: initial posterior does not match model layout");
  detail::Stopwatch clock;

  double elbo_init;
  try {
    elbo_init = estimate_elbo(model, init, static_cast<std::size_t>(cfg.elbo_samples), rng).value;
  } catch (const NonFiniteError& e) {
    throw InitError(std::string("ELBO is not finite at the initial point: ") + e.what());
  }
  if (!std::isfinite(elbo_init)) throw InitError("ELBO is not finite at the initial point");

  double eta = cfg.step_size;
  if (cfg.adapt) {
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (double candidate : kStepSizeCandidates) {
      try {
        detail::AscentRun trial(init.params(), candidate);
        for (int k = 0; k < cfg.adapt_iter; ++k) trial.step(model, init, cfg.grad_samples, rng);
        const double e =
            estimate_elbo(model, init.with_params(trial.averaged()), static_cast<std::size_t>(cfg.elbo_samples), rng)
                .value;
        if (std::isfinite(e) && e > best) {
          best = e;
          eta = candidate;
          found = true;
        }
      } catch (const NonFiniteError&) {
        // candidate diverged; try the next one
      }
    }
    if (!found)
      throw DivergenceError("all step-size candidates diverged during adaptation; try a smaller step size");
  }

  FitResult result;
  result.step_size = eta;
  detail::AscentRun run(init.params(), eta);
  detail::ConvergenceMonitor monitor(cfg.tol_rel_obj);
  for (int k = 1; k <= cfg.iter; ++k) {
    try {
      run.step(model, init, cfg.grad_samples, rng);
    } catch (const NonFiniteError& e) {
      throw DivergenceError(std::string("gradient became non-finite (") + e.what() +
                            "); try a smaller step size");
    }
    result.iterations = k;
    if (k % cfg.eval_elbo != 0) continue;
    double elbo;
    try {
      elbo = estimate_elbo(model, init.with_params(run.averaged()), static_cast<std::size_t>(cfg.elbo_samples), rng)
                 .value;
    } catch (const NonFiniteError& e) {
      throw DivergenceError(std::string("ELBO became non-finite (") + e.what() + "); try a smaller step size");
    }
    if (elbo < elbo_init - kDivergenceDrop)
      throw DivergenceError("ELBO fell more than 1e6 below its initial value; try a smaller step size");
    result.trace.push(k, clock.seconds(), elbo);
    if (observer) observer(result.trace.rows.back());
    if (monitor.update(elbo)) {
      result.converged = true;
      break;
    }
  }
  result.posterior = init.with_params(run.averaged());
  return result;
}

namespace detail {

/// Maximize f on the real line starting from x0 (value f0): bracket by
/// expanding steps, then golden-section search. Returns (argmax, max) with
/// max >= f0.
template <class F>
std::pair<double, double> maximize_1d(F&& f, double x0, double f0, double tol = 1e-7) {
  constexpr double kGolden = 0.6180339887498949;
  auto eval = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };
  double step = 0.1;
  double best_x = x0, best_f = f0;
  double lo = x0 - step, hi = x0 + step;
  const double f_up = eval(hi), f_down = eval(lo);
  if (f_up > f0 || f_down > f0) {
    // walk uphill with growing steps until the value drops
    const double dir = f_up >= f_down ? 1.0 : -1.0;
    double prev = x0, cur = x0 + dir * step, f_cur = std::max(f_up, f_down);
    double next = cur;
    for (int guard = 0; guard < 200; ++guard) {
      step *= 1.618;
      next = cur + dir * step;
      const double f_next = eval(next);
      if (f_next < f_cur) break;
      prev = cur;
      cur = next;
      f_cur = f_next;
    }
    best_x = cur;
    best_f = f_cur;
    lo = std::min(prev, next);
    hi = std::max(prev, next);
  }
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < 200 && hi - lo > tol * (1.0 + std::abs(x1)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = eval(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = eval(x1);
    }
  }
  if (f1 > best_f) best_x = x1, best_f = f1;
  if (f2 > best_f) best_x = x2, best_f = f2;
  return {best_x, best_f};
}

}  // namespace detail

/// One cyclic sweep of exact 1-D maximizations over every coordinate of
/// lambda, on the Monte Carlo ELBO with the given frozen noise. Returns the
/// objective value after each coordinate update (non-decreasing).
template <Model M>
std::vector<double> coordinate_sweep(const M& model, MeanFieldPosterior& q, const Eigen::MatrixXd& eps) {
  Eigen::VectorXd lambda = q.params();
  MeanFieldPosterior probe = q;
  auto objective = [&](const Eigen::VectorXd& p) {
    probe.set_params(p);
    try {
      return elbo_with_noise(model, probe, eps).value;
    } catch (const NonFiniteError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  double current = objective(lambda);
  if (!std::isfinite(current)) throw DivergenceError("ELBO not finite at the start of a coordinate sweep");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(lambda.size()));
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    auto along = [&](double v) {
      Eigen::VectorXd p = lambda;
      p[i] = v;
      return objective(p);
    };
    const auto [arg, val] = detail::maximize_1d(along, lambda[i], current);
    lambda[i] = arg;
    current = val;
    values.push_back(current);
  }
  q.set_params(lambda);
  return values;
}

/// Cyclic coordinate ascent on lambda. Each sweep freezes a fresh set of
/// cfg.line_search_samples draws and maximizes along one coordinate at a time
/// by golden-section search. Same convergence rule as gradient ascent, with
/// one evaluation per sweep.
template <Model M>
FitResult fit_coordinate_ascent(const M& model, const MeanFieldPosterior& init, const FitConfig& cfg,
                                RngStream& rng, const TraceObserver& observer = {}) {
  cfg.validate();
  if (!(init.layout() == model.layout())) throw ParameterError("fit: initial posterior does not match model layout");
  detail::Stopwatch clock;
  try {
    const double e0 = estimate_elbo(model, init, static_cast<std::size_t>(cfg.elbo_samples), rng).value;
    if (!std::isfinite(e0)) throw InitError("ELBO is not finite at the initial point");
  } catch (const NonFiniteError& e) {
    throw InitError(std::string("ELBO is not finite at the initial point: ") + e.what());
  }

  FitResult result;
  result.posterior = init;
  detail::ConvergenceMonitor monitor(cfg.tol_rel_obj);
  for (int sweep = 1; sweep <= cfg.iter; ++sweep) {
    const Eigen::MatrixXd eps = draw_noise(rng, static_cast<std::size_t>(cfg.line_search_samples), init.dim());
    const auto values = coordinate_sweep(model, result.posterior, eps);
    result.iterations = sweep;
    if (sweep % cfg.eval_elbo != 0) continue;
    const double elbo = values.empty() ? elbo_with_noise(model, result.posterior, eps).value : values.back();
    result.trace.push(sweep, clock.seconds(), elbo);
    if (observer) observer(result.trace.rows.back());
    if (monitor.update(elbo)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace mfvi
