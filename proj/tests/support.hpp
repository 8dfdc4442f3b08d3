#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfvi/elbo.hpp"
#include "mfvi/io/bundled.hpp"
#include "mfvi/io/dtm.hpp"
#include "mfvi/models/gamma_poisson.hpp"
#include "mfvi/models/lda.hpp"
#include "mfvi/models/logistic.hpp"

namespace mfvi::testing {

inline GammaPoissonModel handout_model() { return GammaPoissonModel(handout_prior(), handout_counts()); }

/// q = LogNormal(mu, sigma) over the Gamma-Poisson rate.
inline MeanFieldPosterior gp_posterior(const GammaPoissonModel& m, double mu, double sigma) {
  return MeanFieldPosterior(m.layout(), Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, std::log(sigma)));
}

inline LogisticModel labor_model() {
  const auto ds = bundled_labor();
  return LogisticModel(ds.income, ds.participation);
}

/// Small two-topic corpus, quick enough for many gradient evaluations.
inline LdaModel small_lda_model() {
  RngStream rng(31);
  return LdaModel(2, generate_synthetic_corpus(2, 8, 12, 15, 0.5, 0.3, rng).dtm);
}

/// Random variational parameters: loc ~ centre + N(0, spread), log_scale in [-3, -0.5].
inline MeanFieldPosterior random_posterior(const MeanFieldPosterior& like, const Eigen::VectorXd& centre,
                                           double spread, RngStream& rng) {
  MeanFieldPosterior q = like;
  for (Eigen::Index i = 0; i < q.dim(); ++i) {
    q.loc()[i] = centre[i] + spread * rng.normal();
    q.log_scale()[i] = -3.0 + 2.5 * rng.uniform();
  }
  return q;
}

/// ||a - b|| / max(||b||, 1).
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1.0);
}

/// Worst pathwise-vs-central-difference relative error over `points` random q,
/// with the same noise for both.
template <Model M>
double worst_gradient_error(const M& model, const Eigen::VectorXd& centre, double spread, int points,
                            std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  const MeanFieldPosterior shape(model.layout());
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    const auto q = random_posterior(shape, centre, spread, rng);
    RngStream a = rng.substream(static_cast<std::uint64_t>(p));
    RngStream b = a;
    const Eigen::VectorXd g = elbo_gradient(model, q, n, a);
    const Eigen::VectorXd fd = finite_diff_gradient(model, q, n, b);
    worst = std::max(worst, relative_error(g, fd));
  }
  return worst;
}

}  // namespace mfvi::testing
