#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mfvi/models/lda.hpp"
#include "mfvi/optimize.hpp"
#include "mfvi/stats.hpp"
#include "support.hpp"

using namespace mfvi;
using namespace mfvi::testing;

namespace {

DocTermMatrix tiny_corpus() {
  DocTermMatrix d;
  d.num_docs = 2;
  d.vocab = {"a", "b", "c"};
  d.triplets = {{0, 0, 1}, {0, 1, 2}, {1, 2, 1}, {1, 0, 1}};
  return d;
}

RowMatrix random_simplex_rows(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  RowMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    m.row(r) = draw(Dirichlet::symmetric(cols, 1.0), rng).transpose();
  return m;
}

/// Sum over every topic assignment of every word instance.
double brute_force_log_joint(const DocTermMatrix& dtm, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                             const RowMatrix& theta, const RowMatrix& phi) {
  std::vector<std::pair<std::size_t, std::size_t>> tokens;  // (doc, word)
  for (const auto& t : dtm.triplets)
    for (std::int64_t i = 0; i < t.count; ++i) tokens.emplace_back(t.doc, t.word);
  const auto K = static_cast<std::size_t>(alpha.size());
  std::size_t combos = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) combos *= K;
  double lik = 0.0;
  for (std::size_t c = 0; c < combos; ++c) {
    double p = 1.0;
    std::size_t code = c;
    for (const auto& [doc, word] : tokens) {
      const auto z = static_cast<Eigen::Index>(code % K);
      code /= K;
      p *= theta(static_cast<Eigen::Index>(doc), z) * phi(z, static_cast<Eigen::Index>(word));
    }
    lik += p;
  }
  double lp = std::log(lik);
  for (Eigen::Index d = 0; d < theta.rows(); ++d) lp += log_density(Dirichlet(alpha), theta.row(d).transpose());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) lp += log_density(Dirichlet(beta), phi.row(k).transpose());
  return lp;
}

}  // namespace

TEST(LdaLogJoint, MatchesBruteForceEnumeration) {
  const auto dtm = tiny_corpus();
  RngStream rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const RowMatrix theta = random_simplex_rows(2, 2, rng);
    const RowMatrix phi = random_simplex_rows(2, 3, rng);
    const Eigen::Vector2d alpha(0.7, 1.9);
    const Eigen::Vector3d beta(1.0, 0.5, 2.0);
    EXPECT_NEAR(lda_log_joint(dtm, alpha, beta, theta, phi).log_joint,
                brute_force_log_joint(dtm, alpha, beta, theta, phi), 1e-10);
  }
}

TEST(LdaLogJoint, SingleTopicReducesToWordLogProbabilities) {
  const auto dtm = tiny_corpus();
  const RowMatrix theta = RowMatrix::Ones(2, 1);
  RowMatrix phi(1, 3);
  phi << 0.2, 0.5, 0.3;
  // alpha = 1 and beta = 1 make both priors constant: log Gamma(K) and log Gamma(V)
  const auto v = lda_log_joint(dtm, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(3), theta, phi);
  const double words = std::log(0.2) + 2 * std::log(0.5) + std::log(0.3) + std::log(0.2);
  EXPECT_NEAR(v.log_joint, words + std::log(2.0), 1e-14);
}

TEST(LdaLogJoint, TopicRelabellingIsBitIdentical) {
  const auto corpus = bundled_corpus();
  const LdaModel m(2, corpus.dtm);
  RngStream rng(2);
  const Eigen::Index K = 2;
  for (int rep = 0; rep < 5; ++rep) {
    const RowMatrix theta = random_simplex_rows(static_cast<Eigen::Index>(m.dtm().num_docs), K, rng);
    const RowMatrix phi = random_simplex_rows(K, static_cast<Eigen::Index>(m.dtm().vocab_size()), rng);
    const RowMatrix theta_swapped = theta.rowwise().reverse();
    const RowMatrix phi_swapped = phi.colwise().reverse();
    EXPECT_EQ(lda_log_joint(m, theta, phi).log_joint, lda_log_joint(m, theta_swapped, phi_swapped).log_joint);
  }
}

TEST(LdaLogJoint, ThreeTopicPermutationIsBitIdentical) {
  RngStream rng(3);
  const auto corpus = generate_synthetic_corpus(3, 30, 20, 25, 0.5, 0.3, rng);
  const LdaModel m(3, corpus.dtm);
  const RowMatrix theta = random_simplex_rows(static_cast<Eigen::Index>(m.dtm().num_docs), 3, rng);
  const RowMatrix phi = random_simplex_rows(3, 20, rng);
  const std::array<int, 3> perm = {2, 0, 1};
  RowMatrix tp(theta.rows(), 3), pp(3, phi.cols());
  for (int k = 0; k < 3; ++k) {
    tp.col(k) = theta.col(perm[k]);
    pp.row(k) = phi.row(perm[k]);
  }
  EXPECT_EQ(lda_log_joint(m, theta, phi).log_joint, lda_log_joint(m, tp, pp).log_joint);
}

TEST(LdaLogJoint, ShapeAndIndexErrors) {
  auto dtm = tiny_corpus();
  const Eigen::Vector2d alpha(1, 1);
  const Eigen::Vector3d beta(1, 1, 1);
  EXPECT_THROW(lda_log_joint(dtm, alpha, beta, RowMatrix::Constant(3, 2, 0.5), RowMatrix::Constant(2, 3, 1.0 / 3)),
               IndexError);
  EXPECT_THROW(lda_log_joint(dtm, alpha, beta, RowMatrix::Constant(2, 2, 0.5), RowMatrix::Constant(2, 4, 0.25)),
               IndexError);
  dtm.triplets.push_back({0, 5, 1});
  EXPECT_THROW(lda_log_joint(dtm, alpha, beta, RowMatrix::Constant(2, 2, 0.5), RowMatrix::Constant(2, 3, 1.0 / 3)),
               IndexError);
}

TEST(LdaModel, DefaultsAndLayout) {
  const LdaModel m(2, tiny_corpus());
  EXPECT_EQ(m.alpha(), Eigen::VectorXd::Constant(2, 25.0));
  EXPECT_EQ(m.beta(), Eigen::VectorXd::Ones(3));
  EXPECT_EQ(m.layout().blocks().size(), 4u);  // 2 docs + 2 topics
  EXPECT_EQ(m.layout().unconstrained_size(), 2 * 1 + 2 * 2);
  EXPECT_EQ(m.layout().element_names().front(), "theta[1,1]");
  EXPECT_EQ(m.layout().element_names().back(), "phi[2,3]");
}

TEST(LdaModel, InvalidConstruction) {
  EXPECT_THROW(LdaModel(1, tiny_corpus()), ParameterError);
  EXPECT_THROW(LdaModel(2, tiny_corpus(), Eigen::VectorXd::Ones(3)), ParameterError);
  EXPECT_THROW(LdaModel(2, tiny_corpus(), Eigen::Vector2d(1, -1)), ParameterError);
  auto dup = tiny_corpus();
  dup.triplets.push_back({0, 0, 2});
  EXPECT_THROW(LdaModel(2, dup), ValidationError);
}

TEST(LdaModel, EmptyDocumentsAreDropped) {
  auto dtm = tiny_corpus();
  dtm.num_docs = 4;  // documents 3 and 4 have no words
  const LdaModel m(2, dtm);
  EXPECT_EQ(m.dtm().num_docs, 2u);
  EXPECT_EQ(m.theta_size(), 4);
}

TEST(LdaModel, PriorMeanIsSymmetric) {
  const LdaModel m(2, tiny_corpus());
  const Eigen::VectorXd x = m.prior_mean();
  EXPECT_TRUE(m.theta_view(x).isApprox(RowMatrix::Constant(2, 2, 0.5)));
  EXPECT_TRUE(m.phi_view(x).isApprox(RowMatrix::Constant(2, 3, 1.0 / 3)));
}

TEST(LdaModel, GradientViewsMatchFlatGradient) {
  const LdaModel m(2, tiny_corpus());
  RngStream rng(4);
  Eigen::VectorXd x(m.layout().constrained_size());
  m.layout().constrain(Eigen::VectorXd::Random(m.layout().unconstrained_size()), x);
  Eigen::VectorXd g;
  const double lp = m.log_joint_gradient(x, g);
  const auto v = m.evaluate(m.theta_view(x), m.phi_view(x));
  EXPECT_EQ(lp, v.log_joint);
  EXPECT_EQ(lp, m.log_joint(x));
  EXPECT_EQ(g.head(4), Eigen::Map<const Eigen::VectorXd>(v.d_theta.data(), 4));
  EXPECT_EQ(g.tail(6), Eigen::Map<const Eigen::VectorXd>(v.d_phi.data(), 6));
}

TEST(TopWords, Example) {
  RowMatrix phi(1, 3);
  phi << 0.5, 0.3, 0.2;
  const auto t = top_words(phi, {"a", "b", "c"}, 2);
  ASSERT_EQ(t.size(), 1u);
  ASSERT_EQ(t[0].size(), 2u);
  EXPECT_EQ(t[0][0].word, "a");
  EXPECT_EQ(t[0][0].prob, 0.5);
  EXPECT_EQ(t[0][1].word, "b");
  EXPECT_EQ(t[0][1].prob, 0.3);
}

TEST(TopWords, TiesFavourEarlierIndex) {
  RowMatrix phi(1, 4);
  phi << 0.1, 0.3, 0.3, 0.3;
  const auto t = top_words(phi, {"a", "b", "c", "d"}, 3);
  EXPECT_EQ(t[0][0].word, "b");
  EXPECT_EQ(t[0][1].word, "c");
  EXPECT_EQ(t[0][2].word, "d");
  EXPECT_THROW(top_words(phi, {"a", "b"}, 1), ParameterError);
  EXPECT_THROW(top_words(phi, {"a", "b", "c", "d"}, 5), ParameterError);
}

TEST(LdaFit, RecoversPlantedTopics) {
  const auto corpus = bundled_corpus();
  const LdaModel m(2, corpus.dtm);
  FitConfig cfg;
  cfg.grad_samples = 10;
  RngStream rng(5);
  const auto fit = fit_gradient_ascent(m, initial_posterior(m), cfg, rng);
  EXPECT_TRUE(fit.converged);
  EXPECT_LT(fit.iterations, 300);

  const auto draws = posterior_draws(fit.posterior, 1000, rng);
  Eigen::VectorXd mean(draws.cols());
  for (Eigen::Index j = 0; j < draws.cols(); ++j) mean[j] = draws.col(j).mean();
  const RowMatrix fitted_phi = m.phi_view(mean);
  const RowMatrix true_phi = corpus.phi;

  auto top_set = [&](const RowMatrix& phi, Eigen::Index k) {
    const auto tw = top_words(phi, m.dtm().vocab, 5);
    std::set<std::string> s;
    for (const auto& w : tw[static_cast<std::size_t>(k)]) s.insert(w.word);
    return s;
  };
  const bool straight = top_set(fitted_phi, 0) == top_set(true_phi, 0) && top_set(fitted_phi, 1) == top_set(true_phi, 1);
  const bool swapped = top_set(fitted_phi, 0) == top_set(true_phi, 1) && top_set(fitted_phi, 1) == top_set(true_phi, 0);
  EXPECT_TRUE(straight || swapped);

  std::vector<double> elbo;
  for (const auto& r : fit.trace.rows) elbo.push_back(r.elbo);
  const auto smooth = moving_average(elbo, 10);
  for (std::size_t i = 1; i < smooth.size(); ++i) EXPECT_GE(smooth[i], smooth[i - 1]) << "at " << i;
}
