#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mfvi/errors.hpp"
#include "mfvi/io/dtm.hpp"
#include "mfvi/posterior.hpp"
#include "mfvi/special.hpp"

namespace mfvi {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LdaValue {
  double log_joint = 0.0;
  RowMatrix d_theta;  // M x K
  RowMatrix d_phi;    // K x V
};

namespace detail {

inline double dirichlet_log_norm(const Eigen::VectorXd& c) {
  double s = 0.0;
  for (double a : c) s -= log_gamma(a);
  return s + log_gamma(c.sum());
}

/// Log joint of LDA with topic assignments summed out. Every K-term reduction
/// goes through a sorted sum so that relabelling topics (with a symmetric
/// alpha) reproduces the value bit for bit.
inline double lda_evaluate(const DocTermMatrix& dtm, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                           const Eigen::Ref<const RowMatrix>& theta, const Eigen::Ref<const RowMatrix>& phi,
                           RowMatrix* d_theta, RowMatrix* d_phi) {
  const Eigen::Index M = static_cast<Eigen::Index>(dtm.num_docs);
  const Eigen::Index V = static_cast<Eigen::Index>(dtm.vocab_size());
  const Eigen::Index K = alpha.size();
  if (theta.rows() != M || theta.cols() != K) throw IndexError("lda: theta must be M x K");
  if (phi.rows() != K || phi.cols() != V) throw IndexError("lda: phi must be K x V");
  if (beta.size() != V) throw IndexError("lda: beta must have length V");

  const RowMatrix log_theta = theta.array().log().matrix();
  const RowMatrix log_phi = phi.array().log().matrix();
  if (d_theta) d_theta->setZero(M, K);
  if (d_phi) d_phi->setZero(K, V);

  std::vector<double> buf(static_cast<std::size_t>(K));

  const double doc_norm = dirichlet_log_norm(alpha);
  double lp_docs = 0.0;
  for (Eigen::Index d = 0; d < M; ++d) {
    for (Eigen::Index k = 0; k < K; ++k) buf[k] = (alpha[k] - 1.0) * log_theta(d, k);
    lp_docs += doc_norm + sorted_sum(buf);
    if (d_theta)
      for (Eigen::Index k = 0; k < K; ++k) (*d_theta)(d, k) = (alpha[k] - 1.0) / theta(d, k);
  }

  const double topic_norm = dirichlet_log_norm(beta);
  for (Eigen::Index k = 0; k < K; ++k) {
    double s = topic_norm;
    for (Eigen::Index w = 0; w < V; ++w) s += (beta[w] - 1.0) * log_phi(k, w);
    buf[k] = s;
    if (d_phi)
      for (Eigen::Index w = 0; w < V; ++w) (*d_phi)(k, w) = (beta[w] - 1.0) / phi(k, w);
  }
  const double lp_topics = sorted_sum(buf);

  double ll = 0.0;
  for (const auto& t : dtm.triplets) {
    const auto d = static_cast<Eigen::Index>(t.doc);
    const auto w = static_cast<Eigen::Index>(t.word);
    if (d >= M || w >= V) throw IndexError("lda: triplet index out of range");
    const double c = static_cast<double>(t.count);
    for (Eigen::Index k = 0; k < K; ++k) buf[k] = log_theta(d, k) + log_phi(k, w);
    const double lse = sorted_log_sum_exp(buf);
    ll += c * lse;
    if (d_theta || d_phi)
      for (Eigen::Index k = 0; k < K; ++k) {
        if (d_theta) (*d_theta)(d, k) += c * std::exp(log_phi(k, w) - lse);
        if (d_phi) (*d_phi)(k, w) += c * std::exp(log_theta(d, k) - lse);
      }
  }
  return lp_docs + lp_topics + ll;
}

}  // namespace detail

/// Latent Dirichlet allocation with the discrete topic indicators marginalized:
/// theta_m ~ Dir(alpha), phi_k ~ Dir(beta), and each word instance contributes
/// log sum_k theta_{m,k} phi_{k,w}.
class LdaModel {
 public:
  /// alpha defaults to 50/K per topic, beta to 1 per word. Documents with no
  /// words are dropped with a warning.
  LdaModel(int k, DocTermMatrix dtm, std::optional<Eigen::VectorXd> alpha = std::nullopt,
           std::optional<Eigen::VectorXd> beta = std::nullopt)
      : dtm_(std::move(dtm)) {
    if (k < 2) throw ParameterError("LdaModel: need K >= 2 topics");
    if (dtm_.vocab_size() < 2) throw ParameterError("LdaModel: need a vocabulary of at least 2 words");
    dtm_.validate();
    drop_empty_documents(dtm_);
    if (dtm_.num_docs == 0) throw ValidationError("LdaModel: corpus has no words");
    alpha_ = alpha.value_or(Eigen::VectorXd::Constant(k, 50.0 / k));
    beta_ = beta.value_or(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dtm_.vocab_size()), 1.0));
    if (alpha_.size() != k) throw ParameterError("LdaModel: alpha must have K entries");
    if (beta_.size() != static_cast<Eigen::Index>(dtm_.vocab_size()))
      throw ParameterError("LdaModel: beta must have V entries");
    if ((alpha_.array() <= 0).any() || (beta_.array() <= 0).any() || !alpha_.allFinite() || !beta_.allFinite())
      throw ParameterError("LdaModel: alpha and beta must be positive");

    const auto K = static_cast<Eigen::Index>(k);
    const auto V = static_cast<Eigen::Index>(dtm_.vocab_size());
    for (std::size_t m = 0; m < dtm_.num_docs; ++m)
      layout_.add("theta[" + std::to_string(m + 1) + "]", Transform::stick_breaking(K));
    for (Eigen::Index t = 0; t < K; ++t) layout_.add("phi[" + std::to_string(t + 1) + "]", Transform::stick_breaking(V));
  }

  int num_topics() const noexcept { return static_cast<int>(alpha_.size()); }
  const DocTermMatrix& dtm() const noexcept { return dtm_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  const Eigen::VectorXd& beta() const noexcept { return beta_; }
  const ParameterLayout& layout() const noexcept { return layout_; }

  Eigen::Index theta_size() const noexcept {
    return static_cast<Eigen::Index>(dtm_.num_docs) * alpha_.size();
  }

  Eigen::VectorXd prior_mean() const {
    Eigen::VectorXd x(layout_.constrained_size());
    const Eigen::VectorXd ta = alpha_ / alpha_.sum();
    const Eigen::VectorXd pb = beta_ / beta_.sum();
    for (std::size_t m = 0; m < dtm_.num_docs; ++m) x.segment(static_cast<Eigen::Index>(m) * ta.size(), ta.size()) = ta;
    for (Eigen::Index k = 0; k < alpha_.size(); ++k) x.segment(theta_size() + k * pb.size(), pb.size()) = pb;
    return x;
  }

  /// Views of a flat constrained vector as theta (M x K) and phi (K x V).
  Eigen::Map<const RowMatrix> theta_view(const Eigen::VectorXd& x) const {
    return {x.data(), static_cast<Eigen::Index>(dtm_.num_docs), alpha_.size()};
  }
  Eigen::Map<const RowMatrix> phi_view(const Eigen::VectorXd& x) const {
    return {x.data() + theta_size(), alpha_.size(), beta_.size()};
  }

  LdaValue evaluate(const Eigen::Ref<const RowMatrix>& theta, const Eigen::Ref<const RowMatrix>& phi) const {
    LdaValue v;
    v.log_joint = detail::lda_evaluate(dtm_, alpha_, beta_, theta, phi, &v.d_theta, &v.d_phi);
    return v;
  }

  double log_joint(const Eigen::VectorXd& x) const {
    return detail::lda_evaluate(dtm_, alpha_, beta_, theta_view(x), phi_view(x), nullptr, nullptr);
  }

  double log_joint_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    RowMatrix gt, gp;
    const double lp = detail::lda_evaluate(dtm_, alpha_, beta_, theta_view(x), phi_view(x), &gt, &gp);
    grad.resize(x.size());
    grad.head(theta_size()) = Eigen::Map<const Eigen::VectorXd>(gt.data(), gt.size());
    grad.tail(gp.size()) = Eigen::Map<const Eigen::VectorXd>(gp.data(), gp.size());
    return lp;
  }

 private:
  DocTermMatrix dtm_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd beta_;
  ParameterLayout layout_;
};

inline LdaValue lda_log_joint(const LdaModel& m, const Eigen::Ref<const RowMatrix>& theta,
                              const Eigen::Ref<const RowMatrix>& phi) {
  return m.evaluate(theta, phi);
}

/// Same quantity without constructing a model; also accepts K = 1.
inline LdaValue lda_log_joint(const DocTermMatrix& dtm, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                              const Eigen::Ref<const RowMatrix>& theta, const Eigen::Ref<const RowMatrix>& phi) {
  LdaValue v;
  v.log_joint = detail::lda_evaluate(dtm, alpha, beta, theta, phi, &v.d_theta, &v.d_phi);
  return v;
}

struct TopWord {
  std::string word;
  double prob;
  std::size_t index;
};

/// k most probable words of each topic, descending; ties go to the lower index.
inline std::vector<std::vector<TopWord>> top_words(const Eigen::Ref<const RowMatrix>& phi,
                                                   const std::vector<std::string>& vocab, std::size_t k) {
  if (static_cast<Eigen::Index>(vocab.size()) != phi.cols()) throw ParameterError("top_words: vocab size != V");
  if (k > vocab.size()) throw ParameterError("top_words: k exceeds vocabulary size");
  std::vector<std::vector<TopWord>> out;
  std::vector<std::size_t> idx(vocab.size());
  for (Eigen::Index t = 0; t < phi.rows(); ++t) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return phi(t, static_cast<Eigen::Index>(a)) > phi(t, static_cast<Eigen::Index>(b));
    });
    std::vector<TopWord> row;
    for (std::size_t i = 0; i < k; ++i)
      row.push_back({vocab[idx[i]], phi(t, static_cast<Eigen::Index>(idx[i])), idx[i]});
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace mfvi
