// mfvi: fit the shipped models from the command line.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mfvi/io/counts.hpp"
#include "mfvi/io/dtm.hpp"
#include "mfvi/io/labor.hpp"
#include "mfvi/io/results.hpp"
#include "mfvi/models/gamma_poisson.hpp"
#include "mfvi/models/lda.hpp"
#include "mfvi/models/logistic.hpp"
#include "mfvi/models/metropolis.hpp"
#include "mfvi/optimize.hpp"

namespace fs = std::filesystem;
using namespace mfvi;

namespace {

struct Options {
  FitConfig cfg;
  std::string algorithm = "meanfield";
  std::string optimizer = "gradient";
  fs::path out = ".";
  bool reproducible = false;
  CLI::App* app = nullptr;
};

void add_fit_options(CLI::App* sub, Options& o) {
  o.app = sub;
  sub->add_option("--iter", o.cfg.iter, "Maximum iterations")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--grad-samples", o.cfg.grad_samples, "Monte Carlo draws per gradient")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--elbo-samples", o.cfg.elbo_samples, "Monte Carlo draws per ELBO evaluation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--eval-elbo", o.cfg.eval_elbo, "Evaluate the ELBO every N iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--adapt-iter", o.cfg.adapt_iter, "Iterations per step-size trial")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--tol-rel-obj", o.cfg.tol_rel_obj, "Relative ELBO change for convergence")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--output-samples", o.cfg.output_samples, "Posterior draws to summarize")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--seed", o.cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--step-size", o.cfg.step_size, "Fixed learning rate (skips step-size adaptation)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--algorithm", o.algorithm, "Variational family")
      ->check(CLI::IsMember({"meanfield"}))
      ->capture_default_str();
  sub->add_option("--optimizer", o.optimizer, "gradient or coordinate ascent")
      ->check(CLI::IsMember({"gradient", "coordinate"}))
      ->capture_default_str();
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  sub->add_flag("--reproducible", o.reproducible, "Write 0 for every wall-clock reading");
}

void prepare(Options& o) {
  if (o.app->count("--step-size")) o.cfg.adapt = false;
  fs::create_directories(o.out);
}

template <Model M>
FitResult run_fit(const M& model, const Options& o, RngStream& rng) {
  const auto init = initial_posterior(model);
  FitResult r = o.optimizer == "coordinate" ? fit_coordinate_ascent(model, init, o.cfg, rng)
                                            : fit_gradient_ascent(model, init, o.cfg, rng);
  if (o.reproducible)
    for (auto& row : r.trace.rows) row.seconds = 0.0;
  std::cerr << (r.converged ? "converged" : "stopped") << " after " << r.iterations << " iterations (eta "
            << r.step_size << ")\n";
  return r;
}

void write_posterior(const MeanFieldPosterior& q, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "factor,transform,index,loc,log_scale\n";
  for (const auto& f : q.factors())
    for (Eigen::Index i = 0; i < f.loc.size(); ++i)
      out << csv_field(f.name) << ',' << to_string(f.transform.kind) << ',' << i + 1 << ','
          << format_double(f.loc[i]) << ',' << format_double(f.log_scale[i]) << '\n';
}

/// trace.csv, posterior.csv and summary.csv; returns the posterior draws.
template <Model M>
Eigen::MatrixXd emit_fit(const M& model, const FitResult& r, const Options& o, RngStream& rng) {
  write_trace_csv(r.trace, o.out / "trace.csv");
  write_posterior(r.posterior, o.out / "posterior.csv");
  Eigen::MatrixXd draws = posterior_draws(r.posterior, static_cast<std::size_t>(o.cfg.output_samples), rng);
  write_summary(draws, model.layout().element_names(), o.out / "summary.csv");
  return draws;
}

double elapsed(std::chrono::steady_clock::time_point t0, const Options& o) {
  if (o.reproducible) return 0.0;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_summary(const Eigen::MatrixXd& draws, const std::vector<std::string>& names, std::size_t limit = 10) {
  const auto rows = summarize_draws(draws, names);
  std::cout << "param,mean,sd,q5,q50,q95\n";
  for (std::size_t i = 0; i < rows.size() && i < limit; ++i) {
    const auto& r = rows[i];
    std::cout << r.param << ',' << r.mean << ',' << r.sd << ',' << r.q5 << ',' << r.q50 << ',' << r.q95 << '\n';
  }
  if (rows.size() > limit) std::cout << "... (" << rows.size() - limit << " more in summary.csv)\n";
}

// ---- subcommands --------------------------------------------------------

struct GpArgs {
  Options o;
  std::string counts;
  double prior_alpha = 100.0, prior_beta = 2.0;
};

int fit_gp(GpArgs& a) {
  prepare(a.o);
  const auto counts = a.counts.empty() ? handout_counts() : load_counts(a.counts);
  GammaPoissonModel model(Gamma(a.prior_alpha, a.prior_beta), counts);
  RngStream rng(a.o.cfg.seed);
  const auto r = run_fit(model, a.o, rng);
  const auto draws = emit_fit(model, r, a.o, rng);
  print_summary(draws, model.layout().element_names());
  std::cout << "log-normal(" << r.posterior.loc()[0] << ", " << std::exp(r.posterior.log_scale()[0]) << ")\n";
  return 0;
}

struct LogisticArgs {
  Options o;
  std::string data;
  double prior_sd = 5.0;
};

LogisticModel logistic_model(const LaborDataset& ds, double prior_sd) {
  return LogisticModel(ds.income, ds.participation, Normal(0.0, prior_sd), Normal(0.0, prior_sd));
}

int fit_logistic(LogisticArgs& a) {
  prepare(a.o);
  const auto model = logistic_model(load_labor_csv(a.data), a.prior_sd);
  RngStream rng(a.o.cfg.seed);
  const auto r = run_fit(model, a.o, rng);
  print_summary(emit_fit(model, r, a.o, rng), model.layout().element_names());
  return 0;
}

void write_intervals(const Eigen::MatrixXd& draws, const fs::path& path, std::ostream* echo) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string header = "income,q5,q50,q95\n";
  out << header;
  if (echo) *echo << header;
  for (int income = 10; income <= 70; income += 10) {
    const auto q = prob_interval(draws, income);
    out << income << ',' << format_double(q[0]) << ',' << format_double(q[1]) << ',' << format_double(q[2]) << '\n';
    if (echo) *echo << income << ',' << q[0] << ',' << q[1] << ',' << q[2] << '\n';
  }
}

int intervals(LogisticArgs& a) {
  prepare(a.o);
  const auto model = logistic_model(load_labor_csv(a.data), a.prior_sd);
  RngStream rng(a.o.cfg.seed);
  const auto r = run_fit(model, a.o, rng);
  const auto draws = emit_fit(model, r, a.o, rng);
  write_intervals(draws, a.o.out / "intervals.csv", &std::cout);
  return 0;
}

struct LdaArgs {
  Options o;
  std::string data;
  int topics = 2;
  double sparsity = 0.0;
  double alpha = 0.0, beta = 1.0;
  std::size_t top = 10;
};

void write_top_words(const std::vector<std::vector<TopWord>>& tw, const fs::path& path, std::ostream* echo) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "topic,rank,word,prob\n";
  for (std::size_t k = 0; k < tw.size(); ++k) {
    if (echo) *echo << "topic " << k + 1 << ':';
    for (std::size_t i = 0; i < tw[k].size(); ++i) {
      out << k + 1 << ',' << i + 1 << ',' << csv_field(tw[k][i].word) << ',' << format_double(tw[k][i].prob) << '\n';
      if (echo) *echo << ' ' << tw[k][i].word;
    }
    if (echo) *echo << '\n';
  }
}

int fit_lda(LdaArgs& a) {
  prepare(a.o);
  auto dtm = load_dtm(a.data);
  if (a.o.app->count("--sparsity")) dtm = prune_sparse_terms(dtm, a.sparsity);
  const auto K = static_cast<Eigen::Index>(a.topics);
  const auto V = static_cast<Eigen::Index>(dtm.vocab_size());
  std::optional<Eigen::VectorXd> alpha, beta;
  if (a.o.app->count("--alpha")) alpha = Eigen::VectorXd::Constant(K, a.alpha);
  if (a.o.app->count("--beta")) beta = Eigen::VectorXd::Constant(V, a.beta);
  const LdaModel model(a.topics, std::move(dtm), alpha, beta);
  std::cerr << "corpus: " << model.dtm().num_docs << " documents, " << V << " terms, " << model.dtm().total_words()
            << " words\n";
  RngStream rng(a.o.cfg.seed);
  const auto r = run_fit(model, a.o, rng);
  const auto draws = emit_fit(model, r, a.o, rng);
  const Eigen::VectorXd mean = draws.colwise().mean();
  const RowMatrix phi = model.phi_view(mean);
  if (a.top > model.dtm().vocab_size()) a.top = model.dtm().vocab_size();
  write_top_words(top_words(phi, model.dtm().vocab, a.top), a.o.out / "top_words.csv", &std::cout);
  return 0;
}

struct TopWordsArgs {
  std::string summary, vocab;
  int topics = 2;
  std::size_t top = 10;
  fs::path out = ".";
};

/// Rebuild the posterior-mean topic-word matrix from a fit-lda summary.
int top_words_cmd(TopWordsArgs& a) {
  fs::create_directories(a.out);
  std::vector<std::string> vocab;
  {
    std::ifstream in(a.vocab);
    if (!in) throw IoError("cannot open " + a.vocab);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) vocab.push_back(line);
    }
  }
  const auto K = static_cast<Eigen::Index>(a.topics);
  RowMatrix phi = RowMatrix::Constant(K, static_cast<Eigen::Index>(vocab.size()), -1.0);
  for (const auto& row : read_summary(a.summary)) {
    if (row.param.rfind("phi[", 0) != 0) continue;
    const auto comma = row.param.find(',');
    if (comma == std::string::npos || row.param.back() != ']') throw ParseError("bad parameter name " + row.param);
    const auto k = parse_size(row.param.substr(4, comma - 4));
    const auto w = parse_size(row.param.substr(comma + 1, row.param.size() - comma - 2));
    if (k < 1 || k > static_cast<std::size_t>(K) || w < 1 || w > vocab.size())
      throw IndexError("summary entry " + row.param + " does not fit --topics/--vocab");
    phi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(w - 1)) = row.mean;
  }
  if ((phi.array() < 0).any()) throw ValidationError("summary does not cover every phi[k,w] entry");
  write_top_words(top_words(phi, vocab, std::min(a.top, vocab.size())), a.out / "top_words.csv", &std::cout);
  return 0;
}

struct CompareArgs {
  Options o;
  std::string model = "logistic";
  std::string data, counts;
  double prior_sd = 5.0;
  int warmup = 5000, samples = 5000;
};

int compare_mcmc(CompareArgs& a) {
  prepare(a.o);
  RngStream rng(a.o.cfg.seed);
  std::vector<std::string> names;
  Eigen::MatrixXd vi_draws;
  MetropolisResult mc;
  auto run_both = [&](const auto& model, const Eigen::VectorXd& start) {
    const auto r = run_fit(model, a.o, rng);
    vi_draws = emit_fit(model, r, a.o, rng);
    names = model.layout().element_names();
    RngStream chain_rng = rng.substream(1);
    mc = metropolis_sample([&](const Eigen::VectorXd& x) { return model.log_joint(x); }, start, Eigen::VectorXd(),
                           a.samples, a.warmup, chain_rng);
  };
  if (a.model == "gp") {
    const auto counts = a.counts.empty() ? handout_counts() : load_counts(a.counts);
    const GammaPoissonModel model(handout_prior(), counts);
    run_both(model, model.prior_mean());
  } else {
    if (a.data.empty()) throw ParameterError("compare-mcmc --model logistic requires --data");
    const auto model = logistic_model(load_labor_csv(a.data), a.prior_sd);
    run_both(model, model.prior_mean());
  }
  std::ofstream out(a.o.out / "compare.csv");
  if (!out) throw IoError("cannot write compare.csv");
  out << "method,param,mean,sd\n";
  std::cout << "method,param,mean,sd\n";
  for (const auto& [method, draws] : {std::pair<std::string, const Eigen::MatrixXd&>{"meanfield", vi_draws},
                                      std::pair<std::string, const Eigen::MatrixXd&>{"metropolis", mc.draws}}) {
    for (Eigen::Index j = 0; j < draws.cols(); ++j) {
      const double m = draws.col(j).mean(), s = sd(draws.col(j));
      out << method << ',' << names[static_cast<std::size_t>(j)] << ',' << format_double(m) << ','
          << format_double(s) << '\n';
      std::cout << method << ',' << names[static_cast<std::size_t>(j)] << ',' << m << ',' << s << '\n';
    }
  }
  std::cerr << "metropolis acceptance rate " << mc.acceptance_rate << '\n';
  return 0;
}

struct BenchArgs {
  Options o;
  std::string data;
  double prior_sd = 5.0;
  std::size_t replicates = 50;
  int warmup = 5000, samples = 5000;
};

int bench(BenchArgs& a) {
  prepare(a.o);
  const auto base = load_labor_csv(a.data);
  std::ofstream out(a.o.out / "bench.csv");
  if (!out) throw IoError("cannot write bench.csv");
  out << "replicates,observations,method,iterations,seconds\n";
  std::cout << "replicates,observations,method,iterations,seconds\n";
  for (std::size_t reps : {std::size_t{1}, a.replicates}) {
    const auto ds = replicate(base, reps);
    const auto model = logistic_model(ds, a.prior_sd);
    RngStream rng(a.o.cfg.seed);
    auto t0 = std::chrono::steady_clock::now();
    const auto r = run_fit(model, a.o, rng);
    const double vi_s = elapsed(t0, a.o);
    RngStream chain_rng = rng.substream(1);
    t0 = std::chrono::steady_clock::now();
    metropolis_sample([&](const Eigen::VectorXd& x) { return model.log_joint(x); }, model.prior_mean(),
                      Eigen::VectorXd(), a.samples, a.warmup, chain_rng);
    const double mc_s = elapsed(t0, a.o);
    for (const auto& [method, iters, secs] :
         {std::tuple<const char*, int, double>{"meanfield", r.iterations, vi_s},
          std::tuple<const char*, int, double>{"metropolis", a.warmup + a.samples, mc_s}}) {
      out << reps << ',' << ds.size() << ',' << method << ',' << iters << ',' << format_double(secs) << '\n';
      std::cout << reps << ',' << ds.size() << ',' << method << ',' << iters << ',' << secs << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field variational inference for the Gamma-Poisson, logistic and LDA models"};
  app.require_subcommand(1);

  GpArgs gp;
  auto* s_gp = app.add_subcommand("fit-gp", "Fit the Gamma-Poisson count model");
  add_fit_options(s_gp, gp.o);
  s_gp->add_option("--counts", gp.counts, "Counts file (default: the bundled handout counts)")
      ->check(CLI::ExistingFile);
  s_gp->add_option("--prior-alpha", gp.prior_alpha, "Gamma prior shape")->capture_default_str();
  s_gp->add_option("--prior-beta", gp.prior_beta, "Gamma prior rate")->capture_default_str();

  LogisticArgs lr;
  auto* s_lr = app.add_subcommand("fit-logistic", "Fit the logistic regression on a labor CSV");
  add_fit_options(s_lr, lr.o);
  s_lr->add_option("--data", lr.data, "CSV with FamilyIncome and Participation")->required()->check(CLI::ExistingFile);
  s_lr->add_option("--prior-sd", lr.prior_sd, "sd of the Normal(0, sd) priors")->capture_default_str();

  LogisticArgs iv;
  auto* s_iv = app.add_subcommand("intervals", "Participation probability quantiles at incomes 10..70");
  add_fit_options(s_iv, iv.o);
  s_iv->add_option("--data", iv.data, "CSV with FamilyIncome and Participation")->required()->check(CLI::ExistingFile);
  s_iv->add_option("--prior-sd", iv.prior_sd, "sd of the Normal(0, sd) priors")->capture_default_str();

  LdaArgs lda;
  lda.o.cfg.grad_samples = 10;
  lda.o.cfg.output_samples = 1000;
  auto* s_lda = app.add_subcommand("fit-lda", "Fit LDA with topic assignments marginalized");
  add_fit_options(s_lda, lda.o);
  s_lda->add_option("--data", lda.data, "Directory with triplets.csv and vocab.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  s_lda->add_option("--topics", lda.topics, "Number of topics K")->check(CLI::Range(2, 1000))->capture_default_str();
  s_lda->add_option("--sparsity", lda.sparsity, "Drop terms sparser than this fraction")
      ->check(CLI::Range(0.0, 1.0));
  s_lda->add_option("--alpha", lda.alpha, "Symmetric document-topic concentration (default 50/K)")
      ->check(CLI::PositiveNumber);
  s_lda->add_option("--beta", lda.beta, "Symmetric topic-word concentration")->check(CLI::PositiveNumber);
  s_lda->add_option("--top", lda.top, "Words per topic to report")->check(CLI::PositiveNumber)->capture_default_str();

  TopWordsArgs tw;
  auto* s_tw = app.add_subcommand("top-words", "Top words per topic from a fit-lda summary");
  s_tw->add_option("--summary", tw.summary, "summary.csv written by fit-lda")->required()->check(CLI::ExistingFile);
  s_tw->add_option("--vocab", tw.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  s_tw->add_option("--topics", tw.topics, "Number of topics K")->check(CLI::Range(2, 1000))->capture_default_str();
  s_tw->add_option("--top", tw.top, "Words per topic")->check(CLI::PositiveNumber)->capture_default_str();
  s_tw->add_option("--out", tw.out, "Output directory")->capture_default_str();

  CompareArgs cmp;
  auto* s_cmp = app.add_subcommand("compare-mcmc", "Compare the mean-field fit with random-walk Metropolis");
  add_fit_options(s_cmp, cmp.o);
  s_cmp->add_option("--model", cmp.model, "logistic or gp")
      ->check(CLI::IsMember({"logistic", "gp"}))
      ->capture_default_str();
  s_cmp->add_option("--data", cmp.data, "Labor CSV (logistic)")->check(CLI::ExistingFile);
  s_cmp->add_option("--counts", cmp.counts, "Counts file (gp)")->check(CLI::ExistingFile);
  s_cmp->add_option("--prior-sd", cmp.prior_sd, "sd of the Normal(0, sd) priors")->capture_default_str();
  s_cmp->add_option("--warmup", cmp.warmup, "Metropolis warmup")->check(CLI::NonNegativeNumber)->capture_default_str();
  s_cmp->add_option("--samples", cmp.samples, "Metropolis draws kept")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  BenchArgs bn;
  auto* s_bn = app.add_subcommand("bench", "Time both methods on 1x and replicated labor data");
  add_fit_options(s_bn, bn.o);
  s_bn->add_option("--data", bn.data, "Labor CSV")->required()->check(CLI::ExistingFile);
  s_bn->add_option("--prior-sd", bn.prior_sd, "sd of the Normal(0, sd) priors")->capture_default_str();
  s_bn->add_option("--replicates", bn.replicates, "Copies of the data in the large run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  s_bn->add_option("--warmup", bn.warmup, "Metropolis warmup")->check(CLI::NonNegativeNumber)->capture_default_str();
  s_bn->add_option("--samples", bn.samples, "Metropolis draws kept")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s_gp->parsed()) return fit_gp(gp);
    if (s_lr->parsed()) return fit_logistic(lr);
    if (s_iv->parsed()) return intervals(iv);
    if (s_lda->parsed()) return fit_lda(lda);
    if (s_tw->parsed()) return top_words_cmd(tw);
    if (s_cmp->parsed()) return compare_mcmc(cmp);
    if (s_bn->parsed()) return bench(bn);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
