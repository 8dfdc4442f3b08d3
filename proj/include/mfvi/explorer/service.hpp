#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mfvi/distributions.hpp"
#include "mfvi/elbo.hpp"
#include "mfvi/models/gamma_poisson.hpp"
#include "mfvi/optimize.hpp"

namespace mfvi::explorer {

using json = nlohmann::json;

struct Response {
  int status = 200;
  json body = json::object();
};

inline constexpr std::size_t kGridPoints = 512;
inline constexpr std::size_t kDefaultEvalSamples = 10000;
inline constexpr std::size_t kMaxEvalSamples = 1000000;
inline constexpr std::uint64_t kEvalSeed = 20240101;
inline constexpr std::chrono::seconds kJobRetention{3600};

/// Request handling for the Gamma-Poisson explorer, independent of any HTTP
/// transport. Sessions and fit jobs live in memory; finished jobs are evicted
/// an hour after completion.
class Service {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit Service(Clock clock = [] { return std::chrono::steady_clock::now(); }) : clock_(std::move(clock)) {}

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() {
    std::map<std::string, std::shared_ptr<Job>> jobs;
    {
      std::lock_guard lock(mu_);
      jobs.swap(jobs_);
    }
    jobs.clear();  // joins running workers
  }

  /// Dispatch on method and path; `body` is the raw request body.
  Response handle(const std::string& method, const std::string& path, const std::string& body) {
    evict_expired();
    const auto parts = split_path(path);
    if (parts.size() < 2 || parts[0] != "api" || parts[1] != "session") return error(404, "not found");
    const std::optional<json> parsed = method == "POST" ? parse_body(body) : std::optional<json>(json::object());
    if (!parsed) return error(400, "request body must be a JSON object");
    const json& req = *parsed;
    if (parts.size() == 2) {
      if (method != "POST") return error(405, "method not allowed");
      return create_session(req);
    }
    const std::string& id = parts[2];
    if (parts.size() == 4 && parts[3] == "eval") {
      if (method != "POST") return error(405, "method not allowed");
      return eval(id, req);
    }
    if (parts.size() == 4 && parts[3] == "fit") {
      if (method != "POST") return error(405, "method not allowed");
      return start_fit(id, req);
    }
    if (parts.size() == 5 && parts[3] == "fit") {
      if (method != "GET") return error(405, "method not allowed");
      return poll_fit(id, parts[4]);
    }
    return error(404, "not found");
  }

  /// Block until every running job has finished (tests and shutdown).
  void wait_for_jobs() {
    for (;;) {
      bool running = false;
      {
        std::lock_guard lock(mu_);
        for (auto& [_, j] : jobs_) running = running || !j->finished.load();
      }
      if (!running) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }

  std::size_t job_count() {
    std::lock_guard lock(mu_);
    return jobs_.size();
  }

 private:
  struct Session {
    GammaPoissonModel model;
    Gamma posterior;
    double log_evidence;
  };

  struct Job {
    std::string session;
    std::mutex mu;
    std::string status = "running";
    std::vector<TraceRow> trace;
    std::optional<FitResult> result;
    std::string error;
    std::chrono::steady_clock::time_point finished_at{};
    std::atomic<bool> finished{false};
    std::jthread worker;  // last member: joined before the rest is destroyed
  };

  static std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= path.size()) {
      auto next = path.find('/', pos);
      if (next == std::string::npos) next = path.size();
      if (next > pos) out.push_back(path.substr(pos, next - pos));
      pos = next + 1;
    }
    return out;
  }

  /// Empty bodies count as {}; anything but a JSON object is rejected.
  static std::optional<json> parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  }

  static Response error(int status, std::string message, json fields = nullptr) {
    Response r{status, {{"error", std::move(message)}}};
    if (!fields.is_null()) r.body["fields"] = std::move(fields);
    return r;
  }

  /// Optional positive finite number; records a field error otherwise.
  static std::optional<double> positive(const json& body, const char* key, json& fields) {
    if (!body.contains(key)) return std::nullopt;
    const auto& v = body[key];
    if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() <= 0.0) {
      fields[key] = "must be a positive number";
      return std::nullopt;
    }
    return v.get<double>();
  }

  Response create_session(const json& body) {
    json fields = json::object();
    const double a = positive(body, "prior_alpha", fields).value_or(handout_prior().shape);
    const double b = positive(body, "prior_beta", fields).value_or(handout_prior().rate);
    std::vector<std::int64_t> counts = handout_counts();
    if (body.contains("counts")) {
      const auto& c = body["counts"];
      counts.clear();
      if (!c.is_array()) {
        fields["counts"] = "must be an array of non-negative integers";
      } else {
        for (const auto& v : c) {
          if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            fields["counts"] = "must be an array of non-negative integers";
            break;
          }
          counts.push_back(v.get<std::int64_t>());
        }
      }
    }
    if (!fields.empty()) return error(400, "invalid session parameters", fields);

    const Gamma prior(a, b);
    Session s{GammaPoissonModel(prior, counts), gamma_poisson_posterior(prior, counts),
              gamma_poisson_log_evidence(prior, counts)};
    auto session = std::make_shared<const Session>(std::move(s));
    std::string id;
    {
      std::lock_guard lock(mu_);
      id = "s" + std::to_string(++next_session_);
      sessions_.emplace(id, session);
    }
    return {200,
            {{"session_id", id},
             {"exact_posterior", {{"alpha", session->posterior.shape}, {"beta", session->posterior.rate}}},
             {"log_evidence", session->log_evidence},
             {"counts", counts},
             {"prior", {{"alpha", a}, {"beta", b}}}}};
  }

  std::shared_ptr<const Session> sessions_at(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  Response eval(const std::string& id, const json& body) {
    const auto s = sessions_at(id);
    if (!s) return error(404, "unknown session " + id);
    json fields = json::object();
    double mu = 0.0, sigma = 0.0;
    if (!body.contains("mu") || !body["mu"].is_number() || !std::isfinite(body["mu"].get<double>()))
      fields["mu"] = "must be a finite number";
    else
      mu = body["mu"].get<double>();
    if (!body.contains("sigma") || !body["sigma"].is_number() || !std::isfinite(body["sigma"].get<double>()) ||
        body["sigma"].get<double>() <= 0.0)
      fields["sigma"] = "must be a positive number";
    else
      sigma = body["sigma"].get<double>();
    std::size_t n = kDefaultEvalSamples;
    if (body.contains("n_samples")) {
      const auto& v = body["n_samples"];
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
          v.get<std::int64_t>() > static_cast<std::int64_t>(kMaxEvalSamples))
        fields["n_samples"] = "must be an integer in [1, 1000000]";
      else
        n = v.get<std::size_t>();
    }
    if (!fields.empty()) return error(400, "invalid evaluation parameters", fields);

    const MeanFieldPosterior q(s->model.layout(), Eigen::VectorXd::Constant(1, mu),
                               Eigen::VectorXd::Constant(1, std::log(sigma)));
    json out;
    try {
      RngStream elbo_rng(kEvalSeed, 0), kl_rng(kEvalSeed, 1);
      const auto elbo = estimate_elbo(s->model, q, n, elbo_rng);
      const auto kl = estimate_kl(q, s->posterior, n, kl_rng);
      out = {{"elbo", elbo.value}, {"elbo_se", elbo.std_error}, {"kl", kl.value}, {"kl_se", kl.std_error},
             {"n_samples", n}};
    } catch (const NonFiniteError& e) {
      return error(400, std::string("q is too far from the data to evaluate: ") + e.what());
    }
    out["densities"] = densities(*s, mu, sigma);
    return {200, out};
  }

  /// Prior, exact posterior and candidate densities on a shared grid spanning
  /// posterior mean +- 6 sd and prior mean +- 4 sd.
  static json densities(const Session& s, double mu, double sigma) {
    const auto& prior = s.model.prior();
    const double prior_mean = prior.shape / prior.rate, prior_sd = std::sqrt(prior.shape) / prior.rate;
    const double post_mean = s.posterior.shape / s.posterior.rate;
    const double post_sd = std::sqrt(s.posterior.shape) / s.posterior.rate;
    const double lo_raw = std::min(post_mean - 6 * post_sd, prior_mean - 4 * prior_sd);
    const double hi = std::max(post_mean + 6 * post_sd, prior_mean + 4 * prior_sd);
    const double lo = std::max(lo_raw, hi * 1e-6);
    const LogNormal cand(mu, sigma);
    std::vector<double> grid(kGridPoints), p(kGridPoints), post(kGridPoints), var(kGridPoints);
    for (std::size_t i = 0; i < kGridPoints; ++i) {
      const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kGridPoints - 1);
      grid[i] = t;
      p[i] = std::exp(log_density(prior, t));
      post[i] = std::exp(log_density(s.posterior, t));
      var[i] = std::exp(log_density(cand, t));
    }
    return {{"grid", grid}, {"prior", p}, {"posterior", post}, {"variational", var}};
  }

  static FitConfig fit_config(const json& body, json& fields) {
    FitConfig cfg;
    auto count = [&](const char* key, int& dst) {
      if (!body.contains(key)) return;
      const auto& v = body[key];
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1 || v.get<std::int64_t>() > 1000000)
        fields[key] = "must be an integer in [1, 1000000]";
      else
        dst = v.get<int>();
    };
    count("iter", cfg.iter);
    count("grad_samples", cfg.grad_samples);
    count("elbo_samples", cfg.elbo_samples);
    count("eval_elbo", cfg.eval_elbo);
    count("adapt_iter", cfg.adapt_iter);
    if (auto v = positive(body, "tol_rel_obj", fields)) cfg.tol_rel_obj = *v;
    if (auto v = positive(body, "step_size", fields)) {
      cfg.step_size = *v;
      cfg.adapt = false;
    }
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned())
        fields["seed"] = "must be a non-negative integer";
      else
        cfg.seed = body["seed"].get<std::uint64_t>();
    }
    return cfg;
  }

  Response start_fit(const std::string& id, const json& body) {
    const auto s = sessions_at(id);
    if (!s) return error(404, "unknown session " + id);
    json fields = json::object();
    const FitConfig cfg = fit_config(body, fields);
    if (!fields.empty()) return error(400, "invalid fit configuration", fields);

    auto job = std::make_shared<Job>();
    job->session = id;
    std::string job_id;
    {
      std::lock_guard lock(mu_);
      job_id = "j" + std::to_string(++next_job_);
      jobs_.emplace(job_id, job);
    }
    Job* raw = job.get();
    job->worker = std::jthread([this, raw, s, cfg] {
      std::string status = "done", message;
      std::optional<FitResult> result;
      try {
        RngStream rng(cfg.seed);
        result = fit_gradient_ascent(s->model, initial_posterior(s->model), cfg, rng, [raw](const TraceRow& row) {
          std::lock_guard lock(raw->mu);
          raw->trace.push_back(row);
        });
      } catch (const std::exception& e) {
        status = "failed";
        message = e.what();
      }
      {
        std::lock_guard lock(raw->mu);
        raw->status = status;
        raw->error = message;
        raw->result = std::move(result);
        raw->finished_at = clock_();
      }
      raw->finished = true;
    });
    return {202, {{"job_id", job_id}, {"status", "running"}}};
  }

  Response poll_fit(const std::string& id, const std::string& job_id) {
    if (!sessions_at(id)) return error(404, "unknown session " + id);
    std::shared_ptr<Job> job;
    {
      std::lock_guard lock(mu_);
      const auto it = jobs_.find(job_id);
      if (it != jobs_.end() && it->second->session == id) job = it->second;
    }
    if (!job) return error(404, "unknown job " + job_id);
    std::lock_guard lock(job->mu);
    json trace = json::array();
    for (const auto& r : job->trace) trace.push_back({{"iter", r.iteration}, {"elbo", r.elbo}});
    json out = {{"job_id", job_id}, {"status", job->status}, {"trace", trace}};
    out["elbo"] = job->trace.empty() ? json(nullptr) : json(job->trace.back().elbo);
    if (job->result) {
      const auto& q = job->result->posterior;
      out["fitted"] = {{"mu", q.loc()[0]}, {"sigma", std::exp(q.log_scale()[0])}};
      out["converged"] = job->result->converged;
      out["iterations"] = job->result->iterations;
    } else {
      out["fitted"] = nullptr;
    }
    if (job->status == "failed") out["error"] = job->error;
    return {200, out};
  }

  void evict_expired() {
    std::vector<std::shared_ptr<Job>> expired;
    {
      std::lock_guard lock(mu_);
      const auto now = clock_();
      for (auto it = jobs_.begin(); it != jobs_.end();) {
        if (it->second->finished.load() && now - it->second->finished_at >= kJobRetention) {
          expired.push_back(std::move(it->second));
          it = jobs_.erase(it);
        } else {
          ++it;
        }
      }
    }
    // expired jobs (and their finished threads) are released outside the lock
  }

  Clock clock_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Session>> sessions_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::uint64_t next_session_ = 0;
  std::uint64_t next_job_ = 0;
};

}  // namespace mfvi::explorer
