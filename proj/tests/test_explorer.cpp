// service.hpp pulls in Eigen and must precede httplib (<resolv.h> defines `_res`).
#include "mfvi/explorer/service.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

using mfvi::explorer::Response;
using mfvi::explorer::Service;
using nlohmann::json;

namespace {

std::string new_session(Service& svc, const json& body = json::object()) {
  const auto r = svc.handle("POST", "/api/session", body.dump());
  EXPECT_EQ(r.status, 200) << r.body.dump();
  return r.body["session_id"].get<std::string>();
}

Response eval(Service& svc, const std::string& sid, double mu, double sigma, int n = 10000) {
  return svc.handle("POST", "/api/session/" + sid + "/eval",
                    json{{"mu", mu}, {"sigma", sigma}, {"n_samples", n}}.dump());
}

}  // namespace

TEST(ExplorerSession, Defaults) {
  Service svc;
  const auto r = svc.handle("POST", "/api/session", "{}");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["exact_posterior"]["alpha"], 792.0);
  EXPECT_EQ(r.body["exact_posterior"]["beta"], 16.0);
  EXPECT_NEAR(r.body["log_evidence"].get<double>(), -42.465, 0.01);
  EXPECT_EQ(r.body["counts"].size(), 14u);
}

TEST(ExplorerSession, CustomPriorAndCounts) {
  Service svc;
  const auto r =
      svc.handle("POST", "/api/session", json{{"prior_alpha", 1}, {"prior_beta", 1}, {"counts", {3}}}.dump());
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["exact_posterior"]["alpha"], 4.0);
  EXPECT_EQ(r.body["exact_posterior"]["beta"], 2.0);
}

TEST(ExplorerSession, InvalidParametersNameFields) {
  Service svc;
  const auto r = svc.handle("POST", "/api/session", json{{"prior_beta", -1}, {"counts", {1, -2}}}.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_TRUE(r.body["fields"].contains("prior_beta"));
  EXPECT_TRUE(r.body["fields"].contains("counts"));
  EXPECT_EQ(svc.handle("POST", "/api/session", "not json").status, 400);
  EXPECT_EQ(svc.handle("POST", "/api/session", "[1,2]").status, 400);
}

TEST(ExplorerSession, IdsAreUnique) {
  Service svc;
  EXPECT_NE(new_session(svc), new_session(svc));
}

TEST(ExplorerEval, PaperOptimum) {
  Service svc;
  const auto sid = new_session(svc);
  const auto r = eval(svc, sid, 3.9, 0.04, 100000);
  ASSERT_EQ(r.status, 200);
  EXPECT_NEAR(r.body["elbo"].get<double>(), -42.52, 0.3);
  EXPECT_EQ(r.body["densities"]["grid"].size(), 512u);
  EXPECT_EQ(r.body["densities"]["variational"].size(), 512u);
}

TEST(ExplorerEval, PaperPoorFit) {
  Service svc;
  const auto sid = new_session(svc);
  const auto r = eval(svc, sid, 3.7, 0.05, 100000);
  ASSERT_EQ(r.status, 200);
  EXPECT_NEAR(r.body["kl"].get<double>(), 15.085, 0.2);
  EXPECT_NEAR(r.body["elbo"].get<double>(), -57.55, 0.3);
}

TEST(ExplorerEval, InvalidInputs) {
  Service svc;
  const auto sid = new_session(svc);
  const auto r = eval(svc, sid, 3.9, 0.0);
  EXPECT_EQ(r.status, 400);
  EXPECT_TRUE(r.body["fields"].contains("sigma"));
  EXPECT_EQ(eval(svc, "s999", 3.9, 0.04).status, 404);
  EXPECT_EQ(svc.handle("POST", "/api/session/" + sid + "/eval", json{{"sigma", 0.1}}.dump()).status, 400);
  EXPECT_EQ(eval(svc, sid, 3.9, 0.04, 0).status, 400);
  EXPECT_EQ(svc.handle("GET", "/api/session/" + sid + "/eval", "").status, 405);
}

TEST(ExplorerEval, ReferentiallyTransparent) {
  Service svc;
  const auto sid = new_session(svc);
  EXPECT_EQ(eval(svc, sid, 3.85, 0.06).body.dump(), eval(svc, sid, 3.85, 0.06).body.dump());
}

TEST(ExplorerEval, ElboPlusKlIsLogEvidence) {
  Service svc;
  for (const auto& [mu, sigma] : std::vector<std::pair<double, double>>{{3.9, 0.04}, {3.7, 0.05}, {4.0, 0.1}, {3.8, 0.02}}) {
    const auto s = svc.handle("POST", "/api/session", "{}");
    const std::string sid = s.body["session_id"];
    const auto r = eval(svc, sid, mu, sigma);
    const double se = std::hypot(r.body["elbo_se"].get<double>(), r.body["kl_se"].get<double>());
    EXPECT_LT(std::abs(r.body["elbo"].get<double>() + r.body["kl"].get<double>() - s.body["log_evidence"].get<double>()),
              3 * se);
  }
}

TEST(ExplorerFit, Lifecycle) {
  Service svc;
  const auto sid = new_session(svc);
  EXPECT_EQ(svc.handle("GET", "/api/session/" + sid + "/fit/j1", "").status, 404);
  const auto start = svc.handle("POST", "/api/session/" + sid + "/fit", "{}");
  ASSERT_EQ(start.status, 202);
  const std::string job = start.body["job_id"];
  svc.wait_for_jobs();
  const auto r = svc.handle("GET", "/api/session/" + sid + "/fit/" + job, "");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "done");
  EXPECT_TRUE(r.body["converged"].get<bool>());
  const double mu = r.body["fitted"]["mu"], sigma = r.body["fitted"]["sigma"];
  EXPECT_GE(mu, 3.88);
  EXPECT_LE(mu, 3.92);
  EXPECT_GE(sigma, 0.03);
  EXPECT_LE(sigma, 0.05);
  ASSERT_FALSE(r.body["trace"].empty());
  EXPECT_EQ(r.body["elbo"], r.body["trace"].back()["elbo"]);
  // another session cannot see this job
  const auto other = new_session(svc);
  EXPECT_EQ(svc.handle("GET", "/api/session/" + other + "/fit/" + job, "").status, 404);
}

TEST(ExplorerFit, FailedJobCarriesDiagnostic) {
  Service svc;
  const auto sid = new_session(svc);
  // a huge fixed step throws the first iterate far outside the representable range
  const auto start = svc.handle("POST", "/api/session/" + sid + "/fit", json{{"step_size", 1e6}, {"iter", 50}}.dump());
  ASSERT_EQ(start.status, 202);
  svc.wait_for_jobs();
  const auto r = svc.handle("GET", "/api/session/" + sid + "/fit/" + start.body["job_id"].get<std::string>(), "");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "failed");
  EXPECT_NE(r.body["error"].get<std::string>().find("step size"), std::string::npos) << r.body.dump();
  EXPECT_TRUE(r.body["fitted"].is_null());
}

TEST(ExplorerFit, InvalidConfigAndUnknownIds) {
  Service svc;
  const auto sid = new_session(svc);
  const auto r = svc.handle("POST", "/api/session/" + sid + "/fit", json{{"iter", 0}, {"tol_rel_obj", -1}}.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_TRUE(r.body["fields"].contains("iter"));
  EXPECT_TRUE(r.body["fields"].contains("tol_rel_obj"));
  EXPECT_EQ(svc.handle("POST", "/api/session/nope/fit", "{}").status, 404);
  EXPECT_EQ(svc.handle("GET", "/api/other", "").status, 404);
  EXPECT_EQ(svc.handle("GET", "/api/session", "").status, 405);
}

TEST(ExplorerFit, FinishedJobsAreEvictedAfterRetention) {
  auto offset = std::make_shared<std::atomic<long long>>(0);
  Service svc([offset] { return std::chrono::steady_clock::time_point(std::chrono::seconds(offset->load())); });
  const auto sid = new_session(svc);
  const auto start = svc.handle("POST", "/api/session/" + sid + "/fit", json{{"iter", 20}}.dump());
  const std::string path = "/api/session/" + sid + "/fit/" + start.body["job_id"].get<std::string>();
  svc.wait_for_jobs();
  offset->store(3599);
  EXPECT_EQ(svc.handle("GET", path, "").status, 200);
  offset->store(3600);
  EXPECT_EQ(svc.handle("GET", path, "").status, 404);
  EXPECT_EQ(svc.job_count(), 0u);
}

TEST(ExplorerHttp, RoundTripThroughServer) {
  Service svc;
  httplib::Server server;
  server.Post(R"(/api/.*)", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = svc.handle("POST", req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const auto res = client.Post("/api/session", "{}", "application/json");
  server.stop();
  t.join();
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["exact_posterior"]["alpha"], 792.0);
}
