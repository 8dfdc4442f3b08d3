#include <gtest/gtest.h>

#include <sstream>

#include "cli_support.hpp"
#include "mfvi/io/results.hpp"

using namespace mfvi;
using namespace mfvi::testing;

namespace {

std::string q(const fs::path& p) { return shell_quote(p.string()); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

}  // namespace

TEST(Cli, FitGpSummaryMean) {
  const auto dir = scratch_dir("cli_fit_gp");
  const auto r = run_cli("fit-gp --counts " + q(kDataDir / "handout_counts.txt") + " --out " + q(dir / "out"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto rows = read_summary(dir / "out" / "summary.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].param, "theta");
  EXPECT_NEAR(rows[0].mean, 49.5, 0.5);
  EXPECT_TRUE(fs::exists(dir / "out" / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "posterior.csv"));
}

TEST(Cli, FitGpDefaultsToHandoutCounts) {
  const auto dir = scratch_dir("cli_fit_gp_default");
  const auto r = run_cli("fit-gp --optimizer coordinate --out " + q(dir / "out"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NEAR(read_summary(dir / "out" / "summary.csv")[0].mean, 49.5, 0.5);
}

TEST(Cli, IntervalsSevenRows) {
  const auto dir = scratch_dir("cli_intervals");
  const auto r = run_cli("intervals --data " + q(kDataDir / "psid_synthetic.csv") + " --out " + q(dir / "out"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto l = lines(slurp(dir / "out" / "intervals.csv"));
  ASSERT_EQ(l.size(), 8u);
  EXPECT_EQ(l[0], "income,q5,q50,q95");
  for (int i = 1; i <= 7; ++i) EXPECT_EQ(l[static_cast<std::size_t>(i)].substr(0, 3), std::to_string(10 * i) + ",");
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto dir = scratch_dir("cli_unknown");
  const auto r = run_cli("fit-gp --no-such-flag", dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(r.err.empty());
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, MissingSubcommandIsUsageError) {
  const auto dir = scratch_dir("cli_nosub");
  EXPECT_EQ(run_cli("", dir).exit_code, 2);
  EXPECT_EQ(run_cli("--help", dir).exit_code, 0);
}

TEST(Cli, RuntimeErrorExitsOne) {
  const auto dir = scratch_dir("cli_runtime");
  std::ofstream(dir / "bad.csv") << "FamilyIncome,Participation\n10,maybe\n";
  const auto r = run_cli("fit-logistic --data " + q(dir / "bad.csv") + " --out " + q(dir / "out"), dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_NE(r.err.find("row 1"), std::string::npos) << r.err;
}

TEST(Cli, CompareMcmcReportsBothMethods) {
  const auto dir = scratch_dir("cli_compare");
  const auto r = run_cli("compare-mcmc --model gp --out " + q(dir / "out"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const std::string csv = slurp(dir / "out" / "compare.csv");
  EXPECT_NE(csv.find("\nmeanfield,theta,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\nmetropolis,theta,"), std::string::npos) << csv;
}

TEST(Cli, FitLdaThenTopWords) {
  const auto dir = scratch_dir("cli_lda");
  const auto r = run_cli("fit-lda --data " + q(kDataDir / "lda_synthetic") + " --top 5 --out " + q(dir / "fit"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto fitted = lines(slurp(dir / "fit" / "top_words.csv"));
  ASSERT_EQ(fitted.size(), 11u);
  const auto r2 = run_cli("top-words --summary " + q(dir / "fit" / "summary.csv") + " --vocab " +
                              q(kDataDir / "lda_synthetic" / "vocab.txt") + " --top 5 --out " + q(dir / "tw"),
                          dir);
  ASSERT_EQ(r2.exit_code, 0) << r2.err;
  EXPECT_EQ(lines(slurp(dir / "tw" / "top_words.csv")).size(), 11u);
}
