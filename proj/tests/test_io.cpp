#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "mfvi/io/bundled.hpp"
#include "mfvi/io/counts.hpp"
#include "mfvi/io/dtm.hpp"
#include "mfvi/io/labor.hpp"
#include "mfvi/io/results.hpp"
#include "mfvi/io/text.hpp"
#include "mfvi/stats.hpp"

namespace fs = std::filesystem;
using namespace mfvi;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("mfvi_io_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

DocTermMatrix one_doc(std::int64_t count) {
  DocTermMatrix d;
  d.num_docs = 1;
  d.vocab = {"only"};
  d.triplets = {{0, 0, count}};
  return d;
}

/// M docs; term j appears (once) in the first df[j] documents.
DocTermMatrix with_document_frequencies(std::size_t m, const std::vector<std::size_t>& df) {
  DocTermMatrix d;
  d.num_docs = m;
  for (std::size_t j = 0; j < df.size(); ++j) {
    d.vocab.push_back("t" + std::to_string(j));
    for (std::size_t doc = 0; doc < df[j]; ++doc) d.triplets.push_back({doc, j, 1});
  }
  return d;
}

}  // namespace

TEST(Text, CsvSplitHandlesQuotes) {
  EXPECT_EQ(split_csv_line("a, b ,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(split_csv_line("\"x,y\",\"say \"\"hi\"\"\""), (std::vector<std::string>{"x,y", "say \"hi\""}));
  EXPECT_EQ(csv_field("theta[1,2]"), "\"theta[1,2]\"");
  EXPECT_EQ(csv_field("alpha"), "alpha");
}

TEST(Text, NumbersRoundTrip) {
  for (double v : {0.1, -42.52, 1e-300, 3.141592653589793}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_THROW(parse_double("abc", 4), ParseError);
  EXPECT_THROW(parse_int("1.5"), ParseError);
}

TEST(Labor, TwoRowFile) {
  TempDir dir;
  write_file(dir / "l.csv", "Participation,FamilyIncome,Other\nyes,12.5,x\n0,40,y\n");
  const auto ds = load_labor_csv(dir / "l.csv");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.income, (std::vector<double>{12.5, 40.0}));
  EXPECT_EQ(ds.participation, (std::vector<int>{1, 0}));
}

TEST(Labor, UnknownLabelNamesRow) {
  TempDir dir;
  write_file(dir / "l.csv", "FamilyIncome,Participation\n10,no\n20,maybe\n");
  try {
    load_labor_csv(dir / "l.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("maybe"), std::string::npos);
  }
}

TEST(Labor, MalformedInputs) {
  TempDir dir;
  write_file(dir / "a.csv", "FamilyIncome\n10\n");
  EXPECT_THROW(load_labor_csv(dir / "a.csv"), ParseError);
  write_file(dir / "b.csv", "FamilyIncome,Participation\nlots,yes\n");
  EXPECT_THROW(load_labor_csv(dir / "b.csv"), ParseError);
  EXPECT_THROW(load_labor_csv(dir / "missing.csv"), IoError);
}

TEST(Labor, RoundTripAndBundledShape) {
  TempDir dir;
  const auto ds = bundled_labor();
  EXPECT_EQ(ds.size(), 753u);
  write_labor_csv(ds, dir / "psid.csv");
  EXPECT_EQ(load_labor_csv(dir / "psid.csv"), ds);
  EXPECT_EQ(replicate(ds, 3).size(), 3 * 753u);
}

TEST(Dtm, SingleTriplet) {
  TempDir dir;
  write_file(dir / kTripletFile, "doc,word,count\n1,1,3\n");
  write_file(dir / kVocabFile, "only\n");
  const auto d = load_dtm(dir.path());
  EXPECT_EQ(d.num_docs, 1u);
  EXPECT_EQ(d.vocab_size(), 1u);
  EXPECT_EQ(d.total_words(), 3);
}

TEST(Dtm, DuplicatePairRejected) {
  TempDir dir;
  write_file(dir / kTripletFile, "doc,word,count\n1,1,3\n1,1,2\n");
  write_file(dir / kVocabFile, "only\n");
  EXPECT_THROW(load_dtm(dir.path()), ValidationError);
}

TEST(Dtm, InvariantViolations) {
  auto d = one_doc(0);
  EXPECT_THROW(d.validate(), ValidationError);
  d = one_doc(2);
  d.triplets.push_back({0, 3, 1});
  EXPECT_THROW(d.validate(), ValidationError);
  d = one_doc(2);
  d.triplets.push_back({4, 0, 1});
  EXPECT_THROW(d.validate(), ValidationError);
}

TEST(Dtm, WriteLoadRoundTrip) {
  TempDir dir;
  auto d = bundled_corpus().dtm;
  d.num_docs += 2;  // trailing empty documents survive via the doc-count comment
  d.vocab[3] = "comma,word";
  write_dtm(d, dir.path());
  EXPECT_EQ(load_dtm(dir.path()), d);
}

TEST(Dtm, DropEmptyDocuments) {
  DocTermMatrix d;
  d.num_docs = 3;
  d.vocab = {"a"};
  d.triplets = {{2, 0, 1}};
  const auto kept = drop_empty_documents(d, false);
  EXPECT_EQ(kept, (std::vector<std::size_t>{2}));
  EXPECT_EQ(d.num_docs, 1u);
  EXPECT_EQ(d.triplets[0].doc, 0u);
}

TEST(Prune, BoundaryKept) {
  const auto out = prune_sparse_terms(with_document_frequencies(100, {5, 100}), 0.95);
  EXPECT_EQ(out.vocab_size(), 2u);
}

TEST(Prune, BelowBoundaryDropped) {
  const auto out = prune_sparse_terms(with_document_frequencies(100, {4, 100}), 0.95);
  ASSERT_EQ(out.vocab_size(), 1u);
  EXPECT_EQ(out.vocab[0], "t1");
  EXPECT_EQ(out.triplets.size(), 100u);
}

TEST(Prune, LooseThresholdIsIdentity) {
  RngStream rng(8);
  const auto d = generate_synthetic_corpus(2, 50, 12, 40, 1.0, 5.0, rng).dtm;
  for (auto f : d.document_frequency()) ASSERT_GT(f, 0u);
  EXPECT_EQ(prune_sparse_terms(d, 0.999999), d);
}

TEST(Prune, LooseThresholdDropsUnusedTerms) {
  const auto d = bundled_corpus().dtm;
  std::size_t unused = 0;
  for (auto f : d.document_frequency()) unused += f == 0;
  ASSERT_GT(unused, 0u);
  EXPECT_EQ(prune_sparse_terms(d, 0.999999).vocab_size(), d.vocab_size() - unused);
}

TEST(Prune, Idempotent) {
  const auto once = prune_sparse_terms(bundled_corpus().dtm, 0.6);
  EXPECT_EQ(prune_sparse_terms(once, 0.6).vocab, once.vocab);
}

TEST(Prune, RemovingEverythingThrows) {
  EXPECT_THROW(prune_sparse_terms(with_document_frequencies(100, {1, 2}), 0.5), ValidationError);
  EXPECT_THROW(prune_sparse_terms(with_document_frequencies(10, {1}), 1.5), ParameterError);
}

TEST(SyntheticCorpus, SingleTopicFrequenciesMatchPhi) {
  RngStream rng(1);
  const auto c = generate_synthetic_corpus(1, 400, 10, 50, 1.0, 1.0, rng);
  c.dtm.validate();
  const double n = static_cast<double>(c.dtm.total_words());
  EXPECT_EQ(n, 400.0 * 50.0);
  std::vector<double> freq(10, 0.0);
  for (const auto& t : c.dtm.triplets) freq[t.word] += static_cast<double>(t.count);
  for (std::size_t j = 0; j < 10; ++j) {
    const double p = c.phi(0, static_cast<Eigen::Index>(j));
    EXPECT_NEAR(freq[j] / n, p, 4 * std::sqrt(p * (1 - p) / n) + 1e-12) << "word " << j;
  }
}

TEST(SyntheticCorpus, DeterministicAndValid) {
  RngStream a(2), b(2);
  const auto c1 = generate_synthetic_corpus(3, 50, 30, 40, 0.5, 0.2, a);
  const auto c2 = generate_synthetic_corpus(3, 50, 30, 40, 0.5, 0.2, b);
  EXPECT_EQ(c1.dtm, c2.dtm);
  EXPECT_EQ(c1.phi, c2.phi);
  EXPECT_NO_THROW(c1.dtm.validate());
  EXPECT_EQ(c1.dtm.total_words(), 50 * 40);
}

TEST(Bundled, CorpusShape) {
  const auto c = bundled_corpus();
  EXPECT_EQ(c.dtm.num_docs, 200u);
  EXPECT_EQ(c.dtm.vocab_size(), 60u);
  EXPECT_EQ(c.dtm.total_words(), 200 * 80);
  EXPECT_EQ(c.phi.rows(), 2);
}

TEST(Trace, ThreeRows) {
  TempDir dir;
  ElboTrace t;
  t.push(1, 0.0, -50.25);
  t.push(2, 0.5, -45.0);
  t.push(3, 0.75, -43.125);
  write_trace_csv(t, dir / "trace.csv");
  EXPECT_EQ(read_file(dir / "trace.csv"), "iter,seconds,elbo\n1,0,-50.25\n2,0.5,-45\n3,0.75,-43.125\n");
  const auto back = read_trace_csv(dir / "trace.csv");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.rows[2].elbo, -43.125);
}

TEST(Summary, ConstantDraws) {
  const Eigen::MatrixXd draws = Eigen::MatrixXd::Constant(20, 1, 2.5);
  const auto rows = summarize_draws(draws, {"theta"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].mean, 2.5);
  EXPECT_EQ(rows[0].sd, 0.0);
  EXPECT_EQ(rows[0].q5, 2.5);
  EXPECT_EQ(rows[0].q50, 2.5);
  EXPECT_EQ(rows[0].q95, 2.5);
}

TEST(Summary, RoundTripWithQuotedNames) {
  TempDir dir;
  RngStream rng(3);
  Eigen::MatrixXd draws(100, 2);
  for (Eigen::Index i = 0; i < draws.size(); ++i) draws.data()[i] = rng.normal();
  write_summary(draws, {"alpha", "theta[1,2]"}, dir / "summary.csv");
  const auto rows = read_summary(dir / "summary.csv");
  EXPECT_EQ(rows, summarize_draws(draws, {"alpha", "theta[1,2]"}));
  EXPECT_NEAR(rows[0].mean, mfvi::mean(draws.col(0)), 1e-15);
}

TEST(Results, UnwritablePathIsIoError) {
  ElboTrace t;
  t.push(1, 0.0, 1.0);
  EXPECT_THROW(write_trace_csv(t, "/nonexistent-dir/trace.csv"), IoError);
  EXPECT_THROW(write_summary(Eigen::MatrixXd::Ones(2, 1), {"x"}, "/nonexistent-dir/s.csv"), IoError);
  EXPECT_THROW(write_counts({1}, "/nonexistent-dir/c.txt"), IoError);
}

TEST(Counts, CommentsAndSeparators) {
  TempDir dir;
  write_file(dir / "c.txt", "# handout\n50, 47\n46\t52\n\n49\n");
  EXPECT_EQ(load_counts(dir / "c.txt"), (std::vector<std::int64_t>{50, 47, 46, 52, 49}));
  write_file(dir / "bad.txt", "3 -1\n");
  EXPECT_THROW(load_counts(dir / "bad.txt"), ParseError);
}

TEST(Stats, MovingAverageAndQuantiles) {
  EXPECT_EQ(moving_average({1, 2, 3, 4}, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  EXPECT_EQ(quantile_sorted({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile_sorted({0, 10}, 0.05), 0.5);
}
