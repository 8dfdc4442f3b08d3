#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mfvi/distributions.hpp"
#include "mfvi/errors.hpp"
#include "mfvi/io/text.hpp"
#include "mfvi/rng.hpp"

namespace mfvi {

/// Sparse document-term counts. Indices are 0-based in memory and 1-based on disk.
struct DocTermMatrix {
  struct Triplet {
    std::size_t doc;
    std::size_t word;
    std::int64_t count;
    bool operator==(const Triplet&) const = default;
  };

  std::size_t num_docs = 0;
  std::vector<std::string> vocab;
  std::vector<Triplet> triplets;

  std::size_t vocab_size() const noexcept { return vocab.size(); }

  std::int64_t total_words() const {
    std::int64_t n = 0;
    for (const auto& t : triplets) n += t.count;
    return n;
  }

  /// Throws ValidationError on out-of-range indices, duplicate pairs or counts < 1.
  void validate() const {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& t : triplets) {
      if (t.doc >= num_docs) throw ValidationError("document index out of range: " + std::to_string(t.doc + 1));
      if (t.word >= vocab.size()) throw ValidationError("word index out of range: " + std::to_string(t.word + 1));
      if (t.count < 1) throw ValidationError("counts must be >= 1");
      if (!seen.emplace(t.doc, t.word).second)
        throw ValidationError("duplicate (doc, word) pair (" + std::to_string(t.doc + 1) + ", " +
                              std::to_string(t.word + 1) + ")");
    }
  }

  /// Number of documents containing each term.
  std::vector<std::size_t> document_frequency() const {
    std::vector<std::size_t> df(vocab.size(), 0);
    for (const auto& t : triplets) ++df[t.word];
    return df;
  }

  bool operator==(const DocTermMatrix&) const = default;
};

inline constexpr const char* kTripletFile = "triplets.csv";
inline constexpr const char* kVocabFile = "vocab.txt";

/// Reads `dir/triplets.csv` (header doc,word,count; 1-based indices) and
/// `dir/vocab.txt` (one term per line). The document count is the largest
/// document index seen unless a `# docs=M` comment line precedes the header.
inline DocTermMatrix load_dtm(const std::filesystem::path& dir) {
  DocTermMatrix dtm;
  {
    std::ifstream in(dir / kVocabFile);
    if (!in) throw IoError("cannot open " + (dir / kVocabFile).string());
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      dtm.vocab.push_back(line);
    }
  }
  std::ifstream in(dir / kTripletFile);
  if (!in) throw IoError("cannot open " + (dir / kTripletFile).string());
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::size_t declared_docs = 0;
  std::size_t max_doc = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("docs=");
      if (pos != std::string::npos) declared_docs = parse_size(line.substr(pos + 5), lineno);
      continue;
    }
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 3 || fields[0] != "doc" || fields[1] != "word" || fields[2] != "count")
        throw ParseError("triplet header must be doc,word,count", lineno);
      continue;
    }
    if (fields.size() != 3) throw ParseError("expected 3 fields", lineno);
    const std::size_t d = parse_size(fields[0], lineno);
    const std::size_t w = parse_size(fields[1], lineno);
    const auto c = parse_int(fields[2], lineno);
    if (d < 1 || w < 1) throw ValidationError("indices are 1-based (line " + std::to_string(lineno) + ")");
    dtm.triplets.push_back({d - 1, w - 1, c});
    max_doc = std::max(max_doc, d);
  }
  if (!header_seen) throw ParseError("missing triplet header");
  dtm.num_docs = std::max(declared_docs, max_doc);
  dtm.validate();
  return dtm;
}

inline void write_dtm(const DocTermMatrix& dtm, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  {
    std::ofstream out(dir / kVocabFile);
    if (!out) throw IoError("cannot write " + (dir / kVocabFile).string());
    for (const auto& v : dtm.vocab) out << v << '\n';
  }
  std::ofstream out(dir / kTripletFile);
  if (!out) throw IoError("cannot write " + (dir / kTripletFile).string());
  out << "# docs=" << dtm.num_docs << '\n' << "doc,word,count\n";
  for (const auto& t : dtm.triplets) out << t.doc + 1 << ',' << t.word + 1 << ',' << t.count << '\n';
  if (!out) throw IoError("write failed: " + (dir / kTripletFile).string());
}

/// Drop documents with no word instances, renumbering the rest. Returns the
/// original index of every kept document.
inline std::vector<std::size_t> drop_empty_documents(DocTermMatrix& dtm, bool warn = true) {
  std::vector<bool> used(dtm.num_docs, false);
  for (const auto& t : dtm.triplets) used[t.doc] = true;
  std::vector<std::size_t> new_index(dtm.num_docs, 0), kept;
  for (std::size_t d = 0; d < dtm.num_docs; ++d)
    if (used[d]) {
      new_index[d] = kept.size();
      kept.push_back(d);
    }
  if (kept.size() != dtm.num_docs) {
    if (warn)
      std::cerr << "warning: dropping " << dtm.num_docs - kept.size() << " empty document(s)\n";
    for (auto& t : dtm.triplets) t.doc = new_index[t.doc];
    dtm.num_docs = kept.size();
  }
  return kept;
}

/// Keep term j iff its sparsity 1 - df_j / M is at most `sparsity`. The
/// vocabulary is renumbered and documents left empty are dropped with a warning.
inline DocTermMatrix prune_sparse_terms(const DocTermMatrix& dtm, double sparsity) {
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw ParameterError("sparsity must lie in (0, 1)");
  const auto df = dtm.document_frequency();
  const double m = static_cast<double>(dtm.num_docs);
  std::vector<long> remap(dtm.vocab.size(), -1);
  DocTermMatrix out;
  out.num_docs = dtm.num_docs;
  for (std::size_t j = 0; j < dtm.vocab.size(); ++j) {
    // compare counts rather than rounded fractions so the boundary is exact
    // (keep iff M - df <= sparsity * M)
    const double sparse_docs = m - static_cast<double>(df[j]);
    if (sparse_docs <= sparsity * m * (1.0 + 1e-12)) {
      remap[j] = static_cast<long>(out.vocab.size());
      out.vocab.push_back(dtm.vocab[j]);
    }
  }
  if (out.vocab.empty()) throw ValidationError("pruning removed every term");
  for (const auto& t : dtm.triplets)
    if (remap[t.word] >= 0) out.triplets.push_back({t.doc, static_cast<std::size_t>(remap[t.word]), t.count});
  drop_empty_documents(out);
  return out;
}

struct SyntheticCorpus {
  DocTermMatrix dtm;
  Eigen::MatrixXd theta;  // M x K document-topic proportions
  Eigen::MatrixXd phi;    // K x V topic-word distributions
};

/// Forward simulation of LDA: theta_m ~ Dir(alpha), phi_k ~ Dir(beta_conc),
/// then for each of doc_len words z ~ Cat(theta_m), w ~ Cat(phi_z).
inline SyntheticCorpus generate_synthetic_corpus(std::size_t k, std::size_t m, std::size_t v, std::size_t doc_len,
                                                 double alpha, double beta_conc, RngStream& rng) {
  if (k < 1 || m < 1 || v < 2 || doc_len < 1 || !(alpha > 0) || !(beta_conc > 0))
    throw ParameterError("generate_synthetic_corpus: parameters must be positive (V >= 2)");
  SyntheticCorpus c;
  const auto K = static_cast<Eigen::Index>(k), M = static_cast<Eigen::Index>(m), V = static_cast<Eigen::Index>(v);
  c.phi.resize(K, V);
  const auto word_prior = Dirichlet::symmetric(V, beta_conc);
  for (Eigen::Index t = 0; t < K; ++t) c.phi.row(t) = draw(word_prior, rng).transpose();
  c.theta.resize(M, K);
  for (Eigen::Index d = 0; d < M; ++d) {
    if (K == 1)
      c.theta(d, 0) = 1.0;
    else
      c.theta.row(d) = draw(Dirichlet::symmetric(K, alpha), rng).transpose();
  }
  c.dtm.num_docs = m;
  for (std::size_t j = 0; j < v; ++j) c.dtm.vocab.push_back("w" + std::to_string(j + 1));
  std::vector<std::int64_t> counts(v);
  for (Eigen::Index d = 0; d < M; ++d) {
    std::fill(counts.begin(), counts.end(), 0);
    const Categorical topic_dist(c.theta.row(d).transpose() / c.theta.row(d).sum());
    std::vector<Categorical> word_dists;
    for (std::size_t n = 0; n < doc_len; ++n) {
      const auto z = static_cast<Eigen::Index>(draw(topic_dist, rng));
      const Eigen::VectorXd row = c.phi.row(z).transpose();
      const Categorical wd(row / row.sum());
      ++counts[static_cast<std::size_t>(draw(wd, rng))];
    }
    for (std::size_t j = 0; j < v; ++j)
      if (counts[j] > 0) c.dtm.triplets.push_back({static_cast<std::size_t>(d), j, counts[j]});
  }
  return c;
}

}  // namespace mfvi
