#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mfvi/errors.hpp"
#include "mfvi/io/text.hpp"
#include "mfvi/optimize.hpp"
#include "mfvi/stats.hpp"

namespace mfvi {

inline void write_trace_csv(const ElboTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iter,seconds,elbo\n";
  for (const auto& r : trace.rows)
    out << r.iteration << ',' << format_double(r.seconds) << ',' << format_double(r.elbo) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline ElboTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  ElboTrace t;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (!header) {
      if (f != std::vector<std::string>{"iter", "seconds", "elbo"})
        throw ParseError("trace header must be iter,seconds,elbo", lineno);
      header = true;
      continue;
    }
    if (f.size() != 3) throw ParseError("expected 3 fields", lineno);
    t.push(static_cast<int>(parse_int(f[0], lineno)), parse_double(f[1], lineno), parse_double(f[2], lineno));
  }
  if (!header) throw ParseError("missing trace header");
  return t;
}

struct SummaryRow {
  std::string param;
  double mean, sd, q5, q50, q95;
  bool operator==(const SummaryRow&) const = default;
};

/// Per-column summary of draws (one draw per row).
inline std::vector<SummaryRow> summarize_draws(const Eigen::MatrixXd& draws, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != draws.cols())
    throw ParameterError("summarize_draws: one name per column required");
  if (draws.rows() < 1) throw ParameterError("summarize_draws: no draws");
  std::vector<SummaryRow> rows;
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    const Eigen::VectorXd c = draws.col(j);
    std::vector<double> s(c.data(), c.data() + c.size());
    std::sort(s.begin(), s.end());
    const double m = mean(c);
    // exact zero spread for constant columns
    const double d = s.front() == s.back() ? 0.0 : sd(c);
    rows.push_back({names[static_cast<std::size_t>(j)], s.front() == s.back() ? s.front() : m, d,
                    quantile_sorted(s, 0.05), quantile_sorted(s, 0.50), quantile_sorted(s, 0.95)});
  }
  return rows;
}

inline void write_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "param,mean,sd,q5,q50,q95\n";
  for (const auto& r : rows)
    out << csv_field(r.param) << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ',' << format_double(r.q5)
        << ',' << format_double(r.q50) << ',' << format_double(r.q95) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_summary(const Eigen::MatrixXd& draws, const std::vector<std::string>& names,
                          const std::filesystem::path& path) {
  write_summary(summarize_draws(draws, names), path);
}

inline std::vector<SummaryRow> read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<SummaryRow> rows;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (!header) {
      if (f != std::vector<std::string>{"param", "mean", "sd", "q5", "q50", "q95"})
        throw ParseError("summary header must be param,mean,sd,q5,q50,q95", lineno);
      header = true;
      continue;
    }
    if (f.size() != 6) throw ParseError("expected 6 fields", lineno);
    rows.push_back({f[0], parse_double(f[1], lineno), parse_double(f[2], lineno), parse_double(f[3], lineno),
                    parse_double(f[4], lineno), parse_double(f[5], lineno)});
  }
  if (!header) throw ParseError("missing summary header");
  return rows;
}

}  // namespace mfvi
