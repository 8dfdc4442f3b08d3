#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mfvi/distributions.hpp"
#include "mfvi/errors.hpp"
#include "mfvi/io/text.hpp"
#include "mfvi/rng.hpp"
#include "mfvi/special.hpp"

namespace mfvi {

/// Family income (in $1000) and the wife's labor-force participation.
struct LaborDataset {
  std::vector<double> income;
  std::vector<int> participation;

  std::size_t size() const noexcept { return income.size(); }
  bool operator==(const LaborDataset&) const = default;
};

namespace detail {

inline int parse_participation(std::string s, std::size_t row) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "yes") return 1;
  if (s == "0" || s == "no") return 0;
  throw ParseError("unknown Participation value '" + s + "' in row " + std::to_string(row));
}

}  // namespace detail

/// Reads a CSV with a header naming FamilyIncome and Participation (other
/// columns are ignored). Participation accepts 0/1 or no/yes. Row numbers in
/// errors count data rows from 1.
inline LaborDataset load_labor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) header = split_csv_line(line);
  }
  if (header.empty()) throw ParseError("empty file: " + path.string());
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column " + name, lineno);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ci = col("FamilyIncome");
  const std::size_t cp = col("Participation");

  LaborDataset ds;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++row;
    const auto f = split_csv_line(line);
    if (f.size() <= std::max(ci, cp))
      throw ParseError("row " + std::to_string(row) + " has too few fields", lineno);
    double x;
    try {
      x = parse_double(f[ci]);
    } catch (const ParseError&) {
      throw ParseError("non-numeric FamilyIncome '" + f[ci] + "' in row " + std::to_string(row), lineno);
    }
    if (!std::isfinite(x)) throw ParseError("non-finite FamilyIncome in row " + std::to_string(row), lineno);
    int y;
    try {
      y = detail::parse_participation(f[cp], row);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    ds.income.push_back(x);
    ds.participation.push_back(y);
  }
  return ds;
}

inline void write_labor_csv(const LaborDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "FamilyIncome,Participation\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    out << format_double(ds.income[i]) << ',' << (ds.participation[i] ? "yes" : "no") << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

/// PSID-shaped synthetic data: income ~ Gamma(3, 0.149) (mean about 20, sd
/// about 11.6, right-skewed like the 1976 sample), participation ~
/// Bernoulli(logistic(alpha + beta * income)).
inline LaborDataset generate_synthetic_labor(std::size_t n, double alpha, double beta, RngStream& rng) {
  if (n < 1) throw ParameterError("generate_synthetic_labor: n must be >= 1");
  const Gamma income_dist(3.0, 0.149);
  LaborDataset ds;
  ds.income.reserve(n);
  ds.participation.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // round to cents of a thousand dollars so files round-trip exactly
    const double x = std::round(draw(income_dist, rng) * 1000.0) / 1000.0;
    ds.income.push_back(x);
    ds.participation.push_back(rng.uniform() < logistic(alpha + beta * x) ? 1 : 0);
  }
  return ds;
}

/// The dataset stacked `times` times (the speed benchmark's replication).
inline LaborDataset replicate(const LaborDataset& ds, std::size_t times) {
  LaborDataset out;
  for (std::size_t t = 0; t < times; ++t) {
    out.income.insert(out.income.end(), ds.income.begin(), ds.income.end());
    out.participation.insert(out.participation.end(), ds.participation.begin(), ds.participation.end());
  }
  return out;
}

}  // namespace mfvi
