#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mfvi/errors.hpp"
#include "mfvi/io/text.hpp"

namespace mfvi {

/// Non-negative integer counts separated by commas, whitespace or newlines.
/// Lines starting with '#' are comments.
inline std::vector<std::int64_t> load_counts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::int64_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty() && trim(line).front() == '#') continue;
    for (char& c : line)
      if (c == ',' || c == '\t' || c == '\r') c = ' ';
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto b = line.find_first_not_of(' ', pos);
      if (b == std::string::npos) break;
      const auto e = line.find(' ', b);
      const auto v = parse_int(std::string_view(line).substr(b, e == std::string::npos ? e : e - b), lineno);
      if (v < 0) throw ParseError("counts must be non-negative", lineno);
      out.push_back(v);
      pos = e == std::string::npos ? line.size() : e;
    }
  }
  return out;
}

inline void write_counts(const std::vector<std::int64_t>& counts, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (auto c : counts) out << c << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mfvi
