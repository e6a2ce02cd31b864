#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>
#include <fstream>
#include <string>
#include <vector>

#include "pomarl/contract.hpp"

namespace pomarl::harness {

// Shortest round-trip representation: reruns are byte-identical and
// re-parsing a CSV recovers the exact double that was written.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void write(const std::string& path) const {
    std::ofstream os(path);
    POMARL_CHECK_MSG(os.good(), "cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
      os << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
      POMARL_CHECK(row.size() == header.size());
      for (std::size_t i = 0; i < row.size(); ++i)
        os << fmt(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
  }

  static CsvTable read(const std::string& path) {
    std::ifstream is(path);
    POMARL_CHECK_MSG(is.good(), "cannot open: " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::size_t start = 0;
      while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (first) {
        t.header = cells;
        first = false;
      } else {
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells)
          row.push_back(c == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(c));
        t.rows.push_back(std::move(row));
      }
    }
    return t;
  }
};

// Population mean/std ignoring NaN entries (all-NaN stays NaN).
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double sum = 0, sumsq = 0;
  int n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum += x;
    sumsq += x * x;
    ++n;
  }
  if (n == 0)
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  return {mean, std::sqrt(var)};
}

}  // namespace pomarl::harness
