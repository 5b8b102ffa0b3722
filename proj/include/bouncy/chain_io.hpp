#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bouncy/error.hpp"
#include "bouncy/types.hpp"

namespace bouncy {

/// Shortest form that reads back to the same double.
inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// Header x1..xd, one row per stored sample, LF line endings.
inline void write_chain_csv(std::ostream& out, const Mat& samples) {
  for (Index j = 0; j < samples.cols(); ++j) out << (j ? ",x" : "x") << j + 1;
  out << '\n';
  for (Index i = 0; i < samples.rows(); ++i) {
    for (Index j = 0; j < samples.cols(); ++j) {
      if (j) out << ',';
      out << format_double(samples(i, j));
    }
    out << '\n';
  }
}

inline void write_chain_csv(const std::string& path, const Mat& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot open " + path + " for writing");
  write_chain_csv(out, samples);
  if (!out) throw Error(ErrorKind::InvalidArgument, "failed writing " + path);
}

inline Mat read_chain_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw Error(ErrorKind::EmptyFile, "chain file has no header");
  Index cols = 1;
  for (char c : line) cols += (c == ',');
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Index col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      // from_chars keeps subnormals that stod would reject as out of range.
      double value = 0.0;
      const char* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
      if (ec != std::errc() || ptr != end) {
        throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(col));
      }
      values.push_back(value);
    }
    if (col != cols) throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + " has " + std::to_string(col) +
                                                            " columns, expected " + std::to_string(cols));
  }
  const Index rows = static_cast<Index>(values.size()) / cols;
  if (rows == 0) throw Error(ErrorKind::EmptyFile, "chain file has no samples");
  Mat out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return out;
}

inline Mat read_chain_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
  return read_chain_csv(in);
}

}  // namespace bouncy
