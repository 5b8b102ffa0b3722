#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bouncy/error.hpp"
#include "bouncy/types.hpp"

namespace bouncy {

struct Design {
  Mat x;
  Vec y;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& text, std::size_t row, std::size_t col) {
  const std::string cell = trim(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size()) {
    throw Error(ErrorKind::ParseError,
                "row " + std::to_string(row) + ", column " + std::to_string(col) + ": not a number: '" + cell + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::ParseError,
                "row " + std::to_string(row) + ", column " + std::to_string(col) + ": non-finite value");
  }
  return value;
}

}  // namespace detail

/// Reads a regression design with header "y,x1,...,xd". Rows and columns in
/// error messages are 1-based and count the header as row 1.
inline Design parse_design_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) {
    throw Error(ErrorKind::EmptyFile, "design file is empty");
  }
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || detail::trim(header[0]) != "y") {
    throw Error(ErrorKind::ParseError, "row 1: header must be y,x1,...,xd");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (detail::trim(header[j]) != "x" + std::to_string(j)) {
      throw Error(ErrorKind::ParseError,
                  "row 1, column " + std::to_string(j + 1) + ": expected header x" + std::to_string(j));
    }
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != d + 1) {
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": expected " + std::to_string(d + 1) +
                                             " columns, found " + std::to_string(cells.size()));
    }
    const double y = detail::parse_cell(cells[0], row, 1);
    if (y != 0.0 && y != 1.0) {
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ", column 1: label must be 0 or 1");
    }
    labels.push_back(y);
    for (std::size_t j = 1; j <= d; ++j) values.push_back(detail::parse_cell(cells[j], row, j + 1));
  }
  if (labels.empty()) throw Error(ErrorKind::EmptyFile, "design file has no data rows");
  Design out{Mat(static_cast<Index>(labels.size()), static_cast<Index>(d)), Vec(static_cast<Index>(labels.size()))};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.y[static_cast<Index>(i)] = labels[i];
    for (std::size_t j = 0; j < d; ++j) out.x(static_cast<Index>(i), static_cast<Index>(j)) = values[i * d + j];
  }
  return out;
}

inline Design load_design_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open design file " + path);
  return parse_design_csv(in);
}

}  // namespace bouncy
