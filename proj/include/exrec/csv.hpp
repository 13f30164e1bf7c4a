#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "exrec/error.hpp"

namespace exrec::csv {

/// Splits one CSV record on commas. No quoting support beyond stripping a
/// single pair of surrounding double quotes from each cell.
inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
    cells.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Reads one line, dropping a trailing '\r'. Returns false at end of input.
inline bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline double parse_real(std::string_view cell, std::size_t row, std::string_view column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc{} || ptr != last) {
    throw Error(ErrorKind::NonNumericCell,
                "row " + std::to_string(row) + ", column " + std::string(column) + ": '" + std::string(cell) + "'");
  }
  return value;
}

/// Fixed six-decimal rendering used by every CSV this library writes.
inline void append_fixed6(std::string& out, double value) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.6f", value);
  out.append(buf, static_cast<std::size_t>(n));
}

inline std::string fixed(double value, int decimals) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return {buf, static_cast<std::size_t>(n)};
}

/// Identifiers written into a cell must not break the record structure.
inline void check_cell_text(std::string_view text, std::string_view what) {
  if (text.find_first_of(",\n\r\"") != std::string_view::npos) {
    throw Error(ErrorKind::InvalidField, std::string(what) + " contains a reserved character: '" + std::string(text) + "'");
  }
}

inline void write_or_throw(std::ostream& out, std::string_view text) {
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::SinkFailure, "write failed");
}

}  // namespace exrec::csv
