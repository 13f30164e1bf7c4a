#pragma once

// `key = value` text files. '#' starts a comment; blank lines are ignored.

#include <charconv>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "exrec/csv.hpp"
#include "exrec/error.hpp"

namespace exrec::config {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<Entry> parse(std::istream& in) {
  std::vector<Entry> entries;
  std::string line;
  std::size_t row = 0;
  while (csv::read_line(in, line)) {
    ++row;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidField, "line " + std::to_string(row) + ": expected key = value");
    Entry e{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), row};
    if (e.key.empty()) throw Error(ErrorKind::InvalidField, "line " + std::to_string(row) + ": empty key");
    for (const auto& prior : entries) {
      if (prior.key == e.key) throw Error(ErrorKind::InvalidField, "line " + std::to_string(row) + ": duplicate key '" + e.key + "'");
    }
    entries.push_back(std::move(e));
  }
  if (in.bad()) throw Error(ErrorKind::SourceFailure, "read failed");
  return entries;
}

inline double as_real(const Entry& e) { return csv::parse_real(e.value, e.line, e.key); }

inline long as_integer(const Entry& e) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (e.value.empty() || ec != std::errc{} || ptr != e.value.data() + e.value.size()) {
    throw Error(ErrorKind::InvalidField, "line " + std::to_string(e.line) + ": " + e.key + " must be an integer, got '" + e.value + "'");
  }
  return v;
}

inline bool as_bool(const Entry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  throw Error(ErrorKind::InvalidField, "line " + std::to_string(e.line) + ": " + e.key + " must be true or false");
}

inline void reject_unknown(const std::vector<Entry>& entries, const std::set<std::string, std::less<>>& known) {
  for (const auto& e : entries) {
    if (!known.contains(e.key)) throw Error(ErrorKind::InvalidField, "line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
  }
}

}  // namespace exrec::config
