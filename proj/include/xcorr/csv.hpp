#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xcorr/common.hpp"
#include "xcorr/correlators.hpp"

namespace xcorr {

// Numeric CSV cells carry 17 significant digits, enough to reproduce every
// double bit-exactly on re-read.
inline std::string format_sig17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> comments;  // emitted as "# ..." lines, config echo
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline bool csv_needs_quoting(std::string_view field) {
  return field.find_first_of(",\"\n") != std::string_view::npos;
}

inline std::string csv_quote(std::string_view field) {
  if (!csv_needs_quoting(field)) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_line(std::ostream& out,
                           const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_quote(fields[i]);
  }
  out << '\n';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace detail

// Comments first, then the header line, then data rows; newline-terminated.
inline void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& comment : table.comments) out << "# " << comment << '\n';
  detail::write_csv_line(out, table.header);
  for (const auto& row : table.rows) detail::write_csv_line(out, row);
}

inline void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_file: cannot open '" + path + "'");
  write_csv(out, table);
  if (!out) throw std::runtime_error("write_csv_file: write failed for '" + path + "'");
}

// Reads a CSV written by write_csv. '#' lines anywhere are collected as
// comments (leading "# " stripped); the first non-comment line is the
// header.
inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') {
      std::size_t start = 1;
      if (start < line.size() && line[start] == ' ') ++start;
      table.comments.push_back(line.substr(start));
      continue;
    }
    if (line.empty()) continue;
    if (!have_header) {
      table.header = detail::split_csv_line(line);
      have_header = true;
    } else {
      table.rows.push_back(detail::split_csv_line(line));
    }
  }
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv_file: cannot open '" + path + "'");
  return read_csv(in);
}

// Two-column numeric read for (x, y) sample files.
inline std::pair<std::vector<double>, std::vector<double>> read_pairs(
    const std::string& path) {
  const CsvTable table = read_csv_file(path);
  std::pair<std::vector<double>, std::vector<double>> out;
  out.first.reserve(table.rows.size());
  out.second.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.size() != 2)
      throw parse_error("read_pairs: expected 2 columns in '" + path + "'");
    out.first.push_back(detail::parse_number(row[0], "pair file"));
    out.second.push_back(detail::parse_number(row[1], "pair file"));
  }
  if (out.first.empty())
    throw parse_error("read_pairs: no data rows in '" + path + "'");
  return out;
}

}  // namespace xcorr
