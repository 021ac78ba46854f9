#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "starnoma/common.hpp"

namespace starnoma {

using CsvValue = std::variant<std::int64_t, double, std::string>;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<CsvValue>> rows;
};

namespace detail {

inline std::string format_value(const CsvValue& v) {
  if (std::holds_alternative<std::int64_t>(v)) return std::to_string(std::get<std::int64_t>(v));
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", std::get<double>(v));
  return buf;
}

}  // namespace detail

// UTF-8, header row, fixed column order, 12 significant digits; byte output
// is a pure function of the records.
inline void emit_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << detail::format_value(row[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

}  // namespace starnoma
