#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "error.hpp"

namespace regvar {

/// Shortest round-trip decimal form; '.' separator regardless of locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

/// In-memory CSV table; written in one piece so partial files never appear.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { add_row_raw(header); }

  CsvTable& row(std::initializer_list<std::string> cells) { return add_row_raw(std::vector<std::string>(cells)); }

  CsvTable& add_row_raw(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InputError("csv row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) text_ << ',';
      text_ << cells[i];
    }
    text_ << '\n';
    return *this;
  }

  std::string str() const { return text_.str(); }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << text_.str();
  }

 private:
  std::size_t columns_;
  std::ostringstream text_;
};

}  // namespace regvar
