#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace modeltrust {

// Column-aligned plain text table. The first row is the header and is
// underlined with dashes.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }

  void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void print(std::ostream& os) const {
    std::vector<std::size_t> width;
    for (const auto& row : rows_) {
      if (row.size() > width.size()) width.resize(row.size(), 0);
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    auto emit = [&](const std::vector<std::string>& row) {
      std::string line;
      for (std::size_t i = 0; i < row.size(); ++i) {
        line += row[i];
        if (i + 1 < row.size()) line += std::string(width[i] - row[i].size() + 2, ' ');
      }
      os << line << '\n';
    };
    emit(rows_.front());
    std::string rule;
    for (std::size_t i = 0; i < width.size(); ++i) {
      rule += std::string(width[i], '-');
      if (i + 1 < width.size()) rule += "  ";
    }
    os << rule << '\n';
    for (std::size_t r = 1; r < rows_.size(); ++r) emit(rows_[r]);
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

inline std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace modeltrust
