#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainlab {

// Shortest round-trip decimal for a double (std::to_chars without precision).
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Column-ordered CSV with '\n' line endings; byte-identical for identical
// inputs.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary), ncols_(columns.size()) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  class Row {
   public:
    explicit Row(CsvWriter& w) : w_(w) {}
    ~Row() { w_.end_row(cells_); }
    Row& operator<<(double v) {
      cells_.push_back(format_double(v));
      return *this;
    }
    Row& operator<<(int v) {
      cells_.push_back(std::to_string(v));
      return *this;
    }
    Row& operator<<(long v) {
      cells_.push_back(std::to_string(v));
      return *this;
    }
    Row& operator<<(const std::string& v) {
      cells_.push_back(v);
      return *this;
    }
    Row& operator<<(const char* v) {
      cells_.emplace_back(v);
      return *this;
    }

   private:
    CsvWriter& w_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }

 private:
  void end_row(const std::vector<std::string>& cells) {
    if (cells.size() != ncols_)
      throw std::runtime_error("CsvWriter: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t ncols_;
};

} // namespace chainlab
