#ifndef EXTRUSION_CSV_HPP
#define EXTRUSION_CSV_HPP

/**
 * @file csv.hpp
 * @brief CSV emission with a fixed number format: 12 significant digits,
 *        '.' as decimal separator regardless of locale, LF line endings.
 */

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "extrusion/error.hpp"
#include "extrusion/fields.hpp"

namespace extrusion {

/// "%.12g" with the decimal separator forced to '.'.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  std::string s(buf);
  for (char& c : s) {
    if (c == ',') c = '.';
  }
  return s;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<std::string_view> header)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw Error(ErrorKind::Argument, "cannot open " + path + " for writing");
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  CsvWriter& cell(double v) { return cell(format_number(v)); }

  CsvWriter& cell(std::string_view s) {
    if (open_row_) out_ << ',';
    out_ << s;
    open_row_ = true;
    return *this;
  }

  void end_row() {
    out_ << '\n';
    open_row_ = false;
  }

  void row(std::initializer_list<double> values) {
    for (double v : values) cell(v);
    end_row();
  }

  void close() {
    out_.close();
    if (!out_) throw Error(ErrorKind::Argument, "failed writing " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
  bool open_row_ = false;
};

/// Rows t,x,fp,provenance of a solution field.
inline void write_field_csv(const std::string& path, const SolutionField& f) {
  CsvWriter w(path, {"t", "x", "fp", "provenance"});
  for (std::size_t i = 0; i < f.nt(); ++i) {
    for (std::size_t j = 0; j < f.nx(); ++j) {
      w.cell(f.t_grid()[i]).cell(f.x_grid()[j]).cell(f.at(i, j)).cell(to_string(f.origin(i, j)));
      w.end_row();
    }
  }
  w.close();
}

}  // namespace extrusion

#endif  // EXTRUSION_CSV_HPP
