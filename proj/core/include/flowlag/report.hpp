#pragma once

#include <string>
#include <vector>

#include "flowlag/diagnostics.hpp"

namespace flowlag {

// Minimal CSV table: header plus rows of already formatted cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells);
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Shortest round-trippable decimal form.
std::string format_number(double value);

CsvTable norm_profile_table(const NormProfile& profile);
CsvTable fld_table(const FldReport& report);

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained SVG line chart.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<LineSeries>& series);

}  // namespace flowlag
