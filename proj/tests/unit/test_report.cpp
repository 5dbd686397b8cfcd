#include <gtest/gtest.h>

#include "flowlag/report.hpp"

using namespace flowlag;

TEST(Report, CsvLayout) {
  CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  t.add_row({"x", "y"});
  EXPECT_EQ(t.str(), "a,b\n1,2\nx,y\n");
  EXPECT_THROW(t.add_row({"only one"}), std::invalid_argument);
}

TEST(Report, NumbersRoundTrip) {
  EXPECT_EQ(format_number(1.05), "1.05");
  EXPECT_EQ(format_number(0.0), "0");
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Report, FldTableHasOneRowPerCheckpoint) {
  FldReport r;
  r.times = {0.2, 1.0};
  r.values = {3.0, 0.5};
  r.std_errors = {0.25, 0.125};
  EXPECT_EQ(fld_table(r).str(), "t,value,stderr\n0.2,3,0.25\n1,0.5,0.125\n");
  r.std_errors.clear();
  EXPECT_EQ(fld_table(r).str(), "t,value,stderr\n0.2,3,nan\n1,0.5,nan\n");
}

TEST(Report, SvgChart) {
  const std::string svg = svg_line_chart("title", "t", "norm", {{"s", {0, 1}, {1, 2}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
  EXPECT_NE(svg.find("title"), std::string::npos);
}
