#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fpaforge/csv.hpp"

namespace fpaforge::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 800;
  int height = 480;
};

// Multi-series line chart with markers and a legend.
std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series);

struct Bar {
  std::string label;
  double value = 0.0;
};

std::string bar_chart_svg(const ChartSpec& spec, const std::vector<Bar>& bars);

// Round tick positions covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 6);

// One series per distinct `group` value (a single series when group is empty).
std::vector<Series> series_from_table(const Table& table, const std::string& x, const std::string& y,
                                      const std::string& group = {});
std::vector<Bar> bars_from_table(const Table& table, const std::string& label, const std::string& value);

std::string xml_escape(const std::string& s);

void write_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace fpaforge::plot
