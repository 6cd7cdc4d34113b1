#pragma once

#include <span>
#include <string>
#include <vector>

namespace fdgnn {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

// Plain SVG line chart with axes, ticks and a legend.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

// Actual (red) vs predicted (green) travel-time densities over the bin centers.
std::string pdf_comparison_svg(const std::string& title, std::span<const double> actual,
                               std::span<const double> predicted);

}  // namespace fdgnn
