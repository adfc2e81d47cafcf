#pragma once

#include <string>
#include <vector>

#include "msvgd/harness.hpp"

namespace msvgd {

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // non-finite points break the line
};

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series);

// Diverged cells are drawn in a flat grey and labelled "div".
std::string heatmap_svg(const std::string& title, const Heatmap& map);

}  // namespace msvgd
