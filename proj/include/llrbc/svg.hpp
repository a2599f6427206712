#pragma once

#include <string>
#include <vector>

namespace llrbc {

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartMarker {
  double x = 0;
  std::string label;
};

// Self-contained polyline chart. Markers draw labeled vertical reference lines
// (task boundaries).
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series,
                          const std::vector<ChartMarker>& markers = {});

}  // namespace llrbc
