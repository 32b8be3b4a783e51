#pragma once

#include <string>
#include <vector>

namespace rdslab::svg {

struct Polyline {
  std::vector<double> x, y;
  std::string color = "#1f4e79";
  double width = 1.0;
};

/// Row-major grid (row 0 at the bottom) drawn as a heatmap over the unit square.
std::string heatmap(const std::vector<std::vector<double>>& grid, const std::string& title);

/// Curves in data coordinates with axes fitted to their bounding box.
std::string lines(const std::vector<Polyline>& curves, const std::string& title, const std::string& xlabel,
                  const std::string& ylabel);

struct HistogramPanel {
  std::string title;
  std::vector<double> edges;    ///< bins + 1 edges
  std::vector<double> heights;  ///< empirical density per bin
  std::vector<double> curve_x, curve_y;
};

/// Grid of histogram-vs-curve panels, `columns` per row.
std::string histogram_panels(const std::vector<HistogramPanel>& panels, int columns);

}  // namespace rdslab::svg
