#pragma once

#include <functional>
#include <vector>

#include "rdslab/tangent.hpp"

namespace rdslab {

/**
 * Sampled graph u ↦ g(u) over [-radius, radius] in the coordinates of a chart.
 *
 * Nodes are uniform. Exact slopes are carried alongside values, and the graph
 * is evaluated by cubic Hermite interpolation. log_density, when present, is
 * the log of a density with respect to u carried along by transforms.
 */
struct UGraph {
  ChartFrame frame;
  double radius = 0.0;
  std::vector<double> values;
  std::vector<double> slopes;
  std::vector<double> log_density;
  double lip = 0.0;
  double dlip = 0.0;

  int nodes() const { return static_cast<int>(values.size()); }
  double spacing() const { return 2.0 * radius / (nodes() - 1); }
  double node(int i) const { return -radius + spacing() * i; }
  double eval(double u) const;
  double deriv(double u) const;
  double eval_log_density(double u) const;
  bool has_density() const { return !log_density.empty(); }
  /// Recompute lip (max of node slopes and secants) and dlip (max slope difference / spacing).
  void measure();
  double max_abs() const;
  double value_at_origin() const { return eval(0.0); }
  double slope_at_origin() const { return deriv(0.0); }

  static UGraph from_function(const ChartFrame& frame, double radius, int nodes,
                              const std::function<double(double)>& g, const std::function<double(double)>& dg);
  static UGraph zero(const ChartFrame& frame, double radius, int nodes = 129);
  static UGraph line(const ChartFrame& frame, double radius, double slope, int nodes = 129);
};

/// sup over the nodes of a of |a(u) − b(u)|, restricted to the common domain.
double graph_sup_distance(const UGraph& a, const UGraph& b);

/// |a − b|' = sup_{u ≠ 0} |a(u) − b(u)| / |u| over the nodes of a in the common domain.
double graph_prime_distance(const UGraph& a, const UGraph& b);

}  // namespace rdslab
