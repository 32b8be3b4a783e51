#include "rdslab/graph.hpp"

#include <algorithm>
#include <cmath>

#include "rdslab/errors.hpp"

namespace rdslab {

namespace {

// Interval index and local parameter t ∈ [0, 1] for u.
std::pair<int, double> locate(const UGraph& g, double u) {
  const double h = g.spacing();
  double s = (u + g.radius) / h;
  int j = static_cast<int>(std::floor(s));
  j = std::clamp(j, 0, g.nodes() - 2);
  return {j, s - j};
}

}  // namespace

double UGraph::eval(double u) const {
  const auto [j, t] = locate(*this, u);
  const double h = spacing();
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * values[j] + (t3 - 2 * t2 + t) * h * slopes[j] +
         (-2 * t3 + 3 * t2) * values[j + 1] + (t3 - t2) * h * slopes[j + 1];
}

double UGraph::deriv(double u) const {
  const auto [j, t] = locate(*this, u);
  const double h = spacing();
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * values[j] + (-6 * t2 + 6 * t) * values[j + 1]) / h +
         (3 * t2 - 4 * t + 1) * slopes[j] + (3 * t2 - 2 * t) * slopes[j + 1];
}

double UGraph::eval_log_density(double u) const {
  if (log_density.empty()) return 0.0;
  const auto [j, t] = locate(*this, u);
  return (1 - t) * log_density[j] + t * log_density[j + 1];
}

void UGraph::measure() {
  const double h = spacing();
  lip = 0.0;
  dlip = 0.0;
  for (int i = 0; i < nodes(); ++i) lip = std::max(lip, std::abs(slopes[i]));
  for (int i = 0; i + 1 < nodes(); ++i) {
    lip = std::max(lip, std::abs(values[i + 1] - values[i]) / h);
    dlip = std::max(dlip, std::abs(slopes[i + 1] - slopes[i]) / h);
  }
}

double UGraph::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

UGraph UGraph::from_function(const ChartFrame& frame, double radius, int nodes,
                             const std::function<double(double)>& g, const std::function<double(double)>& dg) {
  if (nodes < 7 || nodes % 2 == 0) throw DegenerateGraph("node count must be odd and >= 7");
  if (!(radius > 0.0)) throw DegenerateGraph("radius must be positive");
  UGraph out;
  out.frame = frame;
  out.radius = radius;
  out.values.resize(static_cast<std::size_t>(nodes));
  out.slopes.resize(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    const double u = out.node(i);
    out.values[i] = g(u);
    out.slopes[i] = dg(u);
  }
  out.measure();
  return out;
}

UGraph UGraph::zero(const ChartFrame& frame, double radius, int nodes) {
  return from_function(frame, radius, nodes, [](double) { return 0.0; }, [](double) { return 0.0; });
}

UGraph UGraph::line(const ChartFrame& frame, double radius, double slope, int nodes) {
  return from_function(frame, radius, nodes, [slope](double u) { return slope * u; },
                       [slope](double) { return slope; });
}

double graph_sup_distance(const UGraph& a, const UGraph& b) {
  const double r = std::min(a.radius, b.radius) * (1.0 + 1e-12);
  double d = 0.0;
  for (int i = 0; i < a.nodes(); ++i) {
    const double u = a.node(i);
    if (std::abs(u) > r) continue;
    d = std::max(d, std::abs(a.values[i] - b.eval(u)));
  }
  return d;
}

double graph_prime_distance(const UGraph& a, const UGraph& b) {
  const double r = std::min(a.radius, b.radius) * (1.0 + 1e-12);
  double d = 0.0;
  for (int i = 0; i < a.nodes(); ++i) {
    const double u = a.node(i);
    if (std::abs(u) > r || std::abs(u) < 1e-300) continue;
    d = std::max(d, std::abs(a.values[i] - b.eval(u)) / std::abs(u));
  }
  return d;
}

}  // namespace rdslab
