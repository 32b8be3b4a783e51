#pragma once

#include <limits>
#include <string>
#include <vector>

#include "rdslab/graph.hpp"
#include "rdslab/tangent.hpp"

namespace rdslab {

struct TransformOptions {
  double cone_K = 0.1;        ///< slope cap of the regime (1/10 standard, K0 slanted)
  double lip_tolerance = 1e-6;
  bool check_cone = true;
  /// Shrink the destination domain to the part covered by the image instead of failing.
  bool truncate_to_image = false;
  /// Bound on |𝒯g|; non-positive means the destination frame's chart radius.
  double cs_bound = 0.0;
  int nodes = 129;
};

/// One graph transform: graph 𝒯g ⊂ f̃(graph g), over [-dst_radius, dst_radius] in dst_frame.
UGraph graph_transform_step(const ChartFrame& dst_frame, const ChartMap& conn, const UGraph& g,
                            double dst_radius, const TransformOptions& opts = {});

struct TransformSchedule {
  double K0 = 0.5;
  double K_bar = 0.1;
  int m0 = 0;
  int m1 = 0;
  double r0 = 0.0;      ///< domain factor during the slope-reduction phase
  double r1_bar = 0.0;  ///< working domain factor
};

/// m0 = ⌈2 log(K0/K̄0)/λ⌉ and m1 from the growth needed to reach r̄1 from r0.
TransformSchedule make_schedule(double K0, double K_bar, double lambda, double delta2, double r0, double r1_bar);

struct SlantedResult {
  std::vector<UGraph> graphs;     ///< g_1 … g_n; g_k lives at time −n + k
  std::vector<double> radii;      ///< scheduled domain radius of each g_k
  std::vector<bool> full_domain;  ///< whether g_k spans its scheduled domain
  std::vector<double> log_unstable_stretch;
};

/**
 * g_1 … g_n from g0 at the start point (time −n) forward to time 0.
 *
 * g0's node data is read as chart coordinates at the start point; its frame is
 * replaced by the orbit frame there. Radii are r0 (k ≤ m0) and then r̄1, each
 * divided by l at that time for Lyapunov frames and used as is for geometric ones.
 */
SlantedResult iterate_slanted_transform(const MapFamily& f, const NoisePath& path,
                                        const TorusPoint& start_point_at_time_minus_n,
                                        const TransformSchedule& schedule, const UGraph& g0, int n,
                                        const ChartParams& params, const FrameOptions& frames = {});

struct UnstableResult {
  UGraph graph;
  double last_increment = 0.0;  ///< |𝟎ⁿ − 𝟎ⁿ⁻¹|'
};

/// Time-0 graph obtained from the zero graph at time −n_past. For Lyapunov frames
/// the domain at time t is radius / l(t); for geometric frames it is radius.
UnstableResult local_unstable_manifold(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n_past,
                                       double radius, const ChartParams& params, const FrameOptions& frames = {},
                                       bool record_increment = true);

/// 𝟎ᵏ at time 0 for k = 1 … k_max (separate runs, common time-0 chart).
std::vector<UGraph> unstable_iterates(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int k_max,
                                      double radius, const ChartParams& params, const FrameOptions& frames = {});

struct SwitchOptions {
  double max_proj_norm = 10.0;  ///< L
  double eps1 = 0.25;           ///< bound on d(x, y)
  double eps2 = 0.25;           ///< bound on axis Hausdorff distances
  double max_input_lip = 0.1;
  bool require_doubled_domain = true;
  double cs_bound = std::numeric_limits<double>::infinity();
  int nodes = 129;
};

/// Hausdorff distance between the unit segments of two lines through the origin.
double axis_distance(const Vec2& a, const Vec2& b);

/// Re-graph the curve of g (in g.frame) over the u-axis of target on [-rho, rho].
UGraph switch_axes(const UGraph& g, const ChartFrame& target, double rho, const SwitchOptions& opts = {});

/// Max distance from points of the ½ρ-restricted input curve to the output curve, in target coordinates.
double switch_containment_error(const UGraph& input, const UGraph& output);

enum class StackKind { Unstable, Pushed };

struct Leaf {
  int id = 0;
  TorusPoint base;
  UGraph graph;               ///< over the reference box
  double intercept = 0.0;     ///< cs-coordinate where the leaf crosses the box cs-axis
  double own_slope_at_origin = 0.0;
  double own_lip = 0.0;
  double own_dlip = 0.0;
};

struct LeafStack {
  ChartFrame reference;
  double r_star = 0.0;
  StackKind kind = StackKind::Unstable;
  int depth = 0;
  std::vector<Leaf> leaves;
  std::vector<std::string> rejections;

  /// Leaves sorted by intercept.
  void sort_by_intercept();
  /// Intercept of the stack leaf through box coordinates (u, v) by interpolation between leaves.
  /// Returns NaN outside the stack.
  double interpolate_intercept(double u, double v) const;
};

/// Geometric reference frame at x* built from the time-0 splitting there.
ChartFrame reference_frame(const MapFamily& f, const NoisePath& path, const TorusPoint& x_star,
                           double r_star, const ChartParams& params);

LeafStack build_u_stack(const MapFamily& f, const NoisePath& path, const std::vector<TorusPoint>& base_points,
                        const TorusPoint& x_star, double r_star, int n_past, const ChartParams& params,
                        const SwitchOptions& sw = {});

}  // namespace rdslab
