#include "rdslab/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rdslab/errors.hpp"

namespace rdslab {

namespace {

struct MonotoneSolve {
  double s = 0.0;
  bool ok = false;
};

// Solves F(s) = target for strictly monotone F on [a, b] by Newton steps kept
// inside a shrinking bracket, with bisection whenever a step leaves it.
template <class Fn>
MonotoneSolve solve_monotone(Fn&& fn, double a, double b, double fa, double fb, double target, double s0) {
  const double sign = fb >= fa ? 1.0 : -1.0;
  double lo = a, hi = b;
  double s = std::clamp(s0, lo, hi);
  const double xtol = 1e-13 * (b - a);
  for (int it = 0; it < 200; ++it) {
    const auto [val, der] = fn(s);
    const double r = sign * (val - target);
    if (r == 0.0) return {s, true};
    if (r < 0.0) lo = s; else hi = s;
    double next = s - (val - target) / der;
    if (!(next > lo && next < hi) || !std::isfinite(next) || it > 60) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= xtol || hi - lo <= xtol) return {next, true};
    s = next;
  }
  return {s, false};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void check_cone(const UGraph& g, const TransformOptions& opts) {
  if (opts.check_cone && g.lip > opts.cone_K * (1.0 + opts.lip_tolerance)) {
    throw ConeViolation("measured Lip " + fmt(g.lip) + " exceeds regime bound " + fmt(opts.cone_K));
  }
}

}  // namespace

UGraph graph_transform_step(const ChartFrame& dst_frame, const ChartMap& conn, const UGraph& g,
                            double dst_radius, const TransformOptions& opts) {
  if (g.nodes() < 7) throw DegenerateGraph("source graph has fewer than 7 nodes");
  struct Eval {
    Vec2 fz;
    Vec2 w;
  };
  auto phi_full = [&](double u) {
    const Vec2 z(u, g.eval(u));
    const Vec2 tangent(1.0, g.deriv(u));
    return Eval{conn.eval(z), conn.jacobian(z) * tangent};
  };
  auto phi = [&](double u) {
    const Eval e = phi_full(u);
    return std::pair<double, double>(e.fz.x(), e.w.x());
  };
  const double r = g.radius;
  const double pa = phi(-r).first, pb = phi(r).first;
  const double img_lo = std::min(pa, pb), img_hi = std::max(pa, pb);
  double R = dst_radius;
  if (opts.truncate_to_image) {
    if (!(img_lo < 0.0 && img_hi > 0.0)) throw NewtonDivergence("image of the graph does not cross the origin");
    R = std::min({R, -img_lo, img_hi}) * (1.0 - 1e-12);
    if (R < 3.0 * 2.0 * dst_radius / (opts.nodes - 1)) {
      throw DegenerateGraph("covered destination radius is below 3 grid cells");
    }
  } else if (img_lo > -R || img_hi < R) {
    throw NewtonDivergence("image [" + fmt(img_lo) + ", " + fmt(img_hi) + "] does not cover radius " + fmt(R));
  }

  UGraph out;
  out.frame = dst_frame;
  out.radius = R;
  const int n = opts.nodes;
  out.values.resize(static_cast<std::size_t>(n));
  out.slopes.resize(static_cast<std::size_t>(n));
  if (g.has_density()) out.log_density.resize(static_cast<std::size_t>(n));
  double guess = pa <= pb ? -r : r;
  double prev_target = pa <= pb ? pa : pb, prev_der = 0.0;
  for (int i = 0; i < n; ++i) {
    const double target = out.node(i);
    double s0 = guess;
    if (prev_der != 0.0) s0 = guess + (target - prev_target) / prev_der;
    const MonotoneSolve sol = solve_monotone(phi, -r, r, pa, pb, target, s0);
    if (!sol.ok) throw NewtonDivergence("no preimage found for node u' = " + fmt(target));
    const Eval e = phi_full(sol.s);
    out.values[i] = e.fz.y();
    out.slopes[i] = e.w.y() / e.w.x();
    if (g.has_density()) out.log_density[i] = g.eval_log_density(sol.s) - std::log(std::abs(e.w.x()));
    guess = sol.s;
    prev_target = target;
    prev_der = e.w.x();
  }
  out.measure();
  const double bound = opts.cs_bound > 0.0 ? opts.cs_bound : dst_frame.chart_radius;
  if (bound > 0.0 && out.max_abs() > bound * (1.0 + 1e-9)) {
    throw ChartOverflow("graph reaches |v| = " + fmt(out.max_abs()) + " beyond cs-radius " + fmt(bound));
  }
  check_cone(out, opts);
  return out;
}

TransformSchedule make_schedule(double K0, double K_bar, double lambda, double delta2, double r0, double r1_bar) {
  TransformSchedule s;
  s.K0 = K0;
  s.K_bar = K_bar;
  s.r0 = r0;
  s.r1_bar = r1_bar;
  s.m0 = K0 > K_bar ? static_cast<int>(std::ceil(2.0 * std::log(K0 / K_bar) / lambda)) : 0;
  const double growth = std::max(1e-3, lambda - delta2);
  s.m1 = r1_bar > r0 ? static_cast<int>(std::ceil(std::log(r1_bar / r0) / growth)) + 1 : 0;
  return s;
}

SlantedResult iterate_slanted_transform(const MapFamily& f, const NoisePath& path,
                                        const TorusPoint& start_point_at_time_minus_n,
                                        const TransformSchedule& schedule, const UGraph& g0, int n,
                                        const ChartParams& params, const FrameOptions& fopts) {
  if (n < 1) throw ConfigError("slanted.n", "must be >= 1");
  const OrbitFrames frames(f, path, start_point_at_time_minus_n, -n, -n, 0, params, fopts);
  const bool lyap = fopts.kind == FrameKind::Lyapunov;
  auto radius_at = [&](int k) {
    const double factor = k <= schedule.m0 ? schedule.r0 : schedule.r1_bar;
    return lyap ? factor / frames.frame(-n + k).l_value : factor;
  };
  SlantedResult res;
  UGraph g = g0;
  g.frame = frames.frame(-n);
  for (int k = 1; k <= n; ++k) {
    const std::int64_t t = -n + k;
    const ConnectingMap conn(f, path.value(t), frames.frame(t - 1), frames.frame(t));
    TransformOptions opts;
    opts.cone_K = k <= schedule.m0 + schedule.m1 ? std::max(schedule.K0, schedule.K_bar) : schedule.K_bar;
    opts.truncate_to_image = true;
    opts.cs_bound = lyap ? frames.frame(t).chart_radius : std::numeric_limits<double>::max();
    opts.nodes = g0.nodes();
    const double R = radius_at(k);
    try {
      g = graph_transform_step(frames.frame(t), conn, g, R, opts);
    } catch (const NumericalError& e) {
      throw NumericalError(e.kind(), std::string(e.what()) + " [slanted step k = " + std::to_string(k) + "]");
    }
    res.radii.push_back(R);
    res.full_domain.push_back(g.radius >= R * (1.0 - 1e-9));
    res.graphs.push_back(g);
  }
  return res;
}

namespace {

UGraph transform_zero_from(const MapFamily& f, const NoisePath& path, const OrbitFrames& frames, std::int64_t t_start,
                           double radius, const FrameOptions& fopts, const ChartParams& params, int nodes) {
  const bool lyap = fopts.kind == FrameKind::Lyapunov;
  auto R = [&](std::int64_t t) { return lyap ? radius / frames.frame(t).l_value : radius; };
  UGraph g = UGraph::zero(frames.frame(t_start), R(t_start), nodes);
  for (std::int64_t t = t_start + 1; t <= 0; ++t) {
    const ConnectingMap conn(f, path.value(t), frames.frame(t - 1), frames.frame(t));
    TransformOptions opts;
    opts.cone_K = params.K0_bar;
    opts.cs_bound = std::max(R(t), frames.frame(t).chart_radius);
    opts.nodes = nodes;
    g = graph_transform_step(frames.frame(t), conn, g, R(t), opts);
  }
  return g;
}

}  // namespace

UnstableResult local_unstable_manifold(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n_past,
                                       double radius, const ChartParams& params, const FrameOptions& fopts,
                                       bool record_increment) {
  if (n_past < 1) throw ConfigError("unstable.n_past", "must be >= 1");
  const OrbitFrames frames(f, path, p, 0, -n_past, 0, params, fopts);
  UnstableResult res;
  res.graph = transform_zero_from(f, path, frames, -n_past, radius, fopts, params, 129);
  if (record_increment && n_past > 1) {
    const UGraph prev = transform_zero_from(f, path, frames, -n_past + 1, radius, fopts, params, 129);
    res.last_increment = graph_prime_distance(res.graph, prev);
  }
  return res;
}

std::vector<UGraph> unstable_iterates(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int k_max,
                                      double radius, const ChartParams& params, const FrameOptions& fopts) {
  const OrbitFrames frames(f, path, p, 0, -k_max, 0, params, fopts);
  std::vector<UGraph> out;
  for (int k = 1; k <= k_max; ++k) {
    out.push_back(transform_zero_from(f, path, frames, -k, radius, fopts, params, 129));
  }
  return out;
}

double axis_distance(const Vec2& a, const Vec2& b) {
  return std::sin(line_angle(a, b));
}

UGraph switch_axes(const UGraph& g, const ChartFrame& target, double rho, const SwitchOptions& opts) {
  const ChartFrame& y = g.frame;
  if (y.split.proj_norm_u > opts.max_proj_norm || target.split.proj_norm_u > opts.max_proj_norm) {
    throw HypothesisFailure("(i) projection norm exceeds L = " + fmt(opts.max_proj_norm));
  }
  const double d = distance(y.base, target.base);
  if (!(d < opts.eps1)) throw HypothesisFailure("(ii) base distance " + fmt(d) + " >= eps1 = " + fmt(opts.eps1));
  const double du = axis_distance(y.split.e_u, target.split.e_u);
  const double dcs = axis_distance(y.split.e_cs, target.split.e_cs);
  if (!(du < opts.eps2) || !(dcs < opts.eps2)) {
    throw HypothesisFailure("(ii) axis distance " + fmt(std::max(du, dcs)) + " >= eps2 = " + fmt(opts.eps2));
  }
  if (g.lip > opts.max_input_lip * (1.0 + 1e-9)) {
    throw HypothesisFailure("(iii) input Lip " + fmt(g.lip) + " exceeds " + fmt(opts.max_input_lip));
  }
  if (opts.require_doubled_domain && g.radius < 2.0 * rho * (1.0 - 1e-9)) {
    throw HypothesisFailure("(iii) input domain " + fmt(g.radius) + " does not cover 2*rho = " + fmt(2.0 * rho));
  }

  const Vec2 offset = target.Linv * displacement(target.base, y.base);
  const Mat2 M = target.Linv * y.L;
  auto z = [&](double s) { return Vec2(offset + M * Vec2(s, g.eval(s))); };
  auto dz = [&](double s) { return Vec2(M * Vec2(1.0, g.deriv(s))); };
  auto zu = [&](double s) { return std::pair<double, double>(z(s).x(), dz(s).x()); };
  const double r = g.radius;
  const double za = z(-r).x(), zb = z(r).x();
  if (std::min(za, zb) > -rho || std::max(za, zb) < rho) {
    throw ReGraphFailure("curve does not span the target u-range [-" + fmt(rho) + ", " + fmt(rho) + "]");
  }
  UGraph out;
  out.frame = target;
  out.radius = rho;
  const int n = opts.nodes;
  out.values.resize(static_cast<std::size_t>(n));
  out.slopes.resize(static_cast<std::size_t>(n));
  if (g.has_density()) out.log_density.resize(static_cast<std::size_t>(n));
  double guess = za <= zb ? -r : r;
  for (int i = 0; i < n; ++i) {
    const double target_u = out.node(i);
    const MonotoneSolve sol = solve_monotone(zu, -r, r, za, zb, target_u, guess);
    const Vec2 dv = dz(sol.s);
    if (!sol.ok || dv.x() == 0.0) throw ReGraphFailure("node u = " + fmt(target_u) + " has no solution");
    out.values[i] = z(sol.s).y();
    out.slopes[i] = dv.y() / dv.x();
    if (g.has_density()) out.log_density[i] = g.eval_log_density(sol.s) - std::log(std::abs(dv.x()));
    guess = sol.s;
  }
  out.measure();
  if (out.max_abs() > opts.cs_bound) {
    throw ReGraphFailure("re-graphed curve leaves F^cs(" + fmt(opts.cs_bound) + ")");
  }
  return out;
}

double switch_containment_error(const UGraph& input, const UGraph& output) {
  const ChartFrame& y = input.frame;
  const ChartFrame& x = output.frame;
  const Vec2 offset = x.Linv * displacement(x.base, y.base);
  const Mat2 M = x.Linv * y.L;
  const double half = 0.5 * output.radius;
  double worst = 0.0;
  for (int i = 0; i < input.nodes(); ++i) {
    const Vec2 z = offset + M * Vec2(input.node(i), input.values[i]);
    if (std::abs(z.x()) > half) continue;
    worst = std::max(worst, std::abs(output.eval(z.x()) - z.y()));
  }
  return worst;
}

void LeafStack::sort_by_intercept() {
  std::sort(leaves.begin(), leaves.end(), [](const Leaf& a, const Leaf& b) { return a.intercept < b.intercept; });
}

double LeafStack::interpolate_intercept(double u, double v) const {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (leaves.size() < 2 || std::abs(u) > r_star) return nan;
  std::size_t lo = 0, hi = leaves.size() - 1;
  double vlo = leaves[lo].graph.eval(u), vhi = leaves[hi].graph.eval(u);
  if (v < vlo || v > vhi) return nan;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    const double vm = leaves[mid].graph.eval(u);
    if (vm <= v) {
      lo = mid;
      vlo = vm;
    } else {
      hi = mid;
      vhi = vm;
    }
  }
  const double t = vhi > vlo ? (v - vlo) / (vhi - vlo) : 0.0;
  return leaves[lo].intercept + t * (leaves[hi].intercept - leaves[lo].intercept);
}

ChartFrame reference_frame(const MapFamily& f, const NoisePath& path, const TorusPoint& x_star, double r_star,
                           const ChartParams& params) {
  FrameOptions fo;
  fo.kind = FrameKind::Geometric;
  fo.geometric_radius = r_star;
  const OrbitFrames frames(f, path, x_star, 0, 0, 0, params, fo);
  return frames.frame(0);
}

LeafStack build_u_stack(const MapFamily& f, const NoisePath& path, const std::vector<TorusPoint>& base_points,
                        const TorusPoint& x_star, double r_star, int n_past, const ChartParams& params,
                        const SwitchOptions& sw) {
  LeafStack stack;
  stack.reference = reference_frame(f, path, x_star, r_star, params);
  stack.r_star = r_star;
  stack.kind = StackKind::Unstable;
  stack.depth = n_past;
  FrameOptions fo;
  fo.kind = FrameKind::Geometric;
  fo.geometric_radius = 2.0 * r_star;
  SwitchOptions opts = sw;
  opts.cs_bound = std::min(opts.cs_bound, r_star);
  for (std::size_t i = 0; i < base_points.size(); ++i) {
    try {
      const UnstableResult w = local_unstable_manifold(f, path, base_points[i], n_past, 2.0 * r_star, params, fo, false);
      Leaf leaf;
      leaf.id = static_cast<int>(i);
      leaf.base = base_points[i];
      leaf.own_slope_at_origin = w.graph.slope_at_origin();
      leaf.own_lip = w.graph.lip;
      leaf.own_dlip = w.graph.dlip;
      leaf.graph = switch_axes(w.graph, stack.reference, r_star, opts);
      leaf.intercept = leaf.graph.eval(0.0);
      if (leaf.graph.lip > 1.0) throw ConeViolation("stack leaf Lip " + fmt(leaf.graph.lip) + " > 1");
      stack.leaves.push_back(std::move(leaf));
    } catch (const NumericalError& e) {
      stack.rejections.push_back("leaf " + std::to_string(i) + ": " + e.what());
    }
  }
  return stack;
}

}  // namespace rdslab
