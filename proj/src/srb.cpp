#include "rdslab/srb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "rdslab/errors.hpp"

namespace rdslab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kChunk = std::size_t{1} << 16;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

ChartParams proxy_params(const ChartParams& params) {
  ChartParams p = params;
  p.horizon = 10;
  p.temper_window = 0;
  p.n_past = 20;
  p.n_future = 20;
  return p;
}

TorusPoint source_point(const TorusPoint& center, double radius, std::uint64_t seed, std::int64_t i) {
  const double r = radius * std::sqrt(counter_uniform(seed, 77, i, 0));
  const double th = 2.0 * kPi * counter_uniform(seed, 77, i, 1);
  return center + Vec2(r * std::cos(th), r * std::sin(th));
}

double ball_area(double radius) {
  return std::min(kPi * radius * radius, 1.0);
}

/// Smallest Ulam density over cells that meet B(c, radius).
double min_density_on_ball(const UlamDensity& psi, const TorusPoint& c, double radius) {
  const int m = psi.m;
  const double h = 1.0 / m;
  double lo = std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      const Vec2 d = displacement(c, TorusPoint((ix + 0.5) * h, (iy + 0.5) * h));
      const double gx = std::max(0.0, std::abs(d.x()) - 0.5 * h);
      const double gy = std::max(0.0, std::abs(d.y()) - 0.5 * h);
      if (gx * gx + gy * gy <= radius * radius) lo = std::min(lo, psi.cells[iy * m + ix] * m * m);
    }
  }
  return lo;
}

struct Landing {
  std::vector<TorusPoint> points;
  std::vector<char> qualified;
};

Landing land_and_qualify(const MapFamily& f, const NoisePath& path, const ParticleEnsemble& e, double l0, int n,
                         const ChartParams& params) {
  Landing out;
  const std::int64_t count = static_cast<std::int64_t>(e.size());
  out.points.resize(e.size());
  out.qualified.assign(e.size(), 0);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < count; ++i) {
    const TorusPoint x = e.points[i];
    const TorusPoint y = compose_pullback(f, path, x, n);
    out.points[i] = y;
    const double l_start = l_proxy(f, path, x, -n, params);
    const double l_end = l_start <= l0 ? l_proxy(f, path, y, 0, params, -n) : l0 + 1.0;
    out.qualified[i] = l_start <= l0 && l_end <= l0;
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(beta0 > 0.0 && beta0 < 1.0)) throw ConfigError("srb.beta0", "must lie in (0, 1)");
  if (!(eps_star > 0.0)) throw ConfigError("srb.eps_star", "must be positive");
  if (!(r_star > 0.0 && r_star <= 0.1)) throw ConfigError("srb.r_star", "must lie in (0, 0.1]");
  if (!(c_frak > 1.0)) throw ConfigError("srb.c_frak", "must exceed 1");
  if (depths.empty()) throw ConfigError("srb.depths", "at least one depth is required");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (depths[i] < 1) throw ConfigError("srb.depths[" + std::to_string(i) + "]", "must be >= 1");
    if (i > 0 && depths[i] <= depths[i - 1]) {
      throw ConfigError("srb.depths[" + std::to_string(i) + "]", "depths must be increasing");
    }
  }
  if (particles < 1000) throw ConfigError("srb.particles", "must be >= 1000");
  if (search_particles < 100) throw ConfigError("srb.search_particles", "must be >= 100");
  if (source_candidates < 1) throw ConfigError("srb.source_candidates", "must be >= 1");
  if (stack_leaves < 3) throw ConfigError("srb.stack_leaves", "must be >= 3");
  if (levels < 1 || levels > 12) throw ConfigError("srb.levels", "must lie in [1, 12]");
  if (cube_levels < 0 || cube_levels > 6) throw ConfigError("srb.cube_levels", "must lie in [0, 6]");
  if (wn_leaves < 0) throw ConfigError("srb.wn_leaves", "must be >= 0");
  if (n_past < 1) throw ConfigError("srb.n_past", "must be >= 1");
}

double l_proxy(const MapFamily& f, const NoisePath& path, const TorusPoint& p, std::int64_t t,
               const ChartParams& params, std::optional<std::int64_t> history_start) {
  FrameOptions fo;
  fo.history_start = history_start;
  const OrbitFrames frames(f, path, p, t, t, t, proxy_params(params), fo);
  return frames.frame(t).l_raw;
}

double auto_l0(const MapFamily& f, const NoisePath& path, const UlamDensity& stationary, double beta0, int samples,
               std::uint64_t seed, const ChartParams& params) {
  const ParticleEnsemble e = sample_from_density(stationary, static_cast<std::size_t>(samples), seed);
  std::vector<double> l(e.size());
  const std::int64_t count = static_cast<std::int64_t>(e.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < count; ++i) l[i] = l_proxy(f, path, e.points[i], 0, params);
  const double q = 1.0 - beta0 / 3.0;
  const auto k = static_cast<std::size_t>(std::min<double>(l.size() - 1, std::floor(q * (l.size() - 1))));
  std::nth_element(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(k), l.end());
  return l[k] * (1.0 + 1e-6);
}

std::vector<char> qualify_uniform(const MapFamily& f, const NoisePath& path, const ParticleEnsemble& at_minus_n,
                                  double l0, int n, const ChartParams& params) {
  return land_and_qualify(f, path, at_minus_n, l0, n, params).qualified;
}

ParticleEnsemble sample_source(const TorusPoint& center, double radius, double alpha0, std::size_t count,
                               std::uint64_t seed) {
  ParticleEnsemble e;
  e.points.resize(count);
  for (std::size_t i = 0; i < count; ++i) e.points[i] = source_point(center, radius, seed, static_cast<std::int64_t>(i));
  e.weights.assign(count, 0.5 * alpha0 * ball_area(radius) / static_cast<double>(count));
  e.provenance = {"source-restricted", 0, seed};
  return e;
}

SourceTarget find_source_target(const MapFamily& f, const NoisePath& path, const UlamDensity& stationary,
                                const ExperimentConfig& config, const ChartParams& params) {
  config.validate();
  SourceTarget best;
  best.alpha0 = config.alpha0 > 0.0 ? config.alpha0 : config.beta0;
  best.l0 = config.l0 > 0.0 ? config.l0
                            : auto_l0(f, path, stationary, config.beta0, 2000, mix64(config.seed + 11), params);

  // ε*-ball cover: grid cells of side h ≤ ε*·√2 lie inside the ball about their centre.
  const int g = std::max(1, static_cast<int>(std::ceil(1.0 / (config.eps_star * std::sqrt(2.0)) - 1e-12)));
  const double h = 1.0 / g;
  auto center = [&](int j) { return TorusPoint((j % g + 0.5) * h, (j / g + 0.5) * h); };
  const int n_cells = g * g;

  struct Candidate {
    int cell;
    double psi_min;
  };
  std::vector<Candidate> sources;
  for (int j = 0; j < n_cells; ++j) {
    const TorusPoint c = center(j);
    if (stationary.density_at(c) < best.alpha0) continue;
    const double lo = min_density_on_ball(stationary, c, 2.0 * config.eps_star);
    if (lo >= 0.5 * best.alpha0) sources.push_back({j, lo});
  }
  std::stable_sort(sources.begin(), sources.end(),
                   [](const Candidate& a, const Candidate& b) { return a.psi_min > b.psi_min; });
  if (sources.size() > static_cast<std::size_t>(config.source_candidates)) {
    sources.resize(static_cast<std::size_t>(config.source_candidates));
  }
  if (sources.empty()) throw NoAccumulation("no source ball inside {psi >= alpha0/2}");

  const int need = std::min<int>(config.min_retained_depths, static_cast<int>(config.depths.size()));
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const TorusPoint pm = center(sources[s].cell);
    const ParticleEnsemble src = sample_source(pm, config.eps_star, best.alpha0,
                                               static_cast<std::size_t>(config.search_particles),
                                               mix64(config.seed * 131 + s));
    std::vector<std::vector<double>> mass(config.depths.size(), std::vector<double>(n_cells, 0.0));
    double min_total = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < config.depths.size(); ++d) {
      const Landing land = land_and_qualify(f, path, src, best.l0, config.depths[d], params);
      double total = 0.0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (!land.qualified[i]) continue;
        const int ix = std::min(g - 1, static_cast<int>(land.points[i].x() / h));
        const int iy = std::min(g - 1, static_cast<int>(land.points[i].y() / h));
        mass[d][iy * g + ix] += src.weights[i];
        total += src.weights[i];
      }
      min_total = std::min(min_total, total);
    }
    // Pigeonhole threshold: at every depth some target holds at least total / n_cells.
    const double threshold = 0.5 * min_total / n_cells;
    int best_cell = -1;
    std::vector<int> best_depths;
    double best_min = 0.0;
    for (int j = 0; j < n_cells; ++j) {
      std::vector<int> kept;
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t d = 0; d < config.depths.size(); ++d) {
        if (mass[d][j] >= threshold && mass[d][j] > 0.0) {
          kept.push_back(static_cast<int>(d));
          lo = std::min(lo, mass[d][j]);
        }
      }
      if (kept.size() > best_depths.size() || (kept.size() == best_depths.size() && !kept.empty() && lo > best_min)) {
        best_cell = j;
        best_depths = kept;
        best_min = lo;
      }
    }
    if (best_cell >= 0 && static_cast<int>(best_depths.size()) >= need) {
      best.p_minus = pm;
      best.p_hat = center(best_cell);
      best.sources_tried = static_cast<int>(s) + 1;
      for (int d : best_depths) {
        best.depths.push_back(config.depths[d]);
        best.masses.push_back(mass[d][best_cell]);
      }
      best.c_star = best_min;
      return best;
    }
  }
  throw NoAccumulation("no source/target pair keeps mass at " + std::to_string(need) + " depths after " +
                       std::to_string(sources.size()) + " sources");
}

SourceFoliation disintegrate_source(const ChartFrame& frame_at_source, double eps_star, double r_minus,
                                    double K_minus, int n_lines) {
  if (n_lines < 1) throw ConfigError("srb.source_lines", "must be >= 1");
  SourceFoliation fol;
  fol.frame = frame_at_source;
  fol.eps_star = eps_star;
  fol.K_minus = K_minus;
  for (int j = 0; j < n_lines; ++j) {
    const double v = n_lines == 1 ? 0.0 : -eps_star + 2.0 * eps_star * (j + 0.5) / n_lines;
    const double chord = std::sqrt(eps_star * eps_star - v * v);
    const double radius = r_minus > 0.0 ? std::min(chord, r_minus) : chord;
    UGraph line = UGraph::from_function(
        frame_at_source, radius, 129, [v](double) { return v; }, [](double) { return 0.0; });
    fol.lines.push_back(std::move(line));
    fol.offsets.push_back(v);
  }
  return fol;
}

UGraph source_graph_at(const MapFamily& f, const NoisePath& path, const SourceFoliation& fol, const TorusPoint& q,
                       std::int64_t t, double radius, const ChartParams& params) {
  FrameOptions fo;
  fo.kind = FrameKind::Geometric;
  fo.geometric_radius = radius;
  const OrbitFrames frames(f, path, q, t, t, t, params, fo);
  const ChartFrame& fr = frames.frame(t);
  const double du = axis_distance(fr.split.e_u, fol.frame.split.e_u);
  const double dcs = axis_distance(fr.split.e_cs, fol.frame.split.e_cs);
  if (du >= 0.25 || dcs >= 0.25) {
    throw SeparationFailure("axes at the source point differ from the source axes by " + fmt(std::max(du, dcs)));
  }
  const Vec2 d = fr.Linv * fol.frame.split.e_u;
  const double slope = d.y() / d.x();
  if (std::abs(slope) >= fol.K_minus) {
    throw ConeViolation("source leaf slope " + fmt(slope) + " reaches K_minus = " + fmt(fol.K_minus));
  }
  UGraph g = UGraph::line(fr, radius, slope);
  g.log_density.assign(g.values.size(), 0.0);
  return g;
}

LeafStack build_wn_stack(const MapFamily& f, const NoisePath& path, const std::vector<UGraph>& source_graphs,
                         const TransformSchedule& schedule, int n, const TorusPoint& x_star, double r_star,
                         const ChartParams& params) {
  if (n < schedule.m0 + schedule.m1) {
    throw ConfigError("srb.depths", "depth " + std::to_string(n) + " is below m0 + m1 = " +
                                        std::to_string(schedule.m0 + schedule.m1));
  }
  LeafStack stack;
  stack.reference = reference_frame(f, path, x_star, r_star, params);
  stack.r_star = r_star;
  stack.kind = StackKind::Pushed;
  stack.depth = n;
  FrameOptions fo;
  fo.kind = FrameKind::Geometric;
  fo.geometric_radius = schedule.r1_bar;
  SwitchOptions sw;
  sw.cs_bound = 2.0 * r_star;

  const std::int64_t count = static_cast<std::int64_t>(source_graphs.size());
  std::vector<std::optional<Leaf>> out(source_graphs.size());
  std::vector<std::string> errors(source_graphs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      const UGraph& g0 = source_graphs[i];
      const SlantedResult res = iterate_slanted_transform(f, path, g0.frame.base, schedule, g0, n, params, fo);
      if (!res.full_domain.back()) throw DegenerateGraph("pushed leaf does not reach the working radius");
      const UGraph& gn = res.graphs.back();
      Leaf leaf;
      leaf.id = static_cast<int>(i);
      leaf.base = gn.frame.base;
      leaf.own_slope_at_origin = gn.slope_at_origin();
      leaf.own_lip = gn.lip;
      leaf.own_dlip = gn.dlip;
      leaf.graph = switch_axes(gn, stack.reference, r_star, sw);
      leaf.intercept = leaf.graph.eval(0.0);
      if (leaf.graph.lip > 1.0) throw ConeViolation("pushed leaf Lip " + fmt(leaf.graph.lip) + " > 1");
      out[i] = std::move(leaf);
    } catch (const NumericalError& e) {
      errors[i] = "leaf " + std::to_string(i) + ": " + e.what();
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i]) stack.leaves.push_back(std::move(*out[i]));
    else stack.rejections.push_back(errors[i]);
  }
  if (2 * stack.leaves.size() < source_graphs.size()) {
    throw ReGraphFailure("only " + std::to_string(stack.leaves.size()) + " of " +
                         std::to_string(source_graphs.size()) + " pushed leaves survived");
  }
  stack.sort_by_intercept();
  return stack;
}

double BoxSample::total_mass() const {
  return std::accumulate(weight.begin(), weight.end(), 0.0);
}

BoxSample project_to_stack(const LeafStack& u_stack, const ParticleEnsemble& landed) {
  BoxSample s;
  for (std::size_t i = 0; i < landed.size(); ++i) {
    const Vec2 z = u_stack.reference.to_chart(landed.points[i]);
    if (std::abs(z.x()) > u_stack.r_star) continue;
    const double c = u_stack.interpolate_intercept(z.x(), z.y());
    if (!std::isfinite(c)) continue;
    s.u.push_back(z.x());
    s.intercept.push_back(c);
    s.weight.push_back(landed.weights[i]);
    s.index.push_back(i);
  }
  return s;
}

double retention_target(int m) {
  return std::pow(2.0, -std::pow(2.0, -m));
}

double NestedPartition::retained_fraction(int m) const {
  if (m < 0 || m >= static_cast<int>(levels.size()) || root_mass <= 0.0) return 0.0;
  double total = 0.0;
  for (const PartitionCell& c : levels[m]) total += c.mass;
  return total / root_mass;
}

NestedPartition build_nested_partition(const LeafStack& u_stack, const BoxSample& sample, int levels) {
  if (u_stack.leaves.size() < 2) throw MassStarvation("reference stack has fewer than two leaves");
  if (sample.u.empty()) throw MassStarvation("no particles on the stack");
  std::vector<std::size_t> order(sample.intercept.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sample.intercept[a] < sample.intercept[b]; });
  std::vector<double> key(order.size()), w(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    key[i] = sample.intercept[order[i]];
    w[i] = sample.weight[order[i]];
  }
  auto range = [&](double lo, double hi) {
    const auto a = std::lower_bound(key.begin(), key.end(), lo) - key.begin();
    const auto b = std::upper_bound(key.begin(), key.end(), hi) - key.begin();
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  };

  NestedPartition part;
  PartitionCell root;
  root.lo = u_stack.leaves.front().intercept;
  root.hi = u_stack.leaves.back().intercept;
  root.open_lo = root.lo - 1e-12;
  root.open_hi = root.hi + 1e-12;
  const auto [ra, rb] = range(root.lo, root.hi);
  root.count = rb - ra;
  root.mass = std::accumulate(w.begin() + static_cast<std::ptrdiff_t>(ra), w.begin() + static_cast<std::ptrdiff_t>(rb), 0.0);
  part.root_mass = root.mass;
  part.levels.push_back({root});

  double eta_prev = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= levels; ++m) {
    const double cm = retention_target(m);
    part.c.push_back(cm);
    std::vector<PartitionCell> next;
    const auto& parents = part.levels.back();
    for (std::size_t p = 0; p < parents.size(); ++p) {
      const PartitionCell& P = parents[p];
      const double width = P.hi - P.lo;
      const double mid = P.lo + 0.5 * width + 1e-9 * width;
      const double bounds[3] = {P.lo, mid, P.hi};
      double kept_mass = 0.0;
      for (int half = 0; half < 2; ++half) {
        auto [a, b] = range(bounds[half], bounds[half + 1]);
        if (half == 0 && b > a && key[b - 1] == mid) --b;
        if (b <= a) continue;
        const double M = std::accumulate(w.begin() + static_cast<std::ptrdiff_t>(a),
                                         w.begin() + static_cast<std::ptrdiff_t>(b), 0.0);
        const double cut = 0.5 * (1.0 - cm) * M;
        std::size_t lo = a, hi = b;
        double removed = 0.0;
        while (lo + 1 < hi && removed + w[lo] <= cut) removed += w[lo++];
        removed = 0.0;
        while (hi - 1 > lo && removed + w[hi - 1] <= cut) removed += w[--hi];
        PartitionCell c;
        c.lo = key[lo];
        c.hi = key[hi - 1];
        c.parent = static_cast<int>(p);
        c.count = hi - lo;
        c.mass = std::accumulate(w.begin() + static_cast<std::ptrdiff_t>(lo), w.begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
        kept_mass += c.mass;
        next.push_back(c);
      }
      if (kept_mass < cm * P.mass * (1.0 - 1e-12)) {
        throw MassStarvation("level " + std::to_string(m) + " cell keeps " + fmt(kept_mass / P.mass) +
                             " of its parent, below c_m = " + fmt(cm));
      }
    }
    double eta = eta_prev;
    for (std::size_t i = 0; i + 1 < next.size(); ++i) eta = std::min(eta, 0.5 * (next[i + 1].lo - next[i].hi));
    if (!(eta > 0.0)) throw MassStarvation("level " + std::to_string(m) + " has touching cores");
    eta = std::min(eta, 0.5 * eta_prev);
    for (PartitionCell& c : next) {
      const PartitionCell& P = parents[static_cast<std::size_t>(c.parent)];
      c.open_lo = std::max(c.lo - eta, P.open_lo);
      c.open_hi = std::min(c.hi + eta, P.open_hi);
    }
    eta_prev = eta;
    part.levels.push_back(std::move(next));
  }
  return part;
}

DensityReport conditional_density_check(const LeafStack& wn_stack, const BoxSample& sample,
                                        const NestedPartition& partition, int level, int cube_levels,
                                        int min_cell_particles) {
  if (level < 1 || level >= static_cast<int>(partition.levels.size())) {
    throw ConfigError("srb.levels", "partition level " + std::to_string(level) + " is not available");
  }
  DensityReport rep;
  rep.depth = wn_stack.depth;
  rep.level = level;
  const double r = wn_stack.r_star;
  const auto& cells = partition.levels[static_cast<std::size_t>(level)];
  const int n_cubes = 1 << cube_levels;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const PartitionCell& c = cells[k];
    double cell_mass = 0.0;
    std::size_t count = 0;
    std::vector<double> fine(static_cast<std::size_t>(n_cubes), 0.0);
    for (std::size_t i = 0; i < sample.u.size(); ++i) {
      const double t = sample.intercept[i];
      if (!(t > c.open_lo && t < c.open_hi)) continue;
      cell_mass += sample.weight[i];
      ++count;
      const int j = std::clamp(static_cast<int>((sample.u[i] + r) / (2.0 * r) * n_cubes), 0, n_cubes - 1);
      fine[static_cast<std::size_t>(j)] += sample.weight[i];
    }
    if (count < static_cast<std::size_t>(min_cell_particles)) {
      rep.insufficient.push_back("level " + std::to_string(level) + " cell " + std::to_string(k) + ": " +
                                 std::to_string(count) + " particles");
      continue;
    }
    ++rep.cells_used;
    for (int q = 0; q <= cube_levels; ++q) {
      const int per = n_cubes >> q;
      for (int j = 0; j < (1 << q); ++j) {
        double m = 0.0;
        for (int s = 0; s < per; ++s) m += fine[static_cast<std::size_t>(j * per + s)];
        DensityRatio d;
        d.level = level;
        d.cell = static_cast<int>(k);
        d.cube_level = q;
        d.cube = j;
        d.ratio = m / cell_mass;
        d.leb_hat = 1.0 / (1 << q);
        d.cell_count = count;
        rep.A = std::max({rep.A, d.ratio / d.leb_hat, d.leb_hat / std::max(d.ratio, 1e-300)});
        rep.ratios.push_back(d);
      }
    }
  }
  for (std::size_t i = 0; i < wn_stack.leaves.size(); ++i) {
    const Leaf& leaf = wn_stack.leaves[i];
    if (!leaf.graph.has_density()) continue;
    const auto [lo, hi] = std::minmax_element(leaf.graph.log_density.begin(), leaf.graph.log_density.end());
    LeafDistortion d;
    d.leaf = leaf.id;
    d.intercept = leaf.intercept;
    d.log_range = *hi - *lo;
    rep.D_bar = std::max(rep.D_bar, d.log_range);
    rep.distortion.push_back(d);
  }
  return rep;
}

double LeafDensityProfile::cdf(double x) const {
  if (u.empty() || x <= u.front()) return 0.0;
  if (x >= u.back()) return 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double a = u[i], b = u[i + 1];
    if (x >= b) {
      acc += 0.5 * (density[i] + density[i + 1]) * (b - a);
      continue;
    }
    const double t = (x - a) / (b - a);
    const double dx = density[i] + t * (density[i + 1] - density[i]);
    acc += 0.5 * (density[i] + dx) * (x - a);
    break;
  }
  return acc;
}

LeafDensityProfile predicted_leaf_density(const MapFamily& f, const NoisePath& path, const UGraph& leaf, int n_trunc) {
  const int n = leaf.nodes();
  LeafDensityProfile prof;
  prof.u.resize(static_cast<std::size_t>(n));
  prof.log_density.resize(static_cast<std::size_t>(n));
  std::vector<TorusPoint> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = leaf.node(i);
    const TorusPoint p = leaf.frame.from_chart(Vec2(u, leaf.values[i]));
    pts[i] = p;
    // Backward orbit, then the unstable Jacobian product forward along it.
    std::vector<TorusPoint> orbit(static_cast<std::size_t>(n_trunc) + 1);
    orbit[0] = p;
    for (int k = 1; k <= n_trunc; ++k) orbit[k] = f.inverse(path.value(-k + 1), orbit[k - 1]);
    Vec2 e = estimate_Eu(f, path.shift(-n_trunc), orbit[n_trunc], 40);
    double log_ju = 0.0;
    for (int k = n_trunc; k >= 1; --k) {
      e = f.jacobian(path.value(-k + 1), orbit[k]) * e;
      const double s = e.norm();
      log_ju += std::log(s);
      e /= s;
    }
    const Vec2 t = leaf.frame.L * Vec2(1.0, leaf.slopes[i]);
    prof.u[i] = u;
    prof.log_density[i] = std::log(t.norm()) - log_ju;
  }
  const double top = *std::max_element(prof.log_density.begin(), prof.log_density.end());
  prof.density.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) prof.density[i] = std::exp(prof.log_density[i] - top);
  for (int i = 0; i + 1 < n; ++i) total += 0.5 * (prof.density[i] + prof.density[i + 1]) * (prof.u[i + 1] - prof.u[i]);
  const double log_total = std::log(total);
  for (int i = 0; i < n; ++i) {
    prof.density[i] /= total;
    prof.log_density[i] -= top + log_total;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = distance(pts[i], pts[j]);
      if (d > 0.0) prof.lipschitz_D = std::max(prof.lipschitz_D, std::abs(prof.log_density[i] - prof.log_density[j]) / d);
    }
  }
  return prof;
}

double ks_distance(std::vector<double> u, const LeafDensityProfile& profile) {
  if (u.empty()) return 1.0;
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double F = profile.cdf(u[i]);
    d = std::max({d, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
  }
  return d;
}

EntropyCheck entropy_consistency(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n) {
  EntropyCheck out;
  out.lambda1 = lyapunov_qr(f, path, p, n).lambda1;
  Vec2 e = estimate_Eu(f, path, p, 60);
  TorusPoint x = p;
  double sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const NoiseValue w = path.value(k);
    e = f.jacobian(w, x) * e;
    const double s = e.norm();
    sum += std::log(s);
    e /= s;
    x = f.eval(w, x);
  }
  out.mean_log_unstable_jacobian = sum / n;
  return out;
}

double restriction_excess(const ParticleEnsemble& nu, const ParticleEnsemble& mu, int m) {
  const UlamDensity a = ulam_projection(nu, m);
  const UlamDensity b = ulam_projection(mu, m);
  const double wa = nu.total_mass() / std::max<std::size_t>(1, nu.size());
  const double wb = mu.total_mass() / std::max<std::size_t>(1, mu.size());
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const double sigma = std::sqrt(wa * a.cells[i] + wb * b.cells[i]) + 1e-300;
    worst = std::max(worst, (a.cells[i] - b.cells[i]) / sigma);
  }
  return worst;
}

GoodSetReport good_seed_fraction(const MapFamily& f, const NoiseLaw& law, const UlamDensity& stationary,
                                 const ExperimentConfig& config, const ChartParams& params, int base_seeds) {
  GoodSetReport rep;
  rep.bound = (config.c_frak - 1.0) / config.c_frak;
  rep.tried = static_cast<int>(std::ceil(config.c_frak / (config.c_frak - 1.0) * base_seeds));
  ExperimentConfig cfg = config;
  cfg.min_retained_depths = 3;
  for (int s = 0; s < rep.tried; ++s) {
    const NoisePath path(mix64(config.seed * 1009 + static_cast<std::uint64_t>(s)), law);
    try {
      find_source_target(f, path, stationary, cfg, params);
      ++rep.passed;
    } catch (const NoAccumulation&) {
    }
  }
  rep.fraction = static_cast<double>(rep.passed) / rep.tried;
  return rep;
}

LeafStack reference_u_stack(const MapFamily& f, const NoisePath& path, const TorusPoint& x_star, double r_star,
                            int leaves, int n_past, const ChartParams& params) {
  const ChartFrame ref = reference_frame(f, path, x_star, r_star, params);
  std::vector<TorusPoint> bases;
  for (int j = 0; j < leaves; ++j) {
    const double v = leaves == 1 ? 0.0 : -0.9 * r_star + 1.8 * r_star * j / (leaves - 1);
    bases.push_back(ref.from_chart(Vec2(0.0, v)));
  }
  LeafStack st = build_u_stack(f, path, bases, x_star, r_star, n_past, params);
  st.sort_by_intercept();
  return st;
}

DepthSnapshot srb_snapshot(const MapFamily& f, const NoisePath& path, const SourceTarget& st,
                           const LeafStack& u_stack, const ExperimentConfig& config, const ChartParams& params, int n,
                           bool match_unstable) {
  DepthSnapshot snap;
  snap.depth = n;
  const ChartFrame& box = u_stack.reference;
  const double r = u_stack.r_star;
  const double alpha0 = st.alpha0;
  const double weight = 0.5 * alpha0 * ball_area(config.eps_star) / static_cast<double>(config.particles);
  const std::uint64_t seed = mix64(config.seed * 7919 + static_cast<std::uint64_t>(n));
  snap.pushed = static_cast<std::size_t>(config.particles);
  snap.pushed_mass = weight * static_cast<double>(config.particles);
  snap.landed.provenance = {"source-restricted", n, seed};

  std::vector<TorusPoint> y(kChunk);
  std::vector<char> keep(kChunk);
  for (std::int64_t start = 0; start < config.particles; start += static_cast<std::int64_t>(kChunk)) {
    const std::int64_t len = std::min<std::int64_t>(static_cast<std::int64_t>(kChunk), config.particles - start);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < len; ++i) {
      const TorusPoint q = source_point(st.p_minus, config.eps_star, seed, start + i);
      y[i] = compose_pullback(f, path, q, n);
      const Vec2 z = box.to_chart(y[i]);
      keep[i] = std::abs(z.x()) <= r && std::abs(z.y()) <= 1.5 * r;
    }
    for (std::int64_t i = 0; i < len; ++i) {
      if (!keep[i]) continue;
      snap.landed.points.push_back(y[i]);
      snap.landed.weights.push_back(weight);
      snap.landed_sources.push_back(source_point(st.p_minus, config.eps_star, seed, start + i));
    }
  }
  snap.sample = project_to_stack(u_stack, snap.landed);
  snap.partition = build_nested_partition(u_stack, snap.sample, config.levels);

  if (config.wn_leaves > 0 && !snap.sample.u.empty()) {
    FrameOptions fo;
    fo.kind = FrameKind::Geometric;
    fo.geometric_radius = config.eps_star;
    const OrbitFrames src_frames(f, path, st.p_minus, -n, -n, -n, params, fo);
    const SourceFoliation fol = disintegrate_source(src_frames.frame(-n), config.eps_star, 0.0, params.K0_bar, 1);
    const TransformSchedule sch =
        make_schedule(params.K0_bar, params.K0_bar, params.lambda(), params.delta2, config.eps_star, 2.0 * r);
    std::vector<UGraph> sources;
    const std::size_t m = snap.sample.u.size();
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(config.wn_leaves), m);
    for (std::size_t k = 0; k < want; ++k) {
      const std::size_t idx = snap.sample.index[k * m / want];
      try {
        sources.push_back(source_graph_at(f, path, fol, snap.landed_sources[idx], -n, config.eps_star, params));
      } catch (const NumericalError&) {
      }
    }
    if (!sources.empty()) {
      snap.wn_stack = build_wn_stack(f, path, sources, sch, n, box.base, r, params);
    }
    if (match_unstable) {
      snap.leaf_distances.resize(snap.wn_stack.leaves.size(), std::numeric_limits<double>::quiet_NaN());
      const std::int64_t count = static_cast<std::int64_t>(snap.wn_stack.leaves.size());
#pragma omp parallel for schedule(dynamic, 1)
      for (std::int64_t i = 0; i < count; ++i) {
        const Leaf& leaf = snap.wn_stack.leaves[i];
        const LeafStack wu = build_u_stack(f, path, {leaf.base}, box.base, r, config.n_past, params);
        if (!wu.leaves.empty()) snap.leaf_distances[i] = graph_sup_distance(leaf.graph, wu.leaves[0].graph);
      }
    }
  }
  snap.wn_stack.depth = n;
  snap.wn_stack.r_star = r;
  for (int level = 1; level <= config.levels; ++level) {
    snap.reports.push_back(conditional_density_check(snap.wn_stack, snap.sample, snap.partition, level,
                                                     config.cube_levels, config.min_cell_particles));
  }
  return snap;
}

std::vector<BandCheck> band_checks(const MapFamily& f, const NoisePath& path, const LeafStack& u_stack,
                                   const DepthSnapshot& snap, int level, int n_trunc, std::size_t min_count,
                                   int n_past, const ChartParams& params) {
  std::vector<BandCheck> out;
  if (level < 0 || level >= static_cast<int>(snap.partition.levels.size())) return out;
  const auto& cells = snap.partition.levels[static_cast<std::size_t>(level)];
  const TorusPoint x_star = u_stack.reference.base;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const PartitionCell& c = cells[k];
    BandCheck b;
    b.cell = static_cast<int>(k);
    b.lo = c.lo;
    b.hi = c.hi;
    for (std::size_t i = 0; i < snap.sample.u.size(); ++i) {
      const double v = snap.sample.intercept[i];
      if (v > c.open_lo && v < c.open_hi) b.u.push_back(snap.sample.u[i]);
    }
    if (b.u.size() < min_count) continue;
    const TorusPoint mid = u_stack.reference.from_chart(Vec2(0.0, 0.5 * (c.lo + c.hi)));
    const LeafStack one = build_u_stack(f, path, {mid}, x_star, u_stack.r_star, n_past, params);
    if (one.leaves.empty()) continue;
    b.predicted = predicted_leaf_density(f, path, one.leaves[0].graph, n_trunc);
    b.ks = ks_distance(b.u, b.predicted);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace rdslab
