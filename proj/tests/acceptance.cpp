// Acceptance suite: one PASS/FAIL line per criterion.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "rdslab/commands.hpp"
#include "rdslab/errors.hpp"
#include "rdslab/io.hpp"
#include "rdslab/srb.hpp"

using namespace rdslab;
using nlohmann::json;

namespace {

const double kLambdaA = std::log((3.0 + std::sqrt(5.0)) / 2.0);
const Vec2 kEuA = Vec2(1.0, (std::sqrt(5.0) - 1.0) / 2.0).normalized();
const Vec2 kEcsA = Vec2(1.0, -(1.0 + std::sqrt(5.0)) / 2.0).normalized();

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

UGraph random_graph(const ChartFrame& fr, double r, double lip, std::uint64_t seed) {
  const double a1 = 2 * counter_uniform(seed, 1, 0, 0) - 1;
  const double a2 = 2 * counter_uniform(seed, 1, 0, 1) - 1;
  const double a3 = 2 * counter_uniform(seed, 1, 0, 2) - 1;
  const double k = 3.0;
  const double s = lip / (std::abs(a1) + 2 * std::abs(a2) + k * std::abs(a3));
  return UGraph::from_function(
      fr, r, 129,
      [=](double u) { const double x = u / r; return s * r * (a1 * x + a2 * x * x + a3 * std::sin(k * x)); },
      [=](double u) { const double x = u / r; return s * (a1 + 2 * a2 * x + k * a3 * std::cos(k * x)); });
}

Outcome lyapunov_oracle() {
  Outcome o;
  const auto f = make_system_a();
  const NoisePath path(1, NoiseLaw::uniform_full());
  const auto t0 = std::chrono::steady_clock::now();
  const ExponentReport r = lyapunov_qr(*f, path, TorusPoint(0.1234, 0.5678), 10000);
  const double dt = seconds_since(t0);
  o.require(std::abs(r.lambda1 - kLambdaA) <= 1e-6, "|λ1 − log((3+√5)/2)| = " + sci(std::abs(r.lambda1 - kLambdaA)) + " ≤ 1e-6");
  o.require(dt < 1.0, "runtime " + sci(dt) + " s < 1 s");
  return o;
}

Outcome oseledets_geometry() {
  Outcome o;
  const auto a = make_system_a();
  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    const NoisePath path(10 + s, NoiseLaw::uniform_full());
    const TorusPoint p(counter_uniform(3, 3, s, 0), counter_uniform(3, 3, s, 1));
    for (int depth : {40, 60}) {
      worst = std::max(worst, line_angle(estimate_Eu(*a, path, p, depth), kEuA));
      worst = std::max(worst, line_angle(estimate_Ecs(*a, path, p, depth), kEcsA));
    }
  }
  o.require(worst <= 1e-8, "System A max angle to eigenvectors " + sci(worst) + " ≤ 1e-8");

  const auto c = make_family("C", {{"a", 0.3}});
  const std::vector<int> depths{2, 4, 6, 8, 10};
  std::vector<double> mean_log(depths.size(), 0.0);
  for (int s = 0; s < 20; ++s) {
    const NoisePath path(100 + s, NoiseLaw::uniform_full());
    const TorusPoint p(counter_uniform(5, 5, s, 0), counter_uniform(5, 5, s, 1));
    const Vec2 ref = estimate_Eu(*c, path, p, 40);
    for (std::size_t k = 0; k < depths.size(); ++k) {
      const NoisePath spliced = path.splice_past(-depths[k], 5000 + s);
      mean_log[k] += std::log(std::max(line_angle(estimate_Eu(*c, spliced, p, 40), ref), 1e-300)) / 20.0;
    }
  }
  bool decaying = true;
  for (std::size_t k = 1; k < depths.size(); ++k) decaying = decaying && mean_log[k] < mean_log[k - 1];
  o.require(decaying, "System C far-past E^u perturbation, mean log angle over 20 seeds at n0 = 2..10: " +
                          sci(mean_log.front()) + " → " + sci(mean_log.back()) + " (decreasing)");
  return o;
}

Outcome graph_contraction() {
  Outcome o;
  const NoisePath path(21, NoiseLaw::uniform_full());
  for (const std::string name : {"A", "B", "C"}) {
    const auto f = make_family(name, {});
    const ChartParams params = default_chart_params(*f, path);
    const OrbitFrames frames(*f, path, TorusPoint(0.37, 0.52), 0, 0, 100, params);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const ChartFrame& a = frames.frame(k);
      const ChartFrame& b = frames.frame(k + 1);
      const ConnectingMap conn(*f, path.value(k + 1), a, b);
      const UGraph g1 = random_graph(a, a.chart_radius, 0.09, 2 * k + 1);
      const UGraph g2 = random_graph(a, a.chart_radius, 0.09, 2 * k + 2);
      const UGraph t1 = graph_transform_step(b, conn, g1, b.chart_radius);
      const UGraph t2 = graph_transform_step(b, conn, g2, b.chart_radius);
      worst = std::max(worst, graph_prime_distance(t1, t2) / graph_prime_distance(g1, g2));
    }
    o.require(worst < 1.0, "System " + name + " c = " + sci(worst) + " < 1 over 100 pairs");
  }
  const double mu = 0.9, sigma = 0.7;
  Mat2 d;
  d << std::exp(mu), 0, 0, std::exp(-sigma);
  const LinearChartMap map(d);
  ChartFrame fr;
  fr.chart_radius = 1.0;
  const UGraph l1 = UGraph::line(fr, 0.5, 0.08), l2 = UGraph::line(fr, 0.5, -0.05);
  const double c = graph_prime_distance(graph_transform_step(fr, map, l1, 0.5), graph_transform_step(fr, map, l2, 0.5)) /
                   graph_prime_distance(l1, l2);
  o.require(std::abs(c - std::exp(-sigma - mu)) <= 1e-10,
            "diagonal map |c − e^{−σ−μ}| = " + sci(std::abs(c - std::exp(-sigma - mu))) + " ≤ 1e-10");
  return o;
}

Outcome slanted_schedule() {
  Outcome o;
  const NoisePath path(33, NoiseLaw::uniform_full());
  for (const std::string name : {"A", "C"}) {
    const auto f = make_family(name, {});
    const ChartParams params = default_chart_params(*f, path);
    const double lam = params.lambda();
    const TransformSchedule sch = make_schedule(0.5, params.K0_bar, lam, params.delta2, params.delta1 / 4, params.delta1);
    const int n = 30;
    const TorusPoint start(0.62, 0.18);
    const double l_start = build_chart_frame(*f, path.shift(-n), start, params, params.n_past, params.n_future).l_value;
    const UGraph g0 = UGraph::line(ChartFrame{}, sch.r0 / l_start, 0.5);
    const SlantedResult res = iterate_slanted_transform(*f, path, start, sch, g0, n, params);
    double worst_ratio = 0.0, worst_lip = 0.0;
    for (int k = 1; k <= n; ++k) {
      const UGraph& g = res.graphs[k - 1];
      worst_ratio = std::max(worst_ratio, std::abs(g.slope_at_origin()) / (0.5 * std::exp(-k * lam / 2)));
      if (k >= sch.m0 + sch.m1) worst_lip = std::max(worst_lip, g.lip);
    }
    o.require(worst_ratio <= 1 + 1e-6, "System " + name + " max |(dg_k)0| / (0.5 e^{−kλ/2}) = " + sci(worst_ratio));
    o.require(worst_lip <= 0.1, "System " + name + " max Lip(g_k), k ≥ m0+m1 = " + std::to_string(sch.m0 + sch.m1) +
                                    ": " + sci(worst_lip) + " ≤ 0.1");
  }
  return o;
}

Outcome unstable_leaf_oracle() {
  Outcome o;
  const auto a = make_system_a();
  const NoisePath path(35, NoiseLaw::uniform_full());
  const ChartParams pa = ChartParams::defaults_for(kLambdaA);
  double dev = 0.0;
  for (int s = 0; s < 5; ++s) {
    const TorusPoint p(counter_uniform(7, 7, s, 0), counter_uniform(7, 7, s, 1));
    const UnstableResult w = local_unstable_manifold(*a, path, p, 40, pa.delta1, pa);
    for (int i = 0; i < w.graph.nodes(); ++i) {
      const Vec2 d = displacement(p, w.graph.frame.from_chart(Vec2(w.graph.node(i), w.graph.values[i])));
      dev = std::max(dev, std::abs(cross(kEuA, d)));
    }
  }
  o.require(dev <= 1e-8, "System A max node deviation from eigen-line " + sci(dev) + " ≤ 1e-8");

  const NoisePath p36(36, NoiseLaw::uniform_full());
  for (const std::string name : {"A", "C"}) {
    const auto f = make_family(name, {});
    const ChartParams params = default_chart_params(*f, p36);
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 4; ++s) {
      const TorusPoint p(counter_uniform(8, 8, s, 0), counter_uniform(8, 8, s, 1));
      const TorusPoint pm1 = f->inverse(p36.value(0), p);
      const UnstableResult prev = local_unstable_manifold(*f, p36.shift(-1), pm1, 40, params.delta1, params);
      const ChartFrame here = build_chart_frame(*f, p36, p, params, params.n_past, params.n_future);
      const ConnectingMap conn(*f, p36.value(0), prev.graph.frame, here);
      for (int i = 0; i < prev.graph.nodes(); i += 4) {
        for (int j = i + 2; j < prev.graph.nodes(); j += 8) {
          const Vec2 z1(prev.graph.node(i), prev.graph.values[i]);
          const Vec2 z2(prev.graph.node(j), prev.graph.values[j]);
          const double d0 = (z1 - z2).cwiseAbs().maxCoeff();
          const double d1 = (conn.eval(z1) - conn.eval(z2)).cwiseAbs().maxCoeff();
          worst = std::min(worst, d1 / d0);
        }
      }
    }
    const double bound = std::exp(params.lambda()) - params.delta1;
    o.require(worst >= bound, "System " + name + " min leaf expansion " + sci(worst) + " ≥ e^λ − δ1 = " + sci(bound));
  }
  return o;
}

/// Shared System C SRB experiment (criteria 6 and 9).
struct SrbC {
  std::vector<DepthSnapshot> snaps;
  std::vector<std::vector<BandCheck>> bands;
  std::string error;
};

const SrbC& srb_c() {
  static SrbC out = [] {
    SrbC r;
    try {
      const auto f = make_family("C", {{"a", 0.3}});
      const NoisePath path(2024, NoiseLaw::uniform_full());
      const ChartParams params = default_chart_params(*f, path);
      ExperimentConfig cfg;
      cfg.r_star = 0.08;
      cfg.particles = 3500000;
      cfg.depths = {30, 40, 50};
      const SourceTarget st = find_source_target(*f, path, UlamDensity::uniform(32), cfg, params);
      const LeafStack us = reference_u_stack(*f, path, st.p_hat, cfg.r_star, cfg.stack_leaves, cfg.n_past, params);
      for (int n : st.depths) {
        r.snaps.push_back(srb_snapshot(*f, path, st, us, cfg, params, n, false));
        r.bands.push_back(band_checks(*f, path, us, r.snaps.back(), 2, 15, 10000, cfg.n_past, params));
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  }();
  return out;
}

Outcome distortion() {
  Outcome o;
  const auto a = make_system_a();
  const NoisePath path(40, NoiseLaw::uniform_full());
  const ChartParams pa = ChartParams::defaults_for(kLambdaA);
  const LeafStack us = reference_u_stack(*a, path, TorusPoint(0.4, 0.4), 0.09, 5, 40, pa);
  double spread = 0.0;
  for (const Leaf& leaf : us.leaves) {
    const LeafDensityProfile prof = predicted_leaf_density(*a, path, leaf.graph, 15);
    for (double v : prof.log_density) spread = std::max(spread, std::abs(v - prof.log_density[0]));
  }
  o.require(spread == 0.0, "System A log-Jacobian distortion along leaves = " + sci(spread) + " (identically 0)");

  const SrbC& c = srb_c();
  if (!c.error.empty()) {
    o.require(false, "System C experiment failed: " + c.error);
    return o;
  }
  double lo = 1e300, hi = 0.0;
  std::string list;
  for (const DepthSnapshot& s : c.snaps) {
    const double d = s.reports.front().D_bar;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    list += (list.empty() ? "" : ", ") + std::to_string(s.depth) + ": " + sci(d);
  }
  o.require(c.snaps.size() == 3, "retained depths " + std::to_string(c.snaps.size()) + " of {30, 40, 50}");
  o.require(std::isfinite(hi) && hi / lo - 1.0 < 0.10,
            "System C D̄ (" + list + ") varies " + sci(100 * (hi / lo - 1.0)) + "% < 10%");
  return o;
}

Outcome pullback_convergence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t particles = 1000000;
  const UlamDensity leb = UlamDensity::uniform(64);
  const ParticleEnsemble base = sample_from_density(leb, particles, 77);

  const auto a = make_system_a();
  const NoisePath pa(3, NoiseLaw::uniform_full());
  double worst = 0.0;
  for (int n : {0, 10, 20, 30, 40, 50, 60}) {
    worst = std::max(worst, max_binomial_deviation(pullback_pushforward(*a, pa, base, n), UlamDensity::uniform(16)));
  }
  o.require(worst <= 5.0, "System A max cell deviation over depths 0..60 = " + sci(worst) + "σ ≤ 5σ");

  const auto c = make_family("C", {{"a", 0.3}});
  const NoisePath pc(4, NoiseLaw::uniform_full());
  const double floor = weak_distance(base, sample_from_density(leb, particles, 78));
  std::vector<double> dist;
  std::vector<double> prev;
  std::string list;
  for (int n : {1, 2, 3, 5, 10, 20, 40, 60}) {
    const std::vector<double> sig = weak_signature(pullback_pushforward(*c, pc, base, n));
    if (!prev.empty()) {
      dist.push_back(weak_distance(prev, sig));
      list += (list.empty() ? "" : ", ") + sci(dist.back());
    }
    prev = sig;
  }
  o.require(decreasing_to_floor(dist, floor),
            "System C consecutive weak distances (" + list + ") decrease to the Monte Carlo floor " + sci(floor));
  const double dt = seconds_since(t0);
  o.require(dt < 120.0, "10^6 particles, runtime " + sci(dt) + " s < 120 s");
  return o;
}

Outcome leaf_convergence() {
  Outcome o;
  const auto f = make_family("C", {{"a", 0.3}});
  const NoisePath path(2024, NoiseLaw::uniform_full());
  const ChartParams params = default_chart_params(*f, path);
  ExperimentConfig cfg;
  cfg.particles = 200000;
  cfg.depths = {4, 5, 6, 8, 10, 15, 20, 30, 40, 50};
  cfg.min_retained_depths = 3;
  cfg.wn_leaves = 24;
  cfg.levels = 2;
  cfg.min_cell_particles = 100;
  try {
    const SourceTarget st = find_source_target(*f, path, UlamDensity::uniform(32), cfg, params);
    const LeafStack us = reference_u_stack(*f, path, st.p_hat, cfg.r_star, cfg.stack_leaves, cfg.n_past, params);
    std::vector<double> means;
    std::string list;
    for (int n : st.depths) {
      const DepthSnapshot s = srb_snapshot(*f, path, st, us, cfg, params, n);
      double m = 0.0;
      std::size_t k = 0;
      for (double d : s.leaf_distances)
        if (std::isfinite(d)) m += d, ++k;
      means.push_back(k ? m / static_cast<double>(k) : std::numeric_limits<double>::quiet_NaN());
      list += (list.empty() ? "" : ", ") + std::to_string(n) + ": " + sci(means.back());
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < means.size(); ++i) {
      decreasing = decreasing && (means[i] <= means[i - 1] || std::max(means[i], means[i - 1]) <= 1e-12);
    }
    o.require(st.depths.back() == 50, "depth 50 retained");
    o.require(decreasing, "mean Wⁿ–W^u sup distance non-increasing until both values are below 1e-12 (" + list + ")");
    o.require(means.back() <= 1e-3, "final distance " + sci(means.back()) + " ≤ 1e-3");
  } catch (const std::exception& e) {
    o.require(false, std::string("experiment failed: ") + e.what());
  }
  return o;
}

Outcome density_bounds() {
  Outcome o;
  try {
    const auto a = make_system_a();
    const NoisePath path(2024, NoiseLaw::uniform_full());
    const ChartParams pa = ChartParams::defaults_for(kLambdaA);
    ExperimentConfig cfg;
    cfg.r_star = 0.09;
    cfg.particles = 1000000;
    cfg.depths = {30, 40, 50};
    cfg.wn_leaves = 16;
    const SourceTarget st = find_source_target(*a, path, UlamDensity::uniform(32), cfg, pa);
    const LeafStack us = reference_u_stack(*a, path, st.p_hat, cfg.r_star, cfg.stack_leaves, cfg.n_past, pa);
    double worst = 1.0;
    std::size_t cells = 0;
    for (int n : st.depths) {
      const DepthSnapshot s = srb_snapshot(*a, path, st, us, cfg, pa, n, false);
      for (const DensityReport& r : s.reports) {
        if (r.cells_used == 0) continue;
        worst = std::max(worst, r.A);
        cells += r.cells_used;
      }
    }
    o.require(cells > 0 && worst <= 1.1, "System A A = " + sci(worst) + " ≤ 1.1 (" + std::to_string(cells) + " cells)");
  } catch (const std::exception& e) {
    o.require(false, std::string("System A experiment failed: ") + e.what());
  }

  const SrbC& c = srb_c();
  if (!c.error.empty()) {
    o.require(false, "System C experiment failed: " + c.error);
    return o;
  }
  double lo = 1e300, hi = 0.0;
  bool populated = true;
  for (const DepthSnapshot& s : c.snaps) {
    for (const DensityReport& r : s.reports) {
      if (r.level < 3 || r.level > 5) continue;
      populated = populated && r.cells_used > 0;
      if (r.cells_used == 0) continue;
      lo = std::min(lo, r.A);
      hi = std::max(hi, r.A);
    }
  }
  o.require(populated, "every (depth, level 3..5) has cells with ≥ 2000 particles");
  o.require(std::isfinite(hi) && hi / lo - 1.0 <= 0.10,
            "System C A in [" + sci(lo) + ", " + sci(hi) + "], spread " + sci(100 * (hi / lo - 1.0)) + "% ≤ 10%");
  double worst_ks = 0.0;
  std::size_t bands = 0, fewest = std::numeric_limits<std::size_t>::max();
  for (const auto& list : c.bands) {
    for (const BandCheck& b : list) {
      worst_ks = std::max(worst_ks, b.ks);
      fewest = std::min(fewest, b.u.size());
      ++bands;
    }
  }
  o.require(bands > 0 && worst_ks <= 0.05, "max KS " + sci(worst_ks) + " ≤ 0.05 over " + std::to_string(bands) +
                                               " bands (≥ " + std::to_string(bands ? fewest : 0) + " particles each)");
  return o;
}

Outcome entropy_formula() {
  Outcome o;
  const NoisePath path(50, NoiseLaw::uniform_full());
  const EntropyCheck ea = entropy_consistency(*make_system_a(), path, TorusPoint(0.3, 0.7), 100000);
  const double da = std::abs(ea.lambda1 - ea.mean_log_unstable_jacobian);
  o.require(da <= 1e-4 && std::abs(ea.lambda1 - kLambdaA) <= 1e-4, "System A |λ1 − mean log J^u| = " + sci(da) + " ≤ 1e-4");
  const EntropyCheck ec = entropy_consistency(*make_family("C", {{"a", 0.3}}), path, TorusPoint(0.3, 0.7), 100000);
  const double dc = std::abs(ec.lambda1 - ec.mean_log_unstable_jacobian);
  o.require(dc <= 1e-3, "System C |λ1 − mean log J^u| = " + sci(dc) + " ≤ 1e-3");
  return o;
}

Outcome reproducibility() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("rdslab_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const json base = {{"system", {{"name", "C"}, {"params", {{"a", 0.3}}}}},
                     {"seed", 5},
                     {"transport", {{"particles", 50000}, {"depths", {0, 5, 10}}, {"grid", 32}}},
                     {"lyapunov", {{"steps", 5000}}},
                     {"entropy", {{"steps", 5000}}},
                     {"srb", {{"particles", 200000}, {"depths", {20, 30, 40}}, {"wn_leaves", 16}, {"levels", 3},
                              {"min_cell_particles", 200}, {"ks_min_particles", 2000}, {"search_particles", 5000}}}};
  json ball = base;
  ball["system"]["noise"] = "uniform_ball";
  ball["system"]["sigma"] = 0.2;
  write_text(root / "c.json", base.dump());
  write_text(root / "ball.json", ball.dump());
  std::ostringstream log;
  int identical = 0, total = 0;
  for (const std::string cmd : {"stationary", "lyapunov", "pullback", "unstable", "entropy", "srb"}) {
    const std::string cfg = (root / (cmd == "stationary" ? "ball.json" : "c.json")).string();
    CommandOptions first{cfg, (root / (cmd + "_1")).string(), std::nullopt, std::nullopt};
    CommandOptions second{cfg, (root / (cmd + "_2")).string(), std::nullopt, std::nullopt};
    CommandOptions replay{(root / (cmd + "_1") / "manifest.json").string(), (root / (cmd + "_3")).string(), std::nullopt,
                          std::nullopt};
    ++total;
    if (run_command(cmd, first, log) != kExitOk || run_command(cmd, second, log) != kExitOk ||
        run_command(cmd, replay, log) != kExitOk) {
      continue;
    }
    const auto files = [&](const std::string& tag) {
      return json::parse(read_text(root / (cmd + tag) / "manifest.json"))["files"];
    };
    const json f1 = files("_1");
    bool ok = !f1.empty() && f1 == files("_2") && f1 == files("_3");
    for (const auto& entry : f1) {
      const std::string name = entry["path"];
      ok = ok && sha256_file(root / (cmd + "_1") / name) == entry["sha256"].get<std::string>();
    }
    identical += ok;
  }
  fs::remove_all(root);
  o.require(identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                    " stages byte-identical across a rerun and a replay from the manifest");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Lyapunov oracle", lyapunov_oracle},
      {"Oseledets geometry", oseledets_geometry},
      {"Graph-transform contraction", graph_contraction},
      {"Slanted-transform schedule", slanted_schedule},
      {"Unstable-leaf oracle", unstable_leaf_oracle},
      {"Distortion", distortion},
      {"Pullback convergence", pullback_convergence},
      {"Leaf convergence", leaf_convergence},
      {"SRB density bounds", density_bounds},
      {"Entropy formula", entropy_formula},
      {"Reproducibility", reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    failed += !out.pass;
    std::printf("%s %2d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
