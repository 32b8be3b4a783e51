#include "rdslab/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <regex>

#include "rdslab/config.hpp"
#include "rdslab/errors.hpp"
#include "rdslab/io.hpp"
#include "rdslab/svg.hpp"

namespace rdslab {

using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kStationaryStream = 0x51a7;
constexpr std::uint64_t kSampleStream = 0x5a3b;
constexpr std::uint64_t kFloorStream = 0xf100;
constexpr double kUniformBand = 5.0;

std::string depth_tag(int n) { return "d" + std::to_string(n); }

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

/// One run directory: collects outputs, stage timings and results, and writes the manifest.
class Run {
public:
  Run(std::string command, RunConfig config, fs::path dir)
      : command_(std::move(command)), config_(std::move(config)), dir_(std::move(dir)) {}

  const RunConfig& config() const { return config_; }
  ordered_json& results() { return results_; }

  /// Path of an output file; the file is checksummed when the manifest is written.
  fs::path file(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  template <class Fn>
  auto stage(const std::string& name, Fn&& fn) {
    current_ = name;
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto out = fn();
      finish();
      return out;
    }
  }

  void set_chart(const ChartParams& p) { chart_ = to_json(p); }

  void write_manifest(const std::string& status, const ordered_json& error) {
    ordered_json m;
    m["manifest_version"] = 1;
    m["command"] = command_;
    m["code_version"] = RDSLAB_VERSION;
    m["status"] = status;
    if (!error.is_null()) m["error"] = error;
    m["config"] = to_json(config_);
    m["seeds"] = {{"seed", config_.seed},
                  {"noise_seed", config_.seed},
                  {"stationary_seed", mix64(config_.seed ^ kStationaryStream)},
                  {"sample_seed", mix64(config_.seed ^ kSampleStream)}};
    if (!chart_.is_null()) m["resolved_chart"] = chart_;
    m["results"] = results_;
    ordered_json t = ordered_json::object();
    for (const auto& [k, v] : timings_) t[k] = v;
    m["timings_seconds"] = t;
    std::vector<std::string> names = files_;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    ordered_json list = ordered_json::array();
    for (const auto& n : names) {
      const fs::path p = dir_ / n;
      if (!fs::exists(p)) continue;
      list.push_back({{"path", n}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    m["files"] = list;
    write_json(dir_ / "manifest.json", m);
  }

  const std::string& current_stage() const { return current_; }

private:
  std::string command_;
  RunConfig config_;
  fs::path dir_;
  ordered_json results_ = ordered_json::object();
  ordered_json chart_;
  std::vector<std::string> files_;
  std::map<std::string, double> timings_;
  std::string current_ = "setup";
};

struct Setup {
  std::unique_ptr<MapFamily> f;
  NoiseLaw law;
  NoisePath path;
};

Setup make_setup(const RunConfig& c) {
  Setup s;
  s.f = make_family(c.system);
  s.law = make_noise_law(c.system);
  s.path = NoisePath(c.seed, s.law);
  return s;
}

/// Leb is exactly stationary under full uniform noise; otherwise the Ulam estimate is used.
UlamDensity stationary_for(Run& run, const Setup& s) {
  const RunConfig& c = run.config();
  if (s.law.kind == NoiseKind::UniformFull) {
    run.results()["stationary_source"] = "exact-uniform";
    return UlamDensity::uniform(c.transport.grid);
  }
  const StationaryResult r = run.stage("stationary", [&] {
    return estimate_stationary(*s.f, s.law, c.transport.grid, c.transport.noise_samples, c.transport.tol,
                               mix64(c.seed ^ kStationaryStream));
  });
  run.results()["stationary_source"] = "ulam-estimate";
  if (run.config().output.wants("csv")) write_density_csv(run.file("stationary_density.csv"), r.density);
  return r.density;
}

TorusPoint point_of(const std::array<double, 2>& a) { return TorusPoint(a[0], a[1]); }

void cmd_stationary(Run& run) {
  const RunConfig& c = run.config();
  const Setup s = make_setup(c);
  const StationaryResult r = run.stage("stationary", [&] {
    return estimate_stationary(*s.f, s.law, c.transport.grid, c.transport.noise_samples, c.transport.tol,
                               mix64(c.seed ^ kStationaryStream));
  });
  if (c.output.wants("csv")) write_density_csv(run.file("density.csv"), r.density);
  ordered_json j = {{"grid", c.transport.grid},
                    {"noise_samples", c.transport.noise_samples},
                    {"iterations", r.iterations},
                    {"residual", r.residual},
                    {"contraction_estimate", r.contraction_estimate},
                    {"max_row_sum_error", r.op.max_row_sum_error()},
                    {"min_density", r.density.min_density()},
                    {"max_density", r.density.max_density()},
                    {"l1_to_uniform", l1_distance(r.density, UlamDensity::uniform(c.transport.grid))}};
  if (c.output.wants("json")) write_json(run.file("stationary.json"), j);
  run.results() = j;
}

void cmd_lyapunov(Run& run) {
  const RunConfig& c = run.config();
  const Setup s = make_setup(c);
  QrOptions opts;
  opts.transient = c.lyapunov.transient;
  opts.trace_points = c.lyapunov.trace_points;
  const ExponentReport rep =
      run.stage("lyapunov", [&] { return lyapunov_qr(*s.f, s.path, point_of(c.lyapunov.start), c.lyapunov.steps, opts); });
  ordered_json j = {{"lambda1", rep.lambda1},
                    {"lambda2", rep.lambda2},
                    {"sum", rep.lambda1 + rep.lambda2},
                    {"mean_log_det", rep.mean_log_det},
                    {"n_steps", rep.n_steps},
                    {"transient", rep.transient}};
  if (c.output.wants("json")) write_json(run.file("lyapunov.json"), j);
  if (c.output.wants("csv")) {
    CsvWriter csv({"lambda1", "lambda2", "mean_log_det", "n_steps", "transient"});
    csv.row({format_double(rep.lambda1), format_double(rep.lambda2), format_double(rep.mean_log_det),
             std::to_string(rep.n_steps), std::to_string(rep.transient)});
    csv.save(run.file("lyapunov.csv"));
  }
  CsvWriter trace({"step", "lambda1", "lambda2"});
  for (const auto& t : rep.convergence_trace) {
    trace.row({format_double(t[0]), format_double(t[1]), format_double(t[2])});
  }
  trace.save(run.file("lyapunov_trace.csv"));
  run.results() = j;
}

void cmd_pullback(Run& run) {
  const RunConfig& c = run.config();
  const TransportConfig& t = c.transport;
  const Setup s = make_setup(c);
  const UlamDensity psi = stationary_for(run, s);
  const auto n_particles = static_cast<std::size_t>(t.particles);
  const ParticleEnsemble base =
      run.stage("sample", [&] { return sample_from_density(psi, n_particles, mix64(c.seed ^ kSampleStream)); });
  const double floor = run.stage("floor", [&] {
    return weak_distance(base, sample_from_density(psi, n_particles, mix64(c.seed ^ kFloorStream)));
  });
  const bool check_uniform = s.f->volume_preserving() && s.law.kind == NoiseKind::UniformFull;
  const UlamDensity uniform = UlamDensity::uniform(t.uniform_grid);

  CsvWriter trace({"depth", "weak_distance_to_previous", "uniform_max_deviation"});
  std::vector<double> distances;
  std::vector<double> previous;
  double worst_dev = 0.0;
  ordered_json per_depth = ordered_json::array();
  for (std::size_t k = 0; k < t.depths.size(); ++k) {
    const int n = t.depths[k];
    const ParticleEnsemble e = run.stage("depth_" + std::to_string(n), [&] {
      return pullback_pushforward(*s.f, s.path, base, n);
    });
    const std::vector<double> sig = weak_signature(e);
    const double dist = previous.empty() ? std::numeric_limits<double>::quiet_NaN() : weak_distance(previous, sig);
    if (!previous.empty()) distances.push_back(dist);
    previous = sig;
    const double dev = check_uniform ? max_binomial_deviation(e, uniform) : std::numeric_limits<double>::quiet_NaN();
    if (check_uniform) worst_dev = std::max(worst_dev, dev);
    trace.row({std::to_string(n), std::isnan(dist) ? "" : format_double(dist), std::isnan(dev) ? "" : format_double(dev)});
    const bool write = c.output.ensembles == "all" || (c.output.ensembles == "final" && k + 1 == t.depths.size());
    if (write) {
      write_ensemble(run.file("ensemble_" + depth_tag(n) + ".bin"), e,
                     {{"system", c.system.name}, {"seed", c.seed}, {"depth", n}});
      run.file("ensemble_" + depth_tag(n) + ".bin.json");
    }
    if (c.output.wants("csv")) write_density_csv(run.file("density_" + depth_tag(n) + ".csv"), ulam_projection(e, t.grid));
    ordered_json d = {{"depth", n}};
    if (!std::isnan(dist)) d["weak_distance_to_previous"] = dist;
    if (check_uniform) d["uniform_max_deviation"] = dev;
    per_depth.push_back(d);
  }
  trace.save(run.file("pullback_trace.csv"));
  ordered_json j = {{"particles", t.particles},
                    {"depths", t.depths},
                    {"per_depth", per_depth},
                    {"monte_carlo_floor", floor},
                    {"decreasing", decreasing_to_floor(distances, floor)}};
  if (check_uniform) {
    j["uniform_band_sigma"] = kUniformBand;
    j["uniform_max_deviation"] = worst_dev;
    j["uniform_within_bands"] = worst_dev <= kUniformBand;
  }
  if (c.output.wants("json")) write_json(run.file("pullback.json"), j);
  run.results() = j;
}

void cmd_unstable(Run& run) {
  const RunConfig& c = run.config();
  const UnstableConfig& u = c.unstable;
  const Setup s = make_setup(c);
  const ChartParams params = run.stage("chart", [&] { return resolve_chart_params(c, *s.f, s.path); });
  run.set_chart(params);
  const TorusPoint p = point_of(u.point);
  const LeafStack stack =
      run.stage("stack", [&] { return reference_u_stack(*s.f, s.path, p, u.r_star, u.leaves, u.n_past, params); });
  write_leaf_csv(run.file("leaves.csv"), stack, "u");
  FrameOptions fo;
  fo.kind = FrameKind::Geometric;
  fo.geometric_radius = u.r_star;
  const UnstableResult local =
      run.stage("local", [&] { return local_unstable_manifold(*s.f, s.path, p, u.n_past, u.r_star, params, fo); });
  ordered_json leaves = ordered_json::array();
  double max_lip = 0.0;
  for (const Leaf& leaf : stack.leaves) {
    leaves.push_back({{"id", leaf.id}, {"intercept", leaf.intercept}, {"lip", leaf.graph.lip}});
    max_lip = std::max(max_lip, leaf.graph.lip);
  }
  const Vec2 eu = local.graph.frame.split.e_u;
  ordered_json j = {{"point", u.point},
                    {"r_star", u.r_star},
                    {"n_past", u.n_past},
                    {"local_manifold",
                     {{"direction", {eu.x(), eu.y()}},
                      {"slope_at_origin", local.graph.slope_at_origin()},
                      {"lip", local.graph.lip},
                      {"max_abs", local.graph.max_abs()},
                      {"last_increment", local.last_increment}}},
                    {"leaf_count", stack.leaves.size()},
                    {"max_leaf_lip", max_lip},
                    {"leaves", leaves},
                    {"rejections", stack.rejections}};
  if (c.output.wants("json")) write_json(run.file("unstable.json"), j);
  j.erase("leaves");
  run.results() = j;
}

void cmd_entropy(Run& run) {
  const RunConfig& c = run.config();
  const Setup s = make_setup(c);
  const EntropyCheck e = run.stage(
      "entropy", [&] { return entropy_consistency(*s.f, s.path, point_of(c.entropy.start), c.entropy.steps); });
  ordered_json j = {{"steps", c.entropy.steps},
                    {"lambda1_positive", std::max(e.lambda1, 0.0)},
                    {"lambda1", e.lambda1},
                    {"mean_log_unstable_jacobian", e.mean_log_unstable_jacobian},
                    {"difference", std::abs(std::max(e.lambda1, 0.0) - e.mean_log_unstable_jacobian)}};
  if (c.output.wants("json")) write_json(run.file("entropy.json"), j);
  run.results() = j;
}

struct Spread {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return hi < lo; }
  double relative() const { return empty() || lo <= 0.0 ? std::numeric_limits<double>::quiet_NaN() : hi / lo - 1.0; }
};

void cmd_srb(Run& run) {
  const RunConfig& c = run.config();
  const ExperimentConfig& cfg = c.srb.experiment;
  const Setup s = make_setup(c);
  const UlamDensity psi = stationary_for(run, s);
  const ChartParams params = run.stage("chart", [&] { return resolve_chart_params(c, *s.f, s.path); });
  run.set_chart(params);
  ordered_json& res = run.results();

  const SourceTarget st = run.stage("source_target", [&] { return find_source_target(*s.f, s.path, psi, cfg, params); });
  res["source_target"] = {{"p_minus", {st.p_minus.x(), st.p_minus.y()}},
                          {"p_hat", {st.p_hat.x(), st.p_hat.y()}},
                          {"c_star", st.c_star},
                          {"l0", st.l0},
                          {"alpha0", st.alpha0},
                          {"sources_tried", st.sources_tried},
                          {"retained_depths", st.depths},
                          {"masses", st.masses}};

  const LeafStack us = run.stage(
      "u_stack", [&] { return reference_u_stack(*s.f, s.path, st.p_hat, cfg.r_star, cfg.stack_leaves, cfg.n_past, params); });
  write_leaf_csv(run.file("leaves_u.csv"), us, "u");

  const bool csv = c.output.wants("csv");
  CsvWriter summary({"depth", "level", "A", "D_bar", "cells_used", "insufficient", "retained_fraction"});
  CsvWriter ratios({"depth", "level", "cell", "cube_level", "cube", "ratio", "leb_hat", "cell_count"});
  CsvWriter distortion({"depth", "leaf", "intercept", "log_range"});
  CsvWriter distances({"depth", "leaf", "sup_distance"});
  CsvWriter bands({"depth", "cell", "lo", "hi", "count", "ks", "D"});
  Spread a_spread, d_spread;
  double worst_ks = 0.0;
  std::size_t ks_bands = 0;
  ordered_json per_depth = ordered_json::array();
  const double psi_max = psi.max_density();

  for (int n : st.depths) {
    const DepthSnapshot snap =
        run.stage("depth_" + std::to_string(n), [&] { return srb_snapshot(*s.f, s.path, st, us, cfg, params, n); });
    const std::string tag = depth_tag(n);
    ordered_json levels = ordered_json::array();
    for (const DensityReport& rep : snap.reports) {
      summary.row({std::to_string(n), std::to_string(rep.level), format_double(rep.A), format_double(rep.D_bar),
                   std::to_string(rep.cells_used), std::to_string(rep.insufficient.size()),
                   format_double(snap.partition.retained_fraction(rep.level))});
      for (const DensityRatio& r : rep.ratios) {
        ratios.row({std::to_string(n), std::to_string(r.level), std::to_string(r.cell), std::to_string(r.cube_level),
                    std::to_string(r.cube), format_double(r.ratio), format_double(r.leb_hat),
                    std::to_string(r.cell_count)});
      }
      if (rep.level >= 3 && rep.cells_used > 0) a_spread.add(rep.A);
      levels.push_back({{"level", rep.level}, {"A", rep.A}, {"cells_used", rep.cells_used}});
    }
    const double d_bar = snap.reports.empty() ? 0.0 : snap.reports.front().D_bar;
    if (!snap.reports.empty()) {
      for (const LeafDistortion& d : snap.reports.front().distortion) {
        distortion.row({std::to_string(n), std::to_string(d.leaf), format_double(d.intercept), format_double(d.log_range)});
      }
    }
    d_spread.add(d_bar);
    double mean_dist = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < snap.leaf_distances.size(); ++i) {
      const double d = snap.leaf_distances[i];
      distances.row({std::to_string(n), std::to_string(i), std::isnan(d) ? "" : format_double(d)});
      if (!std::isnan(d)) mean_dist += d, ++counted;
    }
    if (counted) mean_dist /= static_cast<double>(counted);
    write_leaf_csv(run.file("leaves_n_" + tag + ".csv"), snap.wn_stack, "n");

    const std::vector<BandCheck> checks = run.stage("bands_" + std::to_string(n), [&] {
      return band_checks(*s.f, s.path, us, snap, c.srb.ks_level, c.srb.n_trunc,
                         static_cast<std::size_t>(c.srb.ks_min_particles), cfg.n_past, params);
    });
    CsvWriter hist({"band", "series", "u_lo", "u_hi", "density"});
    double depth_ks = 0.0;
    for (const BandCheck& b : checks) {
      bands.row({std::to_string(n), std::to_string(b.cell), format_double(b.lo), format_double(b.hi),
                 std::to_string(b.u.size()), format_double(b.ks), format_double(b.predicted.lipschitz_D)});
      depth_ks = std::max(depth_ks, b.ks);
      const int bins = 32;
      const double r = us.r_star;
      std::vector<double> counts(bins, 0.0);
      for (double u : b.u) counts[std::clamp(static_cast<int>((u + r) / (2 * r) * bins), 0, bins - 1)] += 1.0;
      const double width = 2 * r / bins;
      for (int k = 0; k < bins; ++k) {
        hist.row({std::to_string(b.cell), "empirical", format_double(-r + k * width), format_double(-r + (k + 1) * width),
                  format_double(counts[k] / (static_cast<double>(b.u.size()) * width))});
      }
      for (std::size_t k = 0; k < b.predicted.u.size(); ++k) {
        hist.row({std::to_string(b.cell), "predicted", format_double(b.predicted.u[k]), format_double(b.predicted.u[k]),
                  format_double(b.predicted.density[k])});
      }
    }
    if (csv) hist.save(run.file("hist_" + tag + ".csv"));
    worst_ks = std::max(worst_ks, depth_ks);
    ks_bands += checks.size();

    const double sample_mass = snap.sample.total_mass();
    if (c.output.ensembles == "all" || (c.output.ensembles == "final" && n == st.depths.back())) {
      write_ensemble(run.file("landed_" + tag + ".bin"), snap.landed,
                     {{"system", c.system.name}, {"seed", c.seed}, {"depth", n}});
      run.file("landed_" + tag + ".bin.json");
    }
    per_depth.push_back({{"depth", n},
                         {"pushed", snap.pushed},
                         {"pushed_mass", snap.pushed_mass},
                         {"landed", snap.landed.size()},
                         {"box_mass", sample_mass},
                         {"mass_lower_bound", st.alpha0 / (6.0 * psi_max) * st.c_star},
                         {"wn_leaves", snap.wn_stack.leaves.size()},
                         {"wn_rejections", snap.wn_stack.rejections.size()},
                         {"mean_leaf_distance", mean_dist},
                         {"D_bar", d_bar},
                         {"levels", levels},
                         {"ks_bands", checks.size()},
                         {"max_ks", depth_ks}});
  }
  if (csv) {
    summary.save(run.file("summary.csv"));
    ratios.save(run.file("density_report.csv"));
    distortion.save(run.file("distortion.csv"));
    distances.save(run.file("leaf_distances.csv"));
    bands.save(run.file("bands.csv"));
  }
  res["per_depth"] = per_depth;
  res["A_range_levels_3_plus"] = a_spread.empty() ? ordered_json(nullptr) : ordered_json({a_spread.lo, a_spread.hi});
  res["A_relative_spread"] = a_spread.empty() ? ordered_json(nullptr) : ordered_json(a_spread.relative());
  res["D_bar_range"] = {d_spread.lo, d_spread.hi};
  res["D_bar_relative_spread"] = d_spread.relative();
  res["max_ks"] = worst_ks;
  res["ks_bands"] = ks_bands;

  if (c.srb.good_seeds > 0) {
    const GoodSetReport g = run.stage("good_seeds", [&] {
      return good_seed_fraction(*s.f, s.law, psi, cfg, params, c.srb.good_seeds);
    });
    res["good_seeds"] = {{"tried", g.tried}, {"passed", g.passed}, {"fraction", g.fraction}, {"bound", g.bound}};
  }
  if (c.output.wants("json")) write_json(run.file("srb.json"), res);
}

using CommandFn = std::function<void(Run&)>;

const std::map<std::string, CommandFn>& registry() {
  static const std::map<std::string, CommandFn> r{{"stationary", cmd_stationary}, {"lyapunov", cmd_lyapunov},
                                                   {"pullback", cmd_pullback},     {"unstable", cmd_unstable},
                                                   {"srb", cmd_srb},               {"entropy", cmd_entropy}};
  return r;
}

}  // namespace

const std::vector<std::string>& run_commands() {
  static const std::vector<std::string> names{"stationary", "lyapunov", "pullback", "unstable", "srb", "entropy"};
  return names;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log) {
  auto it = registry().find(name);
  if (it == registry().end()) {
    log << "error: unknown command '" << name << "'\n";
    return kExitConfig;
  }
  RunConfig config;
  fs::path dir(opts.out_dir);
  try {
    config = load_run_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed, config.srb.experiment.seed = *opts.seed;
    if (opts.workers) {
      if (*opts.workers < 1) throw ConfigError("--workers", "must be >= 1");
      config.workers = *opts.workers;
    }
    if (opts.out_dir.empty()) throw ConfigError("--out", "a run directory is required");
    if (fs::exists(dir) && (!fs::is_directory(dir) || !fs::is_empty(dir))) {
      throw ConfigError("--out", "'" + dir.string() + "' exists and is not an empty directory");
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  fs::create_directories(dir);
  omp_set_num_threads(config.workers);

  Run run(name, config, dir);
  try {
    it->second(run);
  } catch (const ConfigError& e) {
    run.write_manifest("config-error", {{"kind", e.kind()}, {"field", e.field()}, {"message", e.what()}});
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    run.write_manifest("failed", {{"kind", e.kind()}, {"stage", run.current_stage()}, {"message", e.what()}});
    log << "numerical failure in stage " << run.current_stage() << ": " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    run.write_manifest("failed", {{"kind", "exception"}, {"stage", run.current_stage()}, {"message", e.what()}});
    log << "failure in stage " << run.current_stage() << ": " << e.what() << "\n";
    return kExitNumerical;
  }
  run.write_manifest("ok", nullptr);
  log << name << ": wrote " << (dir / "manifest.json").string() << "\n";
  return kExitOk;
}

namespace {

std::vector<fs::path> matching(const fs::path& dir, const std::string& pattern) {
  const std::regex re(pattern);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && std::regex_match(entry.path().filename().string(), re)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<double>> grid_of(const UlamDensity& d) {
  std::vector<std::vector<double>> g(static_cast<std::size_t>(d.m));
  for (int iy = 0; iy < d.m; ++iy)
    for (int ix = 0; ix < d.m; ++ix) g[iy].push_back(d.cells[static_cast<std::size_t>(iy * d.m + ix)] * d.m * d.m);
  return g;
}

std::vector<svg::Polyline> leaf_curves(const CsvTable& t, const std::string& color) {
  std::map<std::string, svg::Polyline> by_leaf;
  const int leaf = t.column("leaf"), u = t.column("u"), v = t.column("v");
  for (const auto& row : t.rows) {
    svg::Polyline& p = by_leaf[row[leaf]];
    p.color = color;
    p.x.push_back(std::stod(row[u]));
    p.y.push_back(std::stod(row[v]));
  }
  std::vector<svg::Polyline> out;
  for (auto& [k, p] : by_leaf) out.push_back(std::move(p));
  return out;
}

}  // namespace

int plot_command(const std::string& run_dir, std::ostream& log) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) {
    log << "plot error: run directory '" << run_dir << "' does not exist\n";
    return kExitConfig;
  }
  std::vector<std::pair<std::string, std::string>> figures;
  try {
    for (const auto& p : matching(dir, "(stationary_)?density(_d[0-9]+)?\\.csv")) {
      figures.emplace_back(p.stem().string() + ".svg", svg::heatmap(grid_of(read_density_csv(p)), p.stem().string()));
    }
    if (fs::exists(dir / "leaves.csv")) {
      figures.emplace_back("leaves.svg", svg::lines(leaf_curves(read_csv(dir / "leaves.csv"), "#1f4e79"),
                                                    "unstable leaves over the box", "u", "v"));
    }
    if (fs::exists(dir / "leaves_u.csv")) {
      const auto wu = leaf_curves(read_csv(dir / "leaves_u.csv"), "#bbbbbb");
      for (const auto& p : matching(dir, "leaves_n_d[0-9]+\\.csv")) {
        std::vector<svg::Polyline> curves = wu;
        for (auto& c : leaf_curves(read_csv(p), "#d62728")) {
          c.width = 0.6;
          curves.push_back(std::move(c));
        }
        const std::string tag = p.stem().string().substr(9);
        figures.emplace_back("leaf_overlay_" + tag + ".svg",
                             svg::lines(curves, "W^u stack (grey) and W^n leaves (red), " + tag, "u", "v"));
      }
    }
    for (const auto& p : matching(dir, "hist_d[0-9]+\\.csv")) {
      const CsvTable t = read_csv(p);
      std::map<std::string, svg::HistogramPanel> panels;
      const int band = t.column("band"), series = t.column("series"), lo = t.column("u_lo"), hi = t.column("u_hi"),
                dens = t.column("density");
      for (const auto& row : t.rows) {
        svg::HistogramPanel& panel = panels[row[band]];
        panel.title = "band " + row[band];
        if (row[series] == "empirical") {
          if (panel.edges.empty()) panel.edges.push_back(std::stod(row[lo]));
          panel.edges.push_back(std::stod(row[hi]));
          panel.heights.push_back(std::stod(row[dens]));
        } else {
          panel.curve_x.push_back(std::stod(row[lo]));
          panel.curve_y.push_back(std::stod(row[dens]));
        }
      }
      std::vector<svg::HistogramPanel> list;
      for (auto& [k, v] : panels) list.push_back(std::move(v));
      figures.emplace_back(p.stem().string() + ".svg", svg::histogram_panels(list, 2));
    }
    if (fs::exists(dir / "summary.csv")) {
      const CsvTable t = read_csv(dir / "summary.csv");
      const auto depth = t.numbers("depth"), level = t.numbers("level"), A = t.numbers("A"), D = t.numbers("D_bar");
      std::map<int, svg::Polyline> by_level;
      svg::Polyline dbar;
      dbar.color = "#2ca02c";
      static const char* colors[] = {"#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
      for (std::size_t i = 0; i < depth.size(); ++i) {
        svg::Polyline& p = by_level[static_cast<int>(level[i])];
        p.color = colors[static_cast<std::size_t>(level[i]) % 6];
        p.x.push_back(depth[i]);
        p.y.push_back(A[i]);
        if (level[i] == 1.0) {
          dbar.x.push_back(depth[i]);
          dbar.y.push_back(D[i]);
        }
      }
      std::vector<svg::Polyline> curves;
      for (auto& [k, v] : by_level) curves.push_back(std::move(v));
      figures.emplace_back("A_vs_depth.svg", svg::lines(curves, "A by partition level", "depth", "A"));
      figures.emplace_back("D_bar_vs_depth.svg", svg::lines({dbar}, "distortion D_bar", "depth", "D_bar"));
    }
    for (const auto& [csv, title, y] :
         {std::tuple<std::string, std::string, std::string>{"pullback_trace.csv", "consecutive-depth weak distance",
                                                            "weak_distance_to_previous"},
          {"lyapunov_trace.csv", "running lambda1", "lambda1"}}) {
      if (!fs::exists(dir / csv)) continue;
      const CsvTable t = read_csv(dir / csv);
      svg::Polyline p;
      const int xc = 0, yc = t.column(y);
      for (const auto& row : t.rows) {
        if (row.size() <= static_cast<std::size_t>(yc) || row[yc].empty()) continue;
        p.x.push_back(std::stod(row[xc]));
        p.y.push_back(std::stod(row[yc]));
      }
      figures.emplace_back(fs::path(csv).stem().string() + ".svg", svg::lines({p}, title, t.header[0], y));
    }
  } catch (const std::exception& e) {
    log << "plot error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (figures.empty()) {
    log << "plot error: no plottable inputs in '" << run_dir << "'. Expected one of: density.csv, density_d<N>.csv, "
        << "stationary_density.csv, leaves.csv, leaves_u.csv with leaves_n_d<N>.csv, hist_d<N>.csv, summary.csv, "
        << "pullback_trace.csv, lyapunov_trace.csv\n";
    return kExitConfig;
  }
  const fs::path out = dir / "figures";
  fs::create_directories(out);
  for (const auto& [name, body] : figures) write_text(out / name, body);
  log << "plot: wrote " << figures.size() << " figures to " << out.string() << "\n";
  return kExitOk;
}

}  // namespace rdslab
