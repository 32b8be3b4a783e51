#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdslab/srb.hpp"

namespace rdslab {

struct SystemConfig {
  std::string name;
  std::map<std::string, double> params;
  std::string noise = "uniform_full";
  double sigma = 0.05;
};

/// Chart parameter overrides; unset fields come from the measured defaults.
struct ChartOverrides {
  std::optional<double> lambda0, delta0, delta1, delta2, K0_bar, r1_bar;
  std::optional<int> horizon, temper_window, n_past, n_future;
};

struct TransportConfig {
  std::int64_t particles = 1000000;
  int grid = 64;
  int noise_samples = 1000;
  double tol = 1e-12;
  std::vector<int> depths{0, 10, 20, 30, 40, 50, 60};
  int uniform_grid = 16;  ///< grid of the Monte Carlo uniformity bands
};

struct LyapunovConfig {
  int steps = 10000;
  int transient = 100;
  int trace_points = 100;
  std::array<double, 2> start{0.1234, 0.5678};
};

struct UnstableConfig {
  std::array<double, 2> point{0.3, 0.6};
  double r_star = 0.08;
  int leaves = 17;
  int n_past = 40;
};

struct EntropyConfig {
  int steps = 100000;
  std::array<double, 2> start{0.1234, 0.5678};
};

struct SrbRunConfig {
  ExperimentConfig experiment;
  int n_trunc = 15;
  int ks_level = 2;
  int ks_min_particles = 10000;
  int good_seeds = 0;  ///< > 0 runs the good-seed sweep over this many base seeds
};

struct OutputConfig {
  std::vector<std::string> formats{"json", "csv"};
  std::string ensembles = "all";  ///< all | final | none
  bool wants(const std::string& format) const;
};

struct RunConfig {
  SystemConfig system;
  ChartOverrides chart;
  TransportConfig transport;
  LyapunovConfig lyapunov;
  UnstableConfig unstable;
  EntropyConfig entropy;
  SrbRunConfig srb;
  OutputConfig output;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Validates against the schema; throws ConfigError naming the offending field path.
/// A run manifest is accepted too, in which case its recorded config is used.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Every field, defaults included, in schema order.
nlohmann::ordered_json to_json(const RunConfig& c);

std::unique_ptr<MapFamily> make_family(const SystemConfig& s);
NoiseLaw make_noise_law(const SystemConfig& s);
ChartParams resolve_chart_params(const RunConfig& c, const MapFamily& f, const NoisePath& path);
nlohmann::ordered_json to_json(const ChartParams& p);

}  // namespace rdslab
