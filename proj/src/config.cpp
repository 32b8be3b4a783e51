#include "rdslab/config.hpp"

#include <algorithm>
#include <set>

#include "rdslab/errors.hpp"
#include "rdslab/io.hpp"

namespace rdslab {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Walks one JSON object, type-checks requested fields and rejects the rest.
class Section {
public:
  Section(const json& j, std::string path) : path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    obj_ = &j;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_->find(key);
    if (it == obj_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "must be a number");
      out = v->get<double>();
    }
  }

  void number(const std::string& key, std::optional<double>& out) {
    double v = 0.0;
    if (find(key)) {
      number(key, v);
      out = v;
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) out = as_integer<Int>(*v, field(key));
  }

  void integer(const std::string& key, std::optional<int>& out) {
    if (const json* v = find(key)) out = as_integer<int>(*v, field(key));
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "must be a string");
      out = v->get<std::string>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  void point(const std::string& key, std::array<double, 2>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        throw ConfigError(field(key), "must be an array of two numbers");
      }
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }

  void int_list(const std::string& key, std::vector<int>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "must be an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(as_integer<int>((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
      }
    }
  }

  void string_list(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "must be an array of strings");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "must be a string");
        out.push_back((*v)[i].get<std::string>());
      }
    }
  }

  std::optional<Section> child(const std::string& key) {
    if (const json* v = find(key)) return Section(*v, field(key));
    return std::nullopt;
  }

  const json& raw() const { return *obj_; }

  void finish() const {
    for (auto it = obj_->begin(); it != obj_->end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

private:
  template <class Int>
  static Int as_integer(const json& v, const std::string& f) {
    if (v.is_number_integer()) return static_cast<Int>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<Int>(d);
    }
    throw ConfigError(f, "must be an integer");
  }

  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

void parse_system(Section s, SystemConfig& c) {
  s.string("name", c.name);
  require(!c.name.empty(), "system.name", "is required");
  if (auto p = s.child("params")) {
    for (auto it = p->raw().begin(); it != p->raw().end(); ++it) {
      double v = 0.0;
      p->number(it.key(), v);
      c.params[it.key()] = v;
    }
  }
  s.string("noise", c.noise);
  s.number("sigma", c.sigma);
  s.finish();
  static const std::map<std::string, std::set<std::string>> allowed{
      {"A", {}}, {"B", {"epsilon"}}, {"C", {"a"}}, {"translation", {}}};
  auto it = allowed.find(c.name);
  require(it != allowed.end(), "system.name", "unknown system '" + c.name + "' (expected A, B, C or translation)");
  for (const auto& [k, v] : c.params) {
    require(it->second.count(k) > 0, "system.params." + k, "not a parameter of system " + c.name);
  }
  if (c.name == "C" && c.params.count("a")) require(std::abs(c.params["a"]) < 1.0, "system.params.a", "|a| must be < 1");
  make_noise_law(c);
}

void parse_chart(Section s, ChartOverrides& c) {
  s.number("lambda0", c.lambda0);
  s.number("delta0", c.delta0);
  s.number("delta1", c.delta1);
  s.number("delta2", c.delta2);
  s.number("K0_bar", c.K0_bar);
  s.number("r1_bar", c.r1_bar);
  s.integer("horizon", c.horizon);
  s.integer("temper_window", c.temper_window);
  s.integer("n_past", c.n_past);
  s.integer("n_future", c.n_future);
  s.finish();
}

void parse_transport(Section s, TransportConfig& c) {
  s.integer("particles", c.particles);
  s.integer("grid", c.grid);
  s.integer("noise_samples", c.noise_samples);
  s.number("tol", c.tol);
  s.int_list("depths", c.depths);
  s.integer("uniform_grid", c.uniform_grid);
  s.finish();
  require(c.particles >= 1, "transport.particles", "must be >= 1");
  require(c.grid >= 16, "transport.grid", "must be >= 16");
  require(c.noise_samples >= 1000, "transport.noise_samples", "must be >= 1000");
  require(c.tol > 0.0, "transport.tol", "must be positive");
  require(!c.depths.empty(), "transport.depths", "at least one depth is required");
  for (std::size_t i = 0; i < c.depths.size(); ++i) {
    const std::string f = "transport.depths[" + std::to_string(i) + "]";
    require(c.depths[i] >= 0, f, "must be >= 0");
    require(i == 0 || c.depths[i] > c.depths[i - 1], f, "depths must be increasing");
  }
  require(c.uniform_grid >= 2, "transport.uniform_grid", "must be >= 2");
}

void parse_lyapunov(Section s, LyapunovConfig& c) {
  s.integer("steps", c.steps);
  s.integer("transient", c.transient);
  s.integer("trace_points", c.trace_points);
  s.point("start", c.start);
  s.finish();
  require(c.steps >= 1, "lyapunov.steps", "must be >= 1");
  require(c.transient >= 0, "lyapunov.transient", "must be >= 0");
  require(c.trace_points >= 1, "lyapunov.trace_points", "must be >= 1");
}

void parse_unstable(Section s, UnstableConfig& c) {
  s.point("point", c.point);
  s.number("r_star", c.r_star);
  s.integer("leaves", c.leaves);
  s.integer("n_past", c.n_past);
  s.finish();
  require(c.r_star > 0.0 && c.r_star <= 0.1, "unstable.r_star", "must lie in (0, 0.1]");
  require(c.leaves >= 1, "unstable.leaves", "must be >= 1");
  require(c.n_past >= 1, "unstable.n_past", "must be >= 1");
}

void parse_entropy(Section s, EntropyConfig& c) {
  s.integer("steps", c.steps);
  s.point("start", c.start);
  s.finish();
  require(c.steps >= 1000, "entropy.steps", "must be >= 1000");
}

void parse_srb(Section s, SrbRunConfig& c) {
  ExperimentConfig& e = c.experiment;
  s.number("beta0", e.beta0);
  s.number("l0", e.l0);
  s.number("eps_star", e.eps_star);
  s.number("r_star", e.r_star);
  s.number("c_frak", e.c_frak);
  s.int_list("depths", e.depths);
  s.number("alpha0", e.alpha0);
  s.integer("particles", e.particles);
  s.integer("source_candidates", e.source_candidates);
  s.integer("search_particles", e.search_particles);
  s.integer("min_retained_depths", e.min_retained_depths);
  s.integer("stack_leaves", e.stack_leaves);
  s.integer("levels", e.levels);
  s.integer("cube_levels", e.cube_levels);
  s.integer("min_cell_particles", e.min_cell_particles);
  s.integer("wn_leaves", e.wn_leaves);
  s.integer("n_past", e.n_past);
  s.integer("n_trunc", c.n_trunc);
  s.integer("ks_level", c.ks_level);
  s.integer("ks_min_particles", c.ks_min_particles);
  s.integer("good_seeds", c.good_seeds);
  s.finish();
  e.validate();
  require(e.min_retained_depths >= 1, "srb.min_retained_depths", "must be >= 1");
  require(c.n_trunc >= 1, "srb.n_trunc", "must be >= 1");
  require(c.ks_level >= 1 && c.ks_level <= e.levels, "srb.ks_level", "must lie in [1, srb.levels]");
  require(c.ks_min_particles >= 1, "srb.ks_min_particles", "must be >= 1");
  require(c.good_seeds >= 0, "srb.good_seeds", "must be >= 0");
}

void parse_output(Section s, OutputConfig& c) {
  s.string_list("formats", c.formats);
  s.string("ensembles", c.ensembles);
  s.finish();
  for (std::size_t i = 0; i < c.formats.size(); ++i) {
    require(c.formats[i] == "json" || c.formats[i] == "csv", "output.formats[" + std::to_string(i) + "]",
            "must be \"json\" or \"csv\"");
  }
  require(c.ensembles == "all" || c.ensembles == "final" || c.ensembles == "none", "output.ensembles",
          "must be \"all\", \"final\" or \"none\"");
}

template <class T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

bool OutputConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

RunConfig parse_run_config(const json& input) {
  const json* j = &input;
  if (input.is_object() && input.contains("manifest_version")) {
    require(input.contains("config"), "config", "manifest has no recorded config");
    j = &input.at("config");
  }
  RunConfig c;
  Section root(*j, "");
  auto sys = root.child("system");
  require(sys.has_value(), "system", "is required");
  parse_system(*sys, c.system);
  if (auto s = root.child("chart")) parse_chart(*s, c.chart);
  if (auto s = root.child("transport")) parse_transport(*s, c.transport);
  if (auto s = root.child("lyapunov")) parse_lyapunov(*s, c.lyapunov);
  if (auto s = root.child("unstable")) parse_unstable(*s, c.unstable);
  if (auto s = root.child("entropy")) parse_entropy(*s, c.entropy);
  if (auto s = root.child("srb")) parse_srb(*s, c.srb);
  if (auto s = root.child("output")) parse_output(*s, c.output);
  root.integer("seed", c.seed);
  root.integer("workers", c.workers);
  root.finish();
  require(c.workers >= 1, "workers", "must be >= 1");
  c.srb.experiment.seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError("<file>", e.what());
  }
  return parse_run_config(j);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["system"] = {{"name", c.system.name}, {"params", c.system.params}, {"noise", c.system.noise},
                 {"sigma", c.system.sigma}};
  const ChartOverrides& ch = c.chart;
  j["chart"] = {{"lambda0", opt(ch.lambda0)}, {"delta0", opt(ch.delta0)}, {"delta1", opt(ch.delta1)},
                {"delta2", opt(ch.delta2)},   {"K0_bar", opt(ch.K0_bar)}, {"r1_bar", opt(ch.r1_bar)},
                {"horizon", opt(ch.horizon)}, {"temper_window", opt(ch.temper_window)},
                {"n_past", opt(ch.n_past)},   {"n_future", opt(ch.n_future)}};
  const TransportConfig& t = c.transport;
  j["transport"] = {{"particles", t.particles}, {"grid", t.grid},     {"noise_samples", t.noise_samples},
                    {"tol", t.tol},             {"depths", t.depths}, {"uniform_grid", t.uniform_grid}};
  j["lyapunov"] = {{"steps", c.lyapunov.steps},
                   {"transient", c.lyapunov.transient},
                   {"trace_points", c.lyapunov.trace_points},
                   {"start", c.lyapunov.start}};
  j["unstable"] = {{"point", c.unstable.point},
                   {"r_star", c.unstable.r_star},
                   {"leaves", c.unstable.leaves},
                   {"n_past", c.unstable.n_past}};
  j["entropy"] = {{"steps", c.entropy.steps}, {"start", c.entropy.start}};
  const ExperimentConfig& e = c.srb.experiment;
  j["srb"] = {{"beta0", e.beta0},
              {"l0", e.l0},
              {"eps_star", e.eps_star},
              {"r_star", e.r_star},
              {"c_frak", e.c_frak},
              {"depths", e.depths},
              {"alpha0", e.alpha0},
              {"particles", e.particles},
              {"source_candidates", e.source_candidates},
              {"search_particles", e.search_particles},
              {"min_retained_depths", e.min_retained_depths},
              {"stack_leaves", e.stack_leaves},
              {"levels", e.levels},
              {"cube_levels", e.cube_levels},
              {"min_cell_particles", e.min_cell_particles},
              {"wn_leaves", e.wn_leaves},
              {"n_past", e.n_past},
              {"n_trunc", c.srb.n_trunc},
              {"ks_level", c.srb.ks_level},
              {"ks_min_particles", c.srb.ks_min_particles},
              {"good_seeds", c.srb.good_seeds}};
  j["output"] = {{"formats", c.output.formats}, {"ensembles", c.output.ensembles}};
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

std::unique_ptr<MapFamily> make_family(const SystemConfig& s) { return make_family(s.name, s.params); }

NoiseLaw make_noise_law(const SystemConfig& s) { return parse_noise_law(s.noise, s.sigma); }

ChartParams resolve_chart_params(const RunConfig& c, const MapFamily& f, const NoisePath& path) {
  const ChartOverrides& o = c.chart;
  ChartParams p = o.lambda0 ? ChartParams::defaults_for(*o.lambda0) : default_chart_params(f, path);
  if (o.delta0) p.delta0 = *o.delta0;
  if (o.delta1) p.delta1 = *o.delta1;
  if (o.delta2) p.delta2 = *o.delta2;
  if (o.K0_bar) p.K0_bar = *o.K0_bar;
  if (o.r1_bar) p.r1_bar = *o.r1_bar;
  if (o.horizon) p.horizon = *o.horizon;
  if (o.temper_window) p.temper_window = *o.temper_window;
  if (o.n_past) p.n_past = *o.n_past;
  if (o.n_future) p.n_future = *o.n_future;
  p.validate();
  return p;
}

ordered_json to_json(const ChartParams& p) {
  return {{"lambda0", p.lambda0}, {"delta0", p.delta0}, {"delta1", p.delta1},   {"delta2", p.delta2},
          {"horizon", p.horizon}, {"temper_window", p.temper_window},           {"K0_bar", p.K0_bar},
          {"r1_bar", p.r1_bar},   {"n_past", p.n_past}, {"n_future", p.n_future}};
}

}  // namespace rdslab
