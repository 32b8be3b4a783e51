#include <CLI11.hpp>

#include <iostream>

#include "rdslab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Random dynamical systems SRB laboratory on the 2-torus"};
  app.set_version_flag("--version", std::string(RDSLAB_VERSION));
  app.require_subcommand(1);

  rdslab::CommandOptions opts;
  std::int64_t seed = 0;
  int workers = 0;
  for (const std::string& name : rdslab::run_commands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " stage");
    sub->add_option("--config", opts.config_path, "JSON run configuration (or a previous run's manifest.json)")
        ->required();
    sub->add_option("--out", opts.out_dir, "run directory to create (must not exist or be empty)")->required();
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--workers", workers, "override the configured worker count");
  }
  std::string run_dir;
  CLI::App* plot = app.add_subcommand("plot", "render SVG figures for a finished run");
  plot->add_option("run_dir", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rdslab::kExitConfig;
  }

  if (plot->parsed()) return rdslab::plot_command(run_dir, std::cerr);
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count_all() == 0 && !sub->parsed()) continue;
    if (sub->get_option("--seed")->count() > 0) {
      if (seed < 0) {
        std::cerr << "config error: --seed: must be >= 0\n";
        return rdslab::kExitConfig;
      }
      opts.seed = static_cast<std::uint64_t>(seed);
    }
    if (sub->get_option("--workers")->count() > 0) opts.workers = workers;
    return rdslab::run_command(sub->get_name(), opts, std::cerr);
  }
  return rdslab::kExitConfig;
}
