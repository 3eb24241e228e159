#include <cstdint>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gdsim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gdsim - wire-scattering trajectory design and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* simulate = app.add_subcommand(
      "simulate", "integrate both branches and write trajectories + report");
  add_common(simulate);

  CLI::App* design = app.add_subcommand(
      "design", "design the splitting current and solve the side-wire current");
  add_common(design);

  CLI::App* sensitivity = app.add_subcommand(
      "sensitivity", "current-fluctuation limits and Monte Carlo deviation check");
  add_common(sensitivity);
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  sensitivity->add_option("--seed", seed, "override fluctuation.seed");
  sensitivity->add_option("--samples", samples, "override fluctuation.samples");

  CLI::App* analytics = app.add_subcommand(
      "analytics", "evaluate the closed-form results for the configured scenario");
  add_common(analytics);

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return gdsim::cli::cmd_simulate(config_path, out_dir);
  if (design->parsed()) return gdsim::cli::cmd_design(config_path, out_dir);
  if (sensitivity->parsed()) {
    return gdsim::cli::cmd_sensitivity(config_path, out_dir, seed, samples);
  }
  if (analytics->parsed()) return gdsim::cli::cmd_analytics(config_path, out_dir);
  return gdsim::cli::kExitConfig;
}
