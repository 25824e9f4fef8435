#include "obsid/commands.hpp"
#include "obsid/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"obsid: closed-loop Bayesian Hamiltonian parameter calibration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "obsid 0.1.0");

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "run the calibration loop");
  run->add_option("config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--output-dir", out_dir, "override output.dir");

  double t_min = 0.0, t_max = 0.0;
  int points = 200;
  std::optional<std::string> scan_out;
  auto* scan = app.add_subcommand("fi-scan", "tabulate Fisher information against pulse duration");
  scan->add_option("config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
  scan->add_option("--t-min", t_min, "shortest duration [s]")->required();
  scan->add_option("--t-max", t_max, "longest duration [s]")->required();
  scan->add_option("--points", points, "number of durations")->capture_default_str();
  scan->add_option("-o,--output", scan_out, "CSV path (default <output.dir>/fi_scan.csv)");

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "recompute posteriors from a run log and compare");
  replay->add_option("run_log", log_path, "run.jsonl")->required()->check(CLI::ExistingFile);

  bool emit = false;
  auto* validate = app.add_subcommand("validate-config", "check a configuration file");
  validate->add_option("config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
  validate->add_flag("--emit", emit, "print the canonical configuration with defaults filled in");

  CLI11_PARSE(app, argc, argv);

  if (*run) return obsid::cmd_run(config, std::cout, std::cerr, {seed, out_dir ? std::optional<std::filesystem::path>(*out_dir) : std::nullopt});
  if (*scan) {
    std::optional<std::filesystem::path> path;
    if (scan_out) path = *scan_out;
    return obsid::cmd_fi_scan(config, t_min, t_max, points, path, std::cout, std::cerr);
  }
  if (*replay) return obsid::cmd_replay(log_path, std::cout, std::cerr);
  if (*validate) return obsid::cmd_validate_config(config, emit, std::cout, std::cerr);
  return 1;
}
