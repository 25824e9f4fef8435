#pragma once

#include "obsid/loop.hpp"
#include "obsid/protocol.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace obsid {

struct BackendConfig {
  enum class Kind { simulated, remote };
  Kind kind = Kind::simulated;
  ParameterVector g_true;  // simulated only
  int shots = 1000;
  std::uint64_t seed = 0;  // simulated only
  std::string endpoint;    // remote only
  double timeout_s = 600.0;
};

struct FiScanConfig {
  std::optional<ParameterVector> g;  // defaults to g_true, else the prior mean
  PulseFamily family;
};

/// A fully resolved run description; every default is explicit after parsing.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "obsid_out";
  bool write_optimizer_traces = false;
  ModelSpec model;
  ParameterVector prior_mean;
  Matrix prior_covariance;
  BackendConfig backend;
  LoopConfig loop;
  FiScanConfig fi_scan;

  GaussianDensity prior() const { return GaussianDensity(prior_mean, prior_covariance); }
};

/// Every problem found in a config tree, in document order. Empty means valid.
std::vector<std::string> config_issues(const Json& tree);

/// Throws config_error listing every issue.
RunConfig parse_config(const Json& tree);

/// Canonical tree with all defaults filled in.
Json config_to_json(const RunConfig& config);

/// YAML text <-> JSON tree. Plain scalars become numbers/bools/null when they
/// parse as such; quoted scalars stay strings.
Json yaml_to_json(const std::string& text);
std::string json_to_yaml(const Json& tree);

RunConfig load_config(const std::filesystem::path& path);
Json load_config_tree(const std::filesystem::path& path);
std::string emit_config(const RunConfig& config);

}  // namespace obsid
