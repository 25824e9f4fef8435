#pragma once

#include "obsid/config.hpp"
#include "obsid/loop.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace obsid {

/// Exit codes shared by the command-line verbs.
enum ExitCode : int {
  exit_ok = 0,
  exit_error = 1,
  exit_stalled = 2,
  exit_replay_mismatch = 3,
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

/// Runs the calibration loop for `config` and writes run.jsonl,
/// posterior_final.csv, summary.csv and pulses.csv into its output directory.
/// `result`, when given, receives the loop result.
int execute_run(const RunConfig& config, std::ostream& out, std::ostream& err, LoopResult* result = nullptr);

int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
            const RunOverrides& overrides = {});

/// Writes a T, fi, theta table for `points` durations evenly spaced over
/// [t_min, t_max] to `output` (default: <output_dir>/fi_scan.csv).
int cmd_fi_scan(const std::filesystem::path& config_path, double t_min, double t_max, int points,
                const std::optional<std::filesystem::path>& output, std::ostream& out, std::ostream& err);

/// Recomputes every posterior from a run log and checks it bit for bit.
int cmd_replay(const std::filesystem::path& run_log_path, std::ostream& out, std::ostream& err);

int cmd_validate_config(const std::filesystem::path& config_path, bool emit, std::ostream& out, std::ostream& err);

}  // namespace obsid
