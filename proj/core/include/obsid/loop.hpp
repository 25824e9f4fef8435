#pragma once

#include "obsid/backends.hpp"
#include "obsid/cost.hpp"
#include "obsid/error.hpp"
#include "obsid/optimizer.hpp"
#include "obsid/parameter_space.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace obsid {

enum class Termination { target_met, max_iterations, stalled, error };

std::string to_string(Termination t);

struct LoopConfig {
  int max_iterations = 8;
  double target_major_uncertainty = 0.0;  // Hz; 0 disables the target
  std::size_t population_size = 2000;
  CostKind cost_kind = CostKind::apc;
  CostSettings cost;
  std::vector<PulseFamily> families;
  OptimizerConfig optimizer;
  int stall_window = 3;
  double stall_ratio = 0.8;
  bool stop_on_stall = true;

  void validate() const;
};

struct IterationOutput {
  int j = 0;
  std::uint64_t seed = 0;  // iteration seed every stage stream derives from
  OptimizedPulse pulse;
  MeasurementRecord measurement;
  double sigma_used = 0.0;  // sigma entered into the NLL (after floor / inflation)
  bool sigma_inflated = false;
  CovarianceSummary prior;  // moments the iteration started from
  CovarianceSummary posterior;
  Population posterior_population;
  double compression = 1.0;     // lambda_maj(j) / lambda_maj(j-1)
  double duration_ratio = 1.0;  // T(j) / T(j-1); T(0) is the seeded T_prev
  double duration_hint = 0.0;
  DurationWindow window;
  double omega_estimate = 0.0;
  std::size_t presampled = 0;
  std::size_t retained = 0;
  bool stalled = false;
};

struct LoopResult {
  std::vector<IterationOutput> iterations;
  Termination reason = Termination::max_iterations;
  std::optional<ErrorCode> error_code;
  std::string error_message;
  CovarianceSummary prior;
  NllRecord record;
};

/// Hooks used by replay and progress reporting. `pulse_override` may supply
/// the pulse for iteration j instead of running the optimiser.
struct LoopHooks {
  std::function<std::optional<OptimizedPulse>(int j)> pulse_override;
  std::function<void(const IterationOutput&)> on_iteration;
};

LoopResult run_loop(const ModelSpec& model, const GaussianDensity& prior, ExperimentBackend& backend,
                    const LoopConfig& config, std::uint64_t seed, const LoopHooks& hooks = {});

/// True when every compression in the trailing `window` iterations exceeds
/// `ratio`. `history` starts with the prior summary.
bool stall_diagnostic(std::span<const CovarianceSummary> history, int window, double ratio);

struct ProjectionAxes {
  std::optional<ParameterVector> lambda_dev;
  std::optional<ParameterVector> lambda_grad;
};

/// lambda_grad follows the population-mean information direction of `pulse`;
/// lambda_dev points from g_true to the population mean.
ProjectionAxes projection_axes(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                               const std::optional<ParameterVector>& g_true = std::nullopt);

/// Index of the drive-strength parameter used to size Ramsey kicks.
double omega_estimate(const ModelSpec& model, const ParameterVector& mean);

}  // namespace obsid
