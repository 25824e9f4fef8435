#pragma once

#include "obsid/cost.hpp"
#include "obsid/pulses.hpp"
#include "obsid/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace obsid {

enum class SearchMethod { automatic, nelder_mead, differential_evolution };

std::string to_string(SearchMethod method);
SearchMethod search_method_from_string(const std::string& name);

struct OptimizerConfig {
  int restarts = 8;
  int budget = 300;  // cost evaluations per restart
  SearchMethod method = SearchMethod::automatic;
  std::uint64_t seed = 0;
  double jitter = 0.3;  // relative duration jitter of restarts >= 1

  void validate() const;
};

/// Result of one bounded local search.
struct SearchResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  std::vector<double> best_trace;  // best-so-far after each evaluation
};

using Objective = std::function<double(std::span<const double>)>;

/// Box-constrained Nelder-Mead (adaptive coefficients) in the unit cube.
SearchResult nelder_mead(const Objective& f, std::span<const double> x0, std::span<const Bounds> bounds, int budget);

/// rand/1/bin differential evolution; x0 is injected as the first member.
SearchResult differential_evolution(const Objective& f, std::span<const double> x0, std::span<const Bounds> bounds,
                                    int budget, Rng& rng);

struct RestartTrace {
  std::string family_tag;
  int restart = 0;
  std::vector<double> best_trace;
  double final_cost = 0.0;
  std::string failure;  // non-empty when every evaluation failed
};

struct OptimizedPulse {
  PulseChoice choice;
  double cost = 0.0;
  std::string family_tag;
  int evaluations_used = 0;
  std::vector<RestartTrace> traces;
};

using PulseCost = std::function<double(const ControlWaveform&)>;

/// Minimises `cost` over every family's box-constrained variables and returns
/// the global best. Restart 0 starts from the canonical pulse at the duration
/// hint; later restarts jitter the duration by +/- config.jitter and draw
/// amplitudes/phases uniformly. Cost evaluations that throw count as +inf.
OptimizedPulse optimize_pulse(std::span<const PulseFamily> families, const PulseCost& cost,
                              const OptimizerConfig& config, DurationWindow window, double duration_hint,
                              double omega_estimate);

/// Duration window used at an iteration: [T_prev / 4, min(cap, 2 T_prev)].
DurationWindow duration_window(double previous_duration, double duration_cap);

void write_optimizer_trace_csv(std::ostream& os, const OptimizedPulse& result);

}  // namespace obsid
