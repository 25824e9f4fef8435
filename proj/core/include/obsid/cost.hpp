#pragma once

#include "obsid/parameter_space.hpp"
#include "obsid/quantum_model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace obsid {

enum class CostKind { apc, maxpc, mfi };

std::string to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& name);

struct CostSettings {
  /// Anticipated measurement std. Non-positive means "derive from planned_shots".
  double sigma_hat = 0.0;
  int planned_shots = 1000;
  /// Diagonal of the preconditioner A; empty means identity.
  std::vector<double> a_diagonal;
  int grid_size = 64;
  LikelihoodConvention convention = LikelihoodConvention::paper;
  double alpha = 1.0;  // MFI penalty scale
  double beta = 0.05;  // MFI penalty threshold
};

/// max(1e-3, sqrt(mbar (1 - mbar) / shots)) with mbar the mean predicted response.
double anticipated_sigma(std::span<const double> responses, int planned_shots);

struct OutcomeGrid {
  std::vector<double> values;   // ascending m_k
  std::vector<double> weights;  // trapezoid weights, sum = span
};

/// Uniform trapezoid grid over [max(0, min P0 - 3 sigma), min(1, max P0 + 3 sigma)].
OutcomeGrid make_outcome_grid(std::span<const double> responses, double sigma_hat, int grid_size);

struct OutcomeTerm {
  double m = 0.0;
  double q = 0.0;           // Q(m_k), a density over m
  double normalizer = 0.0;  // N(m_k)
  double trace_term = 0.0;  // Tr(A Sigma(m_k))
};

struct CostReport {
  double value = 0.0;
  double sigma_hat = 0.0;
  std::vector<OutcomeTerm> per_outcome;
  Matrix anticipated_covariance;  // Xi (APC only)
};

/// Anticipated posterior covariance cost, Tr(A Xi).
CostReport apc_cost(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                    const CostSettings& settings);

/// Worst case over grid outcomes with Q > 1e-6 of Tr(A Sigma(m)).
CostReport maxpc_cost(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                      const CostSettings& settings);

struct MfiBreakdown {
  double value = 0.0;
  double mean_fi = 0.0;
  double penalty = 0.0;  // M, fraction of samples whose directional derivative flips sign
};

/// Modified Fisher information: -FIbar (1 - alpha max(M - beta, 0)).
MfiBreakdown mfi_cost(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                      const CovarianceSummary& prior_summary, double alpha = 1.0, double beta = 0.05);

/// Reusable evaluator: centres the population once and evaluates any of the
/// three costs for many candidate pulses.
class CostEvaluator {
 public:
  CostEvaluator(const Population& population, const ModelSpec& model, CostKind kind, CostSettings settings,
                std::optional<CovarianceSummary> prior_summary = std::nullopt);

  /// Cost value only; the hot path used by the optimiser.
  double value(const ControlWaveform& pulse) const;
  CostReport report(const ControlWaveform& pulse) const;

  CostKind kind() const { return kind_; }
  const Population& population() const { return population_; }

 private:
  CostReport outcome_cost(const ControlWaveform& pulse, bool breakdown) const;

  const Population& population_;
  ModelSpec model_;
  CostKind kind_;
  CostSettings settings_;
  std::optional<CovarianceSummary> prior_summary_;
  Matrix centered_;   // p x S
  Matrix squared_;    // p x S, centred^2
  Eigen::VectorXd a_diag_;
};

}  // namespace obsid
