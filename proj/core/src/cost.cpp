#include "obsid/cost.hpp"

#include "obsid/error.hpp"
#include "obsid/fisher.hpp"
#include "obsid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace obsid {

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::apc: return "apc";
    case CostKind::maxpc: return "maxpc";
    case CostKind::mfi: return "mfi";
  }
  return "unknown";
}

CostKind cost_kind_from_string(const std::string& name) {
  if (name == "apc") return CostKind::apc;
  if (name == "maxpc") return CostKind::maxpc;
  if (name == "mfi") return CostKind::mfi;
  fail(ErrorCode::invalid_argument, "unknown cost kind '" + name + "'");
}

double anticipated_sigma(std::span<const double> responses, int planned_shots) {
  if (planned_shots < 1) fail(ErrorCode::invalid_argument, "planned shot count must be >= 1");
  if (responses.empty()) return 1e-3;
  const double mbar = compensated_sum(responses) / static_cast<double>(responses.size());
  const double var = std::max(0.0, mbar * (1.0 - mbar));
  return std::max(1e-3, std::sqrt(var / static_cast<double>(planned_shots)));
}

OutcomeGrid make_outcome_grid(std::span<const double> responses, double sigma_hat, int grid_size) {
  if (grid_size < 2) fail(ErrorCode::invalid_argument, "outcome grid needs at least two points");
  if (!(sigma_hat > 0.0)) fail(ErrorCode::invalid_argument, "sigma_hat must be positive");
  if (responses.empty()) fail(ErrorCode::invalid_argument, "outcome grid needs responses");
  const auto [lo_it, hi_it] = std::minmax_element(responses.begin(), responses.end());
  const double lo = std::max(0.0, *lo_it - 3.0 * sigma_hat);
  const double hi = std::min(1.0, *hi_it + 3.0 * sigma_hat);
  OutcomeGrid grid;
  const auto k = static_cast<std::size_t>(grid_size);
  const double step = (hi - lo) / static_cast<double>(k - 1);
  grid.values.resize(k);
  grid.weights.assign(k, step);
  for (std::size_t i = 0; i < k; ++i) grid.values[i] = lo + step * static_cast<double>(i);
  grid.values.back() = hi;
  grid.weights.front() = grid.weights.back() = 0.5 * step;
  return grid;
}

CostEvaluator::CostEvaluator(const Population& population, const ModelSpec& model, CostKind kind,
                             CostSettings settings, std::optional<CovarianceSummary> prior_summary)
    : population_(population), model_(model), kind_(kind), settings_(std::move(settings)),
      prior_summary_(std::move(prior_summary)) {
  if (population.dimension() != model.parameter_count()) {
    fail(ErrorCode::invalid_argument, "population dimension does not match model");
  }
  if (population.size() < 2) fail(ErrorCode::invalid_argument, "cost evaluation needs at least two samples");
  const auto p = static_cast<Eigen::Index>(population.dimension());
  a_diag_ = Eigen::VectorXd::Ones(p);
  if (!settings_.a_diagonal.empty()) {
    if (static_cast<Eigen::Index>(settings_.a_diagonal.size()) != p) {
      fail(ErrorCode::invalid_argument, "preconditioner diagonal length does not match parameter count");
    }
    for (Eigen::Index i = 0; i < p; ++i) a_diag_[i] = settings_.a_diagonal[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd centre = population.samples.rowwise().mean();
  centered_ = population.samples.colwise() - centre;
  squared_ = centered_.array().square().matrix();
  if (kind_ == CostKind::mfi && !prior_summary_) {
    std::vector<double> w(population.size(), 1.0 / static_cast<double>(population.size()));
    prior_summary_ = weighted_moments(population, w);
  }
}

CostReport CostEvaluator::outcome_cost(const ControlWaveform& pulse, bool breakdown) const {
  const auto responses = batch_response(model_, population_, pulse);
  CostReport report;
  report.sigma_hat =
      settings_.sigma_hat > 0.0 ? settings_.sigma_hat : anticipated_sigma(responses, settings_.planned_shots);
  const auto grid = make_outcome_grid(responses, report.sigma_hat, settings_.grid_size);
  const double denom = likelihood_denominator(report.sigma_hat, settings_.convention);

  const auto S = static_cast<Eigen::Index>(responses.size());
  const auto K = static_cast<Eigen::Index>(grid.values.size());
  Matrix table(S, K);
  parallel_for(responses.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double r = responses[s] - grid.values[static_cast<std::size_t>(k)];
        table(static_cast<Eigen::Index>(s), k) = std::exp(-r * r / denom);
      }
    }
  });

  const Eigen::RowVectorXd norm = table.colwise().sum();
  const Matrix first = centered_ * table;
  const Matrix second = squared_ * table;

  double z = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) z += norm[k] * grid.weights[static_cast<std::size_t>(k)];
  if (!(z > 0.0) || !std::isfinite(z)) fail(ErrorCode::degenerate_pulse, "every anticipated outcome has zero likelihood");

  const auto p = centered_.rows();
  report.per_outcome.resize(static_cast<std::size_t>(K));
  double apc = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < K; ++k) {
    auto& term = report.per_outcome[static_cast<std::size_t>(k)];
    term.m = grid.values[static_cast<std::size_t>(k)];
    term.normalizer = norm[k];
    term.q = norm[k] / z;
    if (!(norm[k] > 0.0)) continue;
    double trace = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double mu = first(i, k) / norm[k];
      trace += a_diag_[i] * std::max(0.0, second(i, k) / norm[k] - mu * mu);
    }
    term.trace_term = trace;
    apc += grid.weights[static_cast<std::size_t>(k)] * term.q * trace;
    if (term.q > 1e-6) worst = std::max(worst, trace);
  }
  if (!std::isfinite(worst)) worst = apc;
  report.value = kind_ == CostKind::maxpc ? worst : apc;

  if (breakdown) {
    Matrix xi = Matrix::Zero(p, p);
    Eigen::RowVectorXd pair(S);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i; j < p; ++j) {
        pair = centered_.row(i).cwiseProduct(centered_.row(j));
        const Eigen::RowVectorXd moment = pair * table;
        double acc = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
          if (!(norm[k] > 0.0)) continue;
          const double cov = moment[k] / norm[k] - (first(i, k) / norm[k]) * (first(j, k) / norm[k]);
          acc += grid.weights[static_cast<std::size_t>(k)] * report.per_outcome[static_cast<std::size_t>(k)].q * cov;
        }
        xi(i, j) = xi(j, i) = acc;
      }
    }
    report.anticipated_covariance = xi;
  }
  return report;
}

namespace {

MfiBreakdown mfi_impl(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                      const CovarianceSummary& prior, double alpha, double beta) {
  const auto merged = merge_channels(pulse);
  const ParameterVector& axis = prior.major_eigenvector;
  const double reference = axis.dot(response_gradient(model, prior.mean, merged));
  if (reference == 0.0 || !std::isfinite(reference)) {
    fail(ErrorCode::undefined_direction, "directional derivative at the prior mean is zero");
  }
  const std::size_t S = population.size();
  std::vector<double> fi(S), flipped(S);
  parallel_for(S, [&](std::size_t begin, std::size_t end) {
    ParameterVector g(static_cast<Eigen::Index>(population.dimension()));
    for (std::size_t s = begin; s < end; ++s) {
      g = population.sample(s);
      const double p0 = return_probability(model, g, merged);
      const ParameterVector grad = response_gradient(model, g, merged);
      fi[s] = fisher_from_gradient(p0, grad).fi;
      flipped[s] = -(axis.dot(grad) / reference) > 0.0 ? 1.0 : 0.0;
    }
  });
  MfiBreakdown out;
  out.mean_fi = compensated_sum(fi) / static_cast<double>(S);
  out.penalty = compensated_sum(flipped) / static_cast<double>(S);
  out.value = -out.mean_fi * (1.0 - alpha * std::max(out.penalty - beta, 0.0));
  return out;
}

}  // namespace

double CostEvaluator::value(const ControlWaveform& pulse) const {
  if (kind_ == CostKind::mfi) {
    return mfi_impl(population_, pulse, model_, *prior_summary_, settings_.alpha, settings_.beta).value;
  }
  return outcome_cost(pulse, false).value;
}

CostReport CostEvaluator::report(const ControlWaveform& pulse) const {
  if (kind_ == CostKind::mfi) {
    CostReport r;
    r.value = mfi_impl(population_, pulse, model_, *prior_summary_, settings_.alpha, settings_.beta).value;
    return r;
  }
  return outcome_cost(pulse, true);
}

CostReport apc_cost(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                    const CostSettings& settings) {
  if (population.size() < 50) fail(ErrorCode::invalid_argument, "APC needs a population of at least 50 samples");
  return CostEvaluator(population, model, CostKind::apc, settings).report(pulse);
}

CostReport maxpc_cost(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                      const CostSettings& settings) {
  if (population.size() < 50) fail(ErrorCode::invalid_argument, "MaxPC needs a population of at least 50 samples");
  return CostEvaluator(population, model, CostKind::maxpc, settings).report(pulse);
}

MfiBreakdown mfi_cost(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                      const CovarianceSummary& prior_summary, double alpha, double beta) {
  if (population.dimension() != model.parameter_count() || population.empty()) {
    fail(ErrorCode::invalid_argument, "population does not match model");
  }
  return mfi_impl(population, pulse, model, prior_summary, alpha, beta);
}

}  // namespace obsid
