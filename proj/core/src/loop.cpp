#include "obsid/loop.hpp"

#include "obsid/fisher.hpp"
#include "obsid/parallel.hpp"
#include "obsid/rng.hpp"

#include <algorithm>
#include <cmath>

namespace obsid {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::target_met: return "target_met";
    case Termination::max_iterations: return "max_iterations";
    case Termination::stalled: return "stalled";
    case Termination::error: return "error";
  }
  return "unknown";
}

void LoopConfig::validate() const {
  if (max_iterations < 1) fail(ErrorCode::invalid_argument, "max_iterations must be >= 1");
  if (population_size < 100) fail(ErrorCode::invalid_argument, "population_size must be >= 100");
  if (!(target_major_uncertainty >= 0.0)) fail(ErrorCode::invalid_argument, "target uncertainty must be >= 0");
  if (families.empty()) fail(ErrorCode::invalid_argument, "at least one pulse family is required");
  if (stall_window < 1) fail(ErrorCode::invalid_argument, "stall_window must be >= 1");
  if (!(stall_ratio > 0.0 && stall_ratio <= 1.0)) fail(ErrorCode::invalid_argument, "stall_ratio must lie in (0, 1]");
  if (cost.planned_shots < 1) fail(ErrorCode::invalid_argument, "planned shots must be >= 1");
  if (cost.grid_size < 2) fail(ErrorCode::invalid_argument, "grid_size must be >= 2");
  for (const auto& f : families) f.validate();
  optimizer.validate();
}

bool stall_diagnostic(std::span<const CovarianceSummary> history, int window, double ratio) {
  if (window < 1 || history.size() < static_cast<std::size_t>(window) + 1) return false;
  for (std::size_t k = history.size() - static_cast<std::size_t>(window); k < history.size(); ++k) {
    const double prev = history[k - 1].major_eigenvalue;
    if (!(prev > 0.0)) return false;
    if (!(history[k].major_eigenvalue / prev > ratio)) return false;
  }
  return true;
}

double omega_estimate(const ModelSpec& model, const ParameterVector& mean) {
  (void)model;
  return std::max(std::abs(mean[1]), 1e-6);
}

ProjectionAxes projection_axes(const Population& population, const ControlWaveform& pulse, const ModelSpec& model,
                               const std::optional<ParameterVector>& g_true) {
  if (population.empty()) fail(ErrorCode::invalid_argument, "projection axes need a nonempty population");
  const auto merged = merge_channels(pulse);
  const std::size_t S = population.size();
  const auto p = static_cast<Eigen::Index>(population.dimension());
  Matrix directions = Matrix::Zero(p, static_cast<Eigen::Index>(S));
  parallel_for(S, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const ParameterVector g = population.sample(s);
      const auto fr = fisher_from_gradient(return_probability(model, g, merged), response_gradient(model, g, merged));
      if (fr.direction_defined) directions.col(static_cast<Eigen::Index>(s)) = fr.direction;
    }
  });
  ProjectionAxes out;
  const ParameterVector mean_dir = directions.rowwise().mean();
  if (mean_dir.norm() > 1e-12) out.lambda_grad = mean_dir.normalized();
  if (g_true) {
    const ParameterVector dev = population.samples.rowwise().mean() - *g_true;
    if (dev.norm() > 0.0) out.lambda_dev = dev.normalized();
  }
  return out;
}

namespace {

GaussianDensity proposal_from(const CovarianceSummary& summary) {
  Matrix cov = summary.covariance;
  const double scale = std::max(cov.trace() / static_cast<double>(cov.rows()), 1e-300);
  for (double ridge = 0.0;; ridge = ridge == 0.0 ? 1e-12 : ridge * 100.0) {
    try {
      return GaussianDensity(summary.mean, cov + ridge * scale * Matrix::Identity(cov.rows(), cov.cols()));
    } catch (const Error&) {
      if (ridge > 1e-4) fail(ErrorCode::degenerate_covariance, "posterior covariance cannot seed a proposal");
    }
  }
}

struct Update {
  NormalizedLikelihoods likelihoods;
  Subsample retained;
  double sigma = 0.0;
  bool inflated = false;
};

Update posterior_update(const Population& population, std::span<const double> responses, double m, double sigma,
                        LikelihoodConvention convention, std::uint64_t seed) {
  const std::size_t floor_count = std::max<std::size_t>(2, (population.size() + 99) / 100);
  Update u;
  u.sigma = sigma;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      u.likelihoods = normalized_likelihoods(responses, m, u.sigma, convention);
      u.retained = rejection_subsample(population, u.likelihoods.raw, seed);
      if (u.retained.indices.size() >= floor_count) return u;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::filter_collapse && e.code() != ErrorCode::no_consistent_samples) throw;
    }
    if (attempt == 0) {
      u.sigma *= 2.0;
      u.inflated = true;
    }
  }
  fail(ErrorCode::filter_collapse, "rejection retained fewer than 1% of samples after sigma inflation");
}

}  // namespace

LoopResult run_loop(const ModelSpec& model, const GaussianDensity& prior, ExperimentBackend& backend,
                    const LoopConfig& config, std::uint64_t seed, const LoopHooks& hooks) {
  model.validate();
  config.validate();
  if (prior.dimension() != model.parameter_count()) {
    fail(ErrorCode::invalid_argument, "prior dimension does not match model parameter count");
  }
  std::vector<PulseFamily> families = config.families;
  for (auto& f : families) {
    if (f.kind != PulseKind::ramsey && f.kind != PulseKind::bang_bang) f.channel_count = static_cast<int>(model.channel_count());
    f.validate();
  }

  LoopResult result;
  result.record.prior = prior;
  result.record.convention = config.cost.convention;
  result.prior = summarize(prior.mean(), prior.covariance());

  std::vector<CovarianceSummary> history{result.prior};
  if (result.prior.major_eigenvalue <= config.target_major_uncertainty) {
    result.reason = Termination::target_met;
    return result;
  }

  double previous_duration = 0.0;
  int j = 0;
  try {
    for (j = 1; j <= config.max_iterations; ++j) {
      const CovarianceSummary& prev = history.back();
      IterationOutput it;
      it.j = j;
      it.seed = derive_seed(seed, {static_cast<std::uint64_t>(j)});
      it.prior = prev;

      // S1: population from the current NLL record.
      const auto sampled = importance_sample_prior(result.record, proposal_from(prev), config.population_size,
                                                   derive_seed(it.seed, {tag(Stream::importance)}), model);
      const Population& population = sampled.population;
      it.presampled = sampled.presampled;

      // S2: pulse design.
      it.duration_hint = optimal_duration_hint(prev.covariance);
      if (j == 1) previous_duration = it.duration_hint / 2.0;
      it.omega_estimate = omega_estimate(model, prev.mean);
      const double cap = std::min_element(families.begin(), families.end(), [](const auto& a, const auto& b) {
                           return a.duration_cap < b.duration_cap;
                         })->duration_cap;
      it.window = duration_window(previous_duration, cap);

      std::optional<OptimizedPulse> forced;
      if (hooks.pulse_override) forced = hooks.pulse_override(j);
      if (forced) {
        it.pulse = std::move(*forced);
      } else {
        const CostEvaluator evaluator(population, model, config.cost_kind, config.cost);
        OptimizerConfig oc = config.optimizer;
        oc.seed = derive_seed(it.seed, {tag(Stream::optimizer)});
        it.pulse = optimize_pulse(families, [&](const ControlWaveform& w) { return evaluator.value(w); }, oc,
                                  it.window, it.duration_hint, it.omega_estimate);
      }
      const ControlWaveform& pulse = it.pulse.choice.rendered;

      // S3: experiment.
      it.measurement = backend.measure(pulse);
      const double sigma = std::max(kSigmaFloor, it.measurement.sigma);

      // S5 (computed before S4 so a sigma inflation lands in the record).
      const auto responses = batch_response(model, population, pulse);
      auto update = posterior_update(population, responses, it.measurement.m, sigma, config.cost.convention,
                                     derive_seed(it.seed, {tag(Stream::rejection)}));
      it.sigma_used = update.sigma;
      it.sigma_inflated = update.inflated;

      // S4: the posterior NLL becomes the next prior.
      result.record.terms.push_back({pulse, it.measurement.m, it.sigma_used});

      it.posterior = weighted_moments(population, update.likelihoods.normalized);
      it.posterior_population = std::move(update.retained.population);
      it.retained = it.posterior_population.size();
      it.compression = it.posterior.major_eigenvalue / prev.major_eigenvalue;
      const double duration = pulse.duration();
      it.duration_ratio = duration / previous_duration;
      previous_duration = duration;

      history.push_back(it.posterior);
      it.stalled = stall_diagnostic(history, config.stall_window, config.stall_ratio);
      if (hooks.on_iteration) hooks.on_iteration(it);
      result.iterations.push_back(std::move(it));

      // S6: termination.
      const auto& last = result.iterations.back();
      if (last.posterior.major_eigenvalue <= config.target_major_uncertainty) {
        result.reason = Termination::target_met;
        return result;
      }
      if (last.stalled && config.stop_on_stall) {
        result.reason = Termination::stalled;
        return result;
      }
    }
  } catch (const Error& e) {
    result.reason = Termination::error;
    result.error_code = e.code();
    result.error_message = "iteration " + std::to_string(j) + ": " + e.what();
    return result;
  }
  result.reason = Termination::max_iterations;
  return result;
}

}  // namespace obsid
