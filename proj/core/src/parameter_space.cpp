#include "obsid/parameter_space.hpp"

#include "obsid/error.hpp"
#include "obsid/parallel.hpp"
#include "obsid/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>

namespace obsid {

GaussianDensity::GaussianDensity(ParameterVector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const auto p = mean_.size();
  if (p == 0) fail(ErrorCode::invalid_argument, "Gaussian density needs at least one dimension");
  if (covariance_.rows() != p || covariance_.cols() != p) {
    fail(ErrorCode::invalid_argument, "covariance shape does not match mean length");
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) fail(ErrorCode::invalid_argument, "non-finite Gaussian");
  const double scale = covariance_.cwiseAbs().maxCoeff();
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    fail(ErrorCode::invalid_argument, "covariance is not symmetric");
  }
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  Eigen::LLT<Matrix> llt(covariance_);
  if (llt.info() != Eigen::Success) fail(ErrorCode::invalid_argument, "covariance is not positive-definite");
  chol_ = llt.matrixL();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(chol_(i, i) > 0.0)) fail(ErrorCode::invalid_argument, "covariance is not positive-definite");
    log_det_half += std::log(chol_(i, i));
  }
  log_norm_ = -0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) - log_det_half;
}

GaussianDensity GaussianDensity::diagonal(const ParameterVector& mean, const Eigen::VectorXd& std_devs) {
  return GaussianDensity(mean, std_devs.array().square().matrix().asDiagonal());
}

double GaussianDensity::nll(const ParameterVector& g) const {
  const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(g - mean_);
  return 0.5 * z.squaredNorm();
}

double GaussianDensity::log_pdf(const ParameterVector& g) const { return log_norm_ - nll(g); }

std::string to_string(LikelihoodConvention c) { return c == LikelihoodConvention::paper ? "paper" : "gaussian"; }

LikelihoodConvention likelihood_convention_from_string(const std::string& name) {
  if (name == "paper") return LikelihoodConvention::paper;
  if (name == "gaussian") return LikelihoodConvention::gaussian;
  fail(ErrorCode::invalid_argument, "unknown likelihood convention '" + name + "'");
}

double likelihood_denominator(double sigma, LikelihoodConvention convention) {
  return convention == LikelihoodConvention::paper ? 4.0 * sigma * sigma : 2.0 * sigma * sigma;
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

CovarianceSummary summarize(const ParameterVector& mean, const Matrix& covariance) {
  CovarianceSummary out;
  out.mean = mean;
  out.covariance = covariance;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  const auto& vals = eig.eigenvalues();
  const double top = vals[vals.size() - 1];
  const double bottom = vals[0];
  out.major_eigenvalue = std::sqrt(std::max(top, 0.0));
  out.major_eigenvector = eig.eigenvectors().col(vals.size() - 1);
  // fix the sign so the largest-magnitude component is positive
  Eigen::Index arg = 0;
  out.major_eigenvector.cwiseAbs().maxCoeff(&arg);
  if (out.major_eigenvector[arg] < 0.0) out.major_eigenvector = -out.major_eigenvector;
  out.major_eigenvector.normalize();
  out.degenerate = !(bottom > 1e-12 * std::max(top, std::numeric_limits<double>::min()));
  out.minor_eigenvalue = out.degenerate ? 0.0 : std::sqrt(bottom);
  return out;
}

namespace {

struct TermCache {
  std::vector<MergedSegment> merged;
  double m;
  double denom;
};

std::vector<TermCache> cache_terms(const NllRecord& record) {
  std::vector<TermCache> out;
  out.reserve(record.terms.size());
  for (const auto& t : record.terms) {
    if (!(t.sigma > 0.0)) fail(ErrorCode::invalid_argument, "measurement sigma must be positive");
    out.push_back({merge_channels(t.pulse), t.m, likelihood_denominator(t.sigma, record.convention)});
  }
  return out;
}

double evaluate_cached(const NllRecord& record, const std::vector<TermCache>& terms, const ParameterVector& g,
                       const ModelSpec& model) {
  double value = record.prior.nll(g);
  for (const auto& t : terms) {
    const double r = return_probability(model, g, t.merged) - t.m;
    value += r * r / t.denom;
  }
  if (!std::isfinite(value)) fail(ErrorCode::model_blowup, "non-finite NLL");
  return value;
}

}  // namespace

double nll_evaluate(const NllRecord& record, const ParameterVector& g, const ModelSpec& model) {
  if (static_cast<std::size_t>(g.size()) != model.parameter_count() ||
      record.prior.dimension() != model.parameter_count()) {
    fail(ErrorCode::invalid_argument, "NLL record, parameter vector and model dimensions disagree");
  }
  return evaluate_cached(record, cache_terms(record), g, model);
}

std::vector<double> nll_evaluate(const NllRecord& record, const Population& population, const ModelSpec& model) {
  if (population.dimension() != model.parameter_count() || record.prior.dimension() != model.parameter_count()) {
    fail(ErrorCode::invalid_argument, "NLL record, population and model dimensions disagree");
  }
  const auto terms = cache_terms(record);
  std::vector<double> out(population.size());
  parallel_for(population.size(), [&](std::size_t begin, std::size_t end) {
    ParameterVector g(population.dimension());
    for (std::size_t s = begin; s < end; ++s) {
      g = population.sample(s);
      out[s] = evaluate_cached(record, terms, g, model);
    }
  });
  return out;
}

ImportanceSample importance_sample_prior(const NllRecord& record, const GaussianDensity& proposal,
                                         std::size_t target_size, std::uint64_t seed, const ModelSpec& model) {
  if (target_size < 100) fail(ErrorCode::invalid_argument, "importance sampling target size must be >= 100");
  const std::size_t p = model.parameter_count();
  if (proposal.dimension() != p || record.prior.dimension() != p) {
    fail(ErrorCode::invalid_argument, "proposal/prior dimension does not match model");
  }
  const auto terms = cache_terms(record);
  const std::size_t batch = 4 * target_size;

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ImportanceSample out;
  Matrix accepted(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(target_size));
  out.nll.reserve(target_size);
  std::size_t filled = 0;
  std::size_t starved_batches = 0;

  Matrix candidates(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(batch));
  std::vector<double> target_nll(batch), log_score(batch);
  while (filled < target_size) {
    for (std::size_t s = 0; s < batch; ++s) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(p));
      for (std::size_t i = 0; i < p; ++i) z[static_cast<Eigen::Index>(i)] = normal(rng);
      candidates.col(static_cast<Eigen::Index>(s)) = proposal.transform(z);
    }
    parallel_for(batch, [&](std::size_t begin, std::size_t end) {
      ParameterVector g(static_cast<Eigen::Index>(p));
      for (std::size_t s = begin; s < end; ++s) {
        g = candidates.col(static_cast<Eigen::Index>(s));
        target_nll[s] = evaluate_cached(record, terms, g, model);
        log_score[s] = -target_nll[s] + proposal.nll(g);
      }
    });
    double top = -std::numeric_limits<double>::infinity();
    for (double v : log_score) top = std::max(top, v);

    ++out.batches;
    std::size_t accepted_here = 0, examined = 0;
    for (std::size_t s = 0; s < batch && filled < target_size; ++s) {
      ++examined;
      const double score = std::exp(log_score[s] - top);
      if (uniform(rng) < score) {
        accepted.col(static_cast<Eigen::Index>(filled++)) = candidates.col(static_cast<Eigen::Index>(s));
        out.nll.push_back(target_nll[s]);
        ++accepted_here;
      }
    }
    out.presampled += examined;
    if (static_cast<double>(accepted_here) < 1e-4 * static_cast<double>(examined)) {
      if (++starved_batches >= 100) {
        fail(ErrorCode::proposal_mismatch, "importance acceptance below 1e-4 for 100 consecutive batches");
      }
    } else {
      starved_batches = 0;
    }
  }
  out.population = Population(std::move(accepted));
  return out;
}

Subsample rejection_subsample(const Population& population, std::span<const double> likelihoods,
                              std::uint64_t seed) {
  if (likelihoods.size() != population.size()) {
    fail(ErrorCode::invalid_argument, "likelihood vector length does not match population size");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Subsample out;
  for (std::size_t s = 0; s < likelihoods.size(); ++s) {
    const double l = likelihoods[s];
    if (!(l >= 0.0 && l <= 1.0)) fail(ErrorCode::invalid_argument, "likelihoods must lie in [0, 1]");
    if (uniform(rng) < l) out.indices.push_back(s);
  }
  if (out.indices.empty()) fail(ErrorCode::filter_collapse, "rejection subsample retained no samples");
  Matrix kept(static_cast<Eigen::Index>(population.dimension()), static_cast<Eigen::Index>(out.indices.size()));
  for (std::size_t k = 0; k < out.indices.size(); ++k) {
    kept.col(static_cast<Eigen::Index>(k)) = population.sample(out.indices[k]);
  }
  out.population = Population(std::move(kept));
  return out;
}

CovarianceSummary weighted_moments(const Population& population, std::span<const double> weights) {
  if (weights.size() != population.size() || population.empty()) {
    fail(ErrorCode::invalid_argument, "weights length must match a nonempty population");
  }
  const double total = compensated_sum(weights);
  if (std::abs(total - 1.0) > 1e-10) fail(ErrorCode::invalid_argument, "weights must sum to 1");

  const auto p = static_cast<Eigen::Index>(population.dimension());
  ParameterVector mean = ParameterVector::Zero(p);
  for (std::size_t s = 0; s < weights.size(); ++s) mean.noalias() += weights[s] * population.sample(s);
  Matrix cov = Matrix::Zero(p, p);
  Eigen::VectorXd d(p);
  for (std::size_t s = 0; s < weights.size(); ++s) {
    if (weights[s] == 0.0) continue;
    d = population.sample(s) - mean;
    cov.noalias() += weights[s] * d * d.transpose();
  }
  cov = 0.5 * (cov + cov.transpose()).eval();
  return summarize(mean, cov);
}

NormalizedLikelihoods normalized_likelihoods(std::span<const double> responses, double m, double sigma,
                                             LikelihoodConvention convention) {
  if (!(sigma > 0.0)) fail(ErrorCode::invalid_argument, "sigma must be positive");
  const double denom = likelihood_denominator(sigma, convention);
  NormalizedLikelihoods out;
  out.raw.resize(responses.size());
  for (std::size_t s = 0; s < responses.size(); ++s) {
    const double r = responses[s] - m;
    out.raw[s] = std::exp(-r * r / denom);
  }
  out.total = compensated_sum(out.raw);
  if (!(out.total >= std::numeric_limits<double>::min())) {
    fail(ErrorCode::no_consistent_samples, "likelihood normalisation underflowed; no sample is consistent with m");
  }
  out.normalized.resize(out.raw.size());
  for (std::size_t s = 0; s < out.raw.size(); ++s) out.normalized[s] = out.raw[s] / out.total;
  return out;
}

NormalizedLikelihoods normalized_likelihoods(const Population& population, const ControlWaveform& pulse, double m,
                                             double sigma, const ModelSpec& model,
                                             LikelihoodConvention convention) {
  if (!(sigma > 0.0)) fail(ErrorCode::invalid_argument, "sigma must be positive");
  const auto responses = batch_response(model, population, pulse);
  return normalized_likelihoods(responses, m, sigma, convention);
}

}  // namespace obsid
