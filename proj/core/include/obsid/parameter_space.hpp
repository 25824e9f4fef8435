#pragma once

#include "obsid/quantum_model.hpp"
#include "obsid/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace obsid {

class GaussianDensity {
 public:
  GaussianDensity() = default;
  /// Throws invalid_argument unless covariance is symmetric positive-definite.
  GaussianDensity(ParameterVector mean, Matrix covariance);

  static GaussianDensity diagonal(const ParameterVector& mean, const Eigen::VectorXd& std_devs);

  const ParameterVector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  std::size_t dimension() const { return static_cast<std::size_t>(mean_.size()); }

  /// Mahalanobis half-square: -ln pdf(g) up to the normalisation constant.
  double nll(const ParameterVector& g) const;
  double log_pdf(const ParameterVector& g) const;

  /// Draws one sample given a standard-normal vector z.
  ParameterVector transform(const Eigen::VectorXd& z) const { return mean_ + chol_ * z; }
  const Matrix& cholesky_factor() const { return chol_; }

 private:
  ParameterVector mean_;
  Matrix covariance_;
  Matrix chol_;
  double log_norm_ = 0.0;
};

/// Exponent convention of the per-measurement likelihood term.
/// `paper`: (P0 - m)^2 / (2 sigma)^2.  `gaussian`: (P0 - m)^2 / (2 sigma^2).
enum class LikelihoodConvention { paper, gaussian };

std::string to_string(LikelihoodConvention c);
LikelihoodConvention likelihood_convention_from_string(const std::string& name);

/// Denominator of the likelihood exponent for the chosen convention.
double likelihood_denominator(double sigma, LikelihoodConvention convention);

struct MeasurementTerm {
  ControlWaveform pulse;
  double m = 0.0;
  double sigma = 1.0;
};

/// Exact running NLL: the Gaussian prior plus every (pulse, m, sigma) term.
struct NllRecord {
  GaussianDensity prior;
  std::vector<MeasurementTerm> terms;
  LikelihoodConvention convention = LikelihoodConvention::paper;
};

struct CovarianceSummary {
  ParameterVector mean;
  Matrix covariance;
  double major_eigenvalue = 0.0;  // of covariance^{1/2}
  ParameterVector major_eigenvector;
  double minor_eigenvalue = 0.0;  // of covariance^{1/2}; 0 when rank-deficient
  bool degenerate = false;
};

/// Summary of an exact Gaussian (used for the prior at iteration 0).
CovarianceSummary summarize(const ParameterVector& mean, const Matrix& covariance);

double nll_evaluate(const NllRecord& record, const ParameterVector& g, const ModelSpec& model);

/// NLL at every sample; data-parallel, deterministic.
std::vector<double> nll_evaluate(const NllRecord& record, const Population& population, const ModelSpec& model);

struct ImportanceSample {
  Population population;
  std::vector<double> nll;  // record NLL at each retained sample
  std::size_t presampled = 0;
  std::size_t batches = 0;

  double acceptance() const {
    return presampled == 0 ? 0.0 : static_cast<double>(population.size()) / static_cast<double>(presampled);
  }
};

/// Draws from exp(-NLL) using `proposal` as the importance proposal.
/// Scores are normalised by the per-batch maximum; batches are 4x target.
ImportanceSample importance_sample_prior(const NllRecord& record, const GaussianDensity& proposal,
                                         std::size_t target_size, std::uint64_t seed, const ModelSpec& model);

struct Subsample {
  Population population;
  std::vector<std::size_t> indices;
};

/// Retains sample s with probability likelihoods[s] (each in (0, 1]).
Subsample rejection_subsample(const Population& population, std::span<const double> likelihoods, std::uint64_t seed);

CovarianceSummary weighted_moments(const Population& population, std::span<const double> weights);

struct NormalizedLikelihoods {
  std::vector<double> raw;
  std::vector<double> normalized;
  double total = 0.0;  // N
};

NormalizedLikelihoods normalized_likelihoods(const Population& population, const ControlWaveform& pulse, double m,
                                             double sigma, const ModelSpec& model,
                                             LikelihoodConvention convention = LikelihoodConvention::paper);

/// Same, from responses P0(g_s) already evaluated for the pulse.
NormalizedLikelihoods normalized_likelihoods(std::span<const double> responses, double m, double sigma,
                                             LikelihoodConvention convention = LikelihoodConvention::paper);

/// Neumaier-compensated sum in index order.
double compensated_sum(std::span<const double> values);

}  // namespace obsid
