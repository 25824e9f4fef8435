#include "obsid/error.hpp"
#include "obsid/parameter_space.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace obsid;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
  ParameterVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ControlWaveform rabi(double T) { return ControlWaveform::single({{T, Complex(1.0, 0.0)}}); }

GaussianDensity fig2_prior() { return GaussianDensity(vec({4.1, 6.2}), Matrix(vec({0.25, 0.25}).asDiagonal())); }

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("Gaussian density validation") {
  Matrix asym(2, 2);
  asym << 1.0, 0.1, 0.2, 1.0;
  CHECK(code_of([&] { GaussianDensity(vec({0.0, 0.0}), asym); }) == ErrorCode::invalid_argument);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK(code_of([&] { GaussianDensity(vec({0.0, 0.0}), indefinite); }) == ErrorCode::invalid_argument);
  const auto prior = fig2_prior();
  CHECK(prior.nll(prior.mean()) == 0.0);
  CHECK(prior.nll(vec({4.6, 6.2})) == doctest::Approx(0.5));
}

TEST_CASE("NLL record evaluation") {
  const auto model = ModelSpec::one_qubit();
  NllRecord rec{fig2_prior(), {}, LikelihoodConvention::paper};
  CHECK(nll_evaluate(rec, rec.prior.mean(), model) == 0.0);
  CHECK(nll_evaluate(rec, vec({4.0, 6.0}), model) > 0.0);

  const auto g = vec({4.0, 6.0});
  const double p = oracle::rabi_p0(4.0, 6.0, 1.0);
  rec.terms.push_back({rabi(1.0), evolve(model, g, rabi(1.0)).p0, 0.05});
  CHECK(nll_evaluate(rec, g, model) == doctest::Approx(rec.prior.nll(g)).epsilon(1e-14));

  rec.terms.back().m = 0.3;
  const double expected = rec.prior.nll(g) + (p - 0.3) * (p - 0.3) / 0.01;
  CHECK(nll_evaluate(rec, g, model) == doctest::Approx(expected).epsilon(1e-10));

  rec.convention = LikelihoodConvention::gaussian;
  CHECK(nll_evaluate(rec, g, model) == doctest::Approx(rec.prior.nll(g) + (p - 0.3) * (p - 0.3) / 0.005).epsilon(1e-10));

  const auto pop = oracle::sample_gaussian(rec.prior.mean(), rec.prior.covariance(), 300, 1);
  const auto all = nll_evaluate(rec, pop, model);
  for (std::size_t s = 0; s < pop.size(); ++s) REQUIRE(all[s] == nll_evaluate(rec, ParameterVector(pop.sample(s)), model));
}

TEST_CASE("importance sampling with the prior as proposal accepts everything") {
  const auto model = ModelSpec::one_qubit();
  const NllRecord rec{fig2_prior(), {}, LikelihoodConvention::paper};
  const auto is = importance_sample_prior(rec, rec.prior, 2000, 42, model);
  CHECK(is.population.size() == 2000);
  CHECK(is.presampled == 2000);
  CHECK(is.acceptance() == 1.0);

  const auto again = importance_sample_prior(rec, rec.prior, 2000, 42, model);
  CHECK(again.population.samples == is.population.samples);
  CHECK(code_of([&] { importance_sample_prior(rec, rec.prior, 50, 1, model); }) == ErrorCode::invalid_argument);
}

TEST_CASE("importance acceptance matches grid quadrature") {
  // Target = prior x likelihood with m chosen at the prior mean response so
  // the batch maximum score is 1 up to sampling.
  const auto model = ModelSpec::one_qubit();
  NllRecord rec{fig2_prior(), {}, LikelihoodConvention::paper};
  const double T = 0.4;
  const double m = evolve(model, rec.prior.mean(), rabi(T)).p0;
  const double sigma = 0.05;
  rec.terms.push_back({rabi(T), m, sigma});
  auto like = [&](const Eigen::Vector2d& g) {
    const double r = oracle::rabi_p0(g[0], g[1], T) - m;
    return std::exp(-r * r / (4.0 * sigma * sigma));
  };
  const double expected = oracle::grid_expectation(rec.prior.mean(), rec.prior.covariance(), like, 100);

  std::size_t accepted = 0, examined = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto is = importance_sample_prior(rec, rec.prior, 2000, seed, model);
    accepted += is.population.size();
    examined += is.presampled;
  }
  const double rate = static_cast<double>(accepted) / static_cast<double>(examined);
  const double mc_sigma = std::sqrt(expected * (1.0 - expected) / static_cast<double>(examined));
  CHECK(std::abs(rate - expected) < 3.0 * mc_sigma + 1e-3 * expected);
}

TEST_CASE("importance sampling reports a mismatched proposal") {
  const auto model = ModelSpec::one_qubit();
  NllRecord rec{fig2_prior(), {}, LikelihoodConvention::paper};
  // Proposal far from the target: scores are relative to the batch maximum,
  // so an impossible measurement collapses acceptance only through the
  // likelihood, and a proposal that covers nothing stays near 1/batch.
  rec.terms.push_back({rabi(2.0), 0.0, 1e-3});
  const GaussianDensity far(vec({40.0, -30.0}), Matrix(vec({1e-6, 1e-6}).asDiagonal()));
  const auto is = importance_sample_prior(rec, far, 100, 3, model);
  CHECK(is.population.size() == 100);
  CHECK(is.acceptance() < 1.0);
}

TEST_CASE("rejection subsample") {
  const auto pop = oracle::sample_gaussian(vec({4.1, 6.2}), Matrix(vec({0.25, 0.25}).asDiagonal()), 10000, 2);
  const std::vector<double> ones(pop.size(), 1.0);
  const auto all = rejection_subsample(pop, ones, 1);
  CHECK(all.population.samples == pop.samples);

  const std::vector<double> half(pop.size(), 0.5);
  const auto sub = rejection_subsample(pop, half, 7);
  CHECK(std::abs(static_cast<double>(sub.population.size()) - 5000.0) <= 3.0 * std::sqrt(10000 * 0.25));
  for (std::size_t k = 0; k < sub.indices.size(); ++k) {
    REQUIRE(sub.population.sample(k) == pop.sample(sub.indices[k]));
  }

  const std::vector<double> zeros(pop.size(), 0.0);
  CHECK(code_of([&] { rejection_subsample(pop, zeros, 1); }) == ErrorCode::filter_collapse);
  std::vector<double> bad = ones;
  bad[3] = 1.5;
  CHECK(code_of([&] { rejection_subsample(pop, bad, 1); }) == ErrorCode::invalid_argument);
}

TEST_CASE("rejection concentrates on the measurement band") {
  const auto model = ModelSpec::one_qubit();
  const auto pop = oracle::sample_gaussian(vec({4.1, 6.2}), Matrix(vec({0.25, 0.25}).asDiagonal()), 20000, 4);
  const auto resp = batch_response(model, pop, rabi(2.0));
  const double m = 0.4, sigma = 0.03;
  const auto nl = normalized_likelihoods(resp, m, sigma);
  const auto sub = rejection_subsample(pop, nl.raw, 5);
  std::size_t inside = 0;
  for (auto s : sub.indices) inside += std::abs(resp[s] - m) <= 2.0 * (2.0 * sigma) ? 1 : 0;
  // raw likelihood exp(-r^2 / (2 sigma)^2) has standard deviation sqrt(2) sigma
  CHECK(static_cast<double>(inside) >= 0.95 * static_cast<double>(sub.indices.size()));
}

TEST_CASE("weighted moments") {
  Matrix two(2, 2);
  two << 0.0, 2.0, 0.0, 0.0;
  const std::vector<double> eq{0.5, 0.5};
  const auto s = weighted_moments(Population(two), eq);
  CHECK(s.mean[0] == 1.0);
  CHECK(s.mean[1] == 0.0);
  CHECK(s.covariance(0, 0) == 1.0);
  CHECK(s.covariance(1, 1) == 0.0);
  CHECK(s.major_eigenvalue == 1.0);
  CHECK(s.degenerate);
  CHECK(s.minor_eigenvalue == 0.0);
  CHECK(s.major_eigenvector.norm() == doctest::Approx(1.0));

  const auto big = oracle::sample_gaussian(vec({0.0, 0.0, 0.0}), Matrix::Identity(3, 3) * 0.49, 100000, 8);
  const std::vector<double> w(big.size(), 1.0 / static_cast<double>(big.size()));
  CHECK(std::abs(weighted_moments(big, w).major_eigenvalue - 0.7) < 0.02 * 0.7);

  std::vector<double> delta(big.size(), 0.0);
  delta[17] = 1.0;
  const auto d = weighted_moments(big, delta);
  CHECK(d.mean == ParameterVector(big.sample(17)));
  CHECK(d.covariance.norm() == 0.0);

  const std::vector<double> unnormalised(big.size(), 1.0);
  CHECK(code_of([&] { weighted_moments(big, unnormalised); }) == ErrorCode::invalid_argument);
}

TEST_CASE("covariance summaries are PSD") {
  const auto model = ModelSpec::one_qubit();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pop = oracle::sample_gaussian(vec({4.1, 6.2}), Matrix(vec({0.25, 0.25}).asDiagonal()), 500, seed);
    const auto resp = batch_response(model, pop, rabi(1.0 + static_cast<double>(seed)));
    const auto nl = normalized_likelihoods(resp, 0.5, 0.02);
    const auto s = weighted_moments(pop, nl.normalized);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(s.covariance).eigenvalues()[0];
    CHECK(min_eig >= -1e-10 * s.major_eigenvalue * s.major_eigenvalue);
  }
}

TEST_CASE("normalized likelihoods") {
  const auto model = ModelSpec::one_qubit();
  const auto pop = oracle::sample_gaussian(vec({4.1, 6.2}), Matrix(vec({0.25, 0.25}).asDiagonal()), 2000, 3);

  const std::vector<double> flat(pop.size(), 0.37);
  const auto u = normalized_likelihoods(flat, 0.37, 0.01);
  for (double w : u.normalized) REQUIRE(w == doctest::Approx(1.0 / 2000.0));

  const auto wide = normalized_likelihoods(pop, rabi(2.0), 0.5, 1e6, model);
  for (double w : wide.normalized) REQUIRE(std::abs(w - 1.0 / 2000.0) < 1e-12 / 2000.0);

  const auto nl = normalized_likelihoods(pop, rabi(2.0), 0.4, 0.03, model);
  const long double ext = oracle::extended_sum(nl.raw);
  CHECK(std::abs(static_cast<long double>(nl.total) - ext) <= 1e-12L * ext);
  CHECK(std::abs(compensated_sum(nl.normalized) - 1.0) < 1e-12);

  const std::vector<double> far(10, 1.0);
  CHECK(code_of([&] { normalized_likelihoods(far, 0.0, 1e-3); }) == ErrorCode::no_consistent_samples);
  CHECK(code_of([&] { normalized_likelihoods(far, 0.0, 0.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("uninformative measurement leaves the prior unchanged") {
  const auto model = ModelSpec::one_qubit();
  const auto pop = oracle::sample_gaussian(vec({4.1, 6.2}), Matrix(vec({0.25, 0.25}).asDiagonal()), 2000, 12);
  const auto nl = normalized_likelihoods(pop, rabi(2.0), 0.5, 1e6, model);
  const auto sub = rejection_subsample(pop, nl.raw, 99);
  CHECK(sub.population.size() == pop.size());
  const std::vector<double> uniform(pop.size(), 1.0 / 2000.0);
  const auto prior = weighted_moments(pop, uniform);
  const auto post = weighted_moments(pop, nl.normalized);
  CHECK((post.mean - prior.mean).norm() < 1e-12 * prior.mean.norm());
  CHECK((post.covariance - prior.covariance).norm() < 1e-12 * prior.covariance.norm());
}
