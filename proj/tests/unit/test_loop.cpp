#include "obsid/error.hpp"
#include "obsid/fisher.hpp"
#include "obsid/loop.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace obsid;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
  ParameterVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

GaussianDensity standard_prior() { return GaussianDensity(vec({4.1, 6.2}), Matrix(vec({0.25, 0.25}).asDiagonal())); }

PulseFamily family(PulseKind kind, int segments = 1) {
  PulseFamily f;
  f.kind = kind;
  f.segments = segments;
  return f;
}

LoopConfig small_config() {
  LoopConfig c;
  c.max_iterations = 3;
  c.population_size = 300;
  c.families = {family(PulseKind::rabi)};
  c.optimizer.restarts = 2;
  c.optimizer.budget = 50;
  return c;
}

std::vector<CovarianceSummary> history_of(std::initializer_list<double> lambdas) {
  std::vector<CovarianceSummary> h;
  for (double l : lambdas) {
    CovarianceSummary s;
    s.major_eigenvalue = l;
    h.push_back(s);
  }
  return h;
}

// Returns a fixed outcome; optionally fails on a given call.
class ScriptedBackend : public ExperimentBackend {
 public:
  ScriptedBackend(double m, double sigma, int fail_on = 0) : m_(m), sigma_(sigma), fail_on_(fail_on) {}
  MeasurementRecord measure(const ControlWaveform& pulse) override {
    if (++calls_ == fail_on_) fail(ErrorCode::remote_timeout, "scripted timeout");
    MeasurementRecord r;
    r.pulse = pulse;
    r.m = m_;
    r.sigma = sigma_;
    r.shots = 100;
    r.backend_tag = "scripted";
    return r;
  }
  std::string tag() const override { return "scripted"; }

 private:
  double m_, sigma_;
  int fail_on_;
  int calls_ = 0;
};

LoopHooks forced_pulse(double T) {
  LoopHooks hooks;
  hooks.pulse_override = [T](int) {
    OptimizedPulse p;
    p.family_tag = "rabi";
    p.choice.family = family(PulseKind::rabi);
    p.choice.variables = {T};
    p.choice.rendered = ControlWaveform::single({{T, Complex(1.0, 0.0)}});
    return std::optional<OptimizedPulse>(p);
  };
  return hooks;
}

}  // namespace

TEST_CASE("stall diagnostic") {
  CHECK_FALSE(stall_diagnostic(history_of({1.0, 0.15, 0.03, 0.0054}), 3, 0.8));
  CHECK(stall_diagnostic(history_of({1.0, 0.95, 0.855, 0.7866}), 3, 0.8));
  // one healthy step inside the window clears the flag
  CHECK_FALSE(stall_diagnostic(history_of({1.0, 0.95, 0.5, 0.46}), 3, 0.8));
  // too short a history is never stalled
  CHECK_FALSE(stall_diagnostic(history_of({1.0, 0.95, 0.9}), 3, 0.8));
  CHECK(stall_diagnostic(history_of({1.0, 0.2, 0.19}), 1, 0.8));
}

TEST_CASE("termination names") {
  CHECK(to_string(Termination::target_met) == "target_met");
  CHECK(to_string(Termination::max_iterations) == "max_iterations");
  CHECK(to_string(Termination::stalled) == "stalled");
  CHECK(to_string(Termination::error) == "error");
}

TEST_CASE("target already met by the prior") {
  auto cfg = small_config();
  const auto prior = standard_prior();
  cfg.target_major_uncertainty = 10.0 * summarize(prior.mean(), prior.covariance()).major_eigenvalue;
  SimulatedBackend backend(TrueSystem{vec({4.0, 6.0}), 1000, 1}, ModelSpec::one_qubit());
  const auto result = run_loop(ModelSpec::one_qubit(), prior, backend, cfg, 1);
  CHECK(result.reason == Termination::target_met);
  CHECK(result.iterations.empty());
  CHECK(backend.calls() == 0);
}

TEST_CASE("short simulated run chains priors and respects the duration cap") {
  const auto model = ModelSpec::one_qubit();
  const auto cfg = small_config();
  SimulatedBackend backend(TrueSystem{vec({4.0, 6.0}), 1000, 2}, model);
  int seen = 0;
  LoopHooks hooks;
  hooks.on_iteration = [&](const IterationOutput& it) { CHECK(it.j == ++seen); };
  const auto result = run_loop(model, standard_prior(), backend, cfg, 17, hooks);

  REQUIRE(result.reason == Termination::max_iterations);
  REQUIRE(result.iterations.size() == 3);
  CHECK(seen == 3);
  CHECK(result.record.terms.size() == 3);
  CHECK(result.iterations[0].window.max == doctest::Approx(result.iterations[0].duration_hint));
  double previous = result.iterations[0].duration_hint / 2.0;
  const CovarianceSummary* prior = &result.prior;
  for (const auto& it : result.iterations) {
    CHECK(it.prior.mean == prior->mean);
    CHECK(it.prior.covariance == prior->covariance);
    CHECK(it.compression == it.posterior.major_eigenvalue / prior->major_eigenvalue);
    const double T = it.pulse.choice.rendered.duration();
    CHECK(T <= 2.0 * previous * (1.0 + 1e-12));
    CHECK(T >= it.window.min);
    CHECK(it.duration_ratio == doctest::Approx(T / previous));
    CHECK(it.retained >= cfg.population_size / 100);
    CHECK(it.posterior_population.size() == it.retained);
    CHECK(it.sigma_used >= kSigmaFloor);
    CHECK(it.compression > 0.0);
    CHECK(it.omega_estimate == doctest::Approx(std::abs(prior->mean[1])));
    previous = T;
    prior = &it.posterior;
  }

  SimulatedBackend again(TrueSystem{vec({4.0, 6.0}), 1000, 2}, model);
  const auto repeat = run_loop(model, standard_prior(), again, cfg, 17);
  REQUIRE(repeat.iterations.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(repeat.iterations[i].posterior.mean == result.iterations[i].posterior.mean);
    CHECK(repeat.iterations[i].measurement.m == result.iterations[i].measurement.m);
  }
}

TEST_CASE("backend errors abort with partial output") {
  ScriptedBackend backend(0.5, 0.05, 2);
  const auto result = run_loop(ModelSpec::one_qubit(), standard_prior(), backend, small_config(), 3, forced_pulse(0.2));
  CHECK(result.reason == Termination::error);
  REQUIRE(result.error_code.has_value());
  CHECK(*result.error_code == ErrorCode::remote_timeout);
  CHECK(result.error_message.rfind("iteration 2: ", 0) == 0);
  CHECK(result.iterations.size() == 1);
}

TEST_CASE("sigma inflation and filter collapse") {
  const auto model = ModelSpec::one_qubit();
  auto cfg = small_config();
  cfg.max_iterations = 1;
  // A 1 ms pulse gives P0 ~ 1 - 1e-5 for every sample, so the likelihood is
  // flat across the population and the retained fraction is set by m alone.
  SUBCASE("retry with doubled sigma rescues the update") {
    ScriptedBackend backend(1.0 - 0.005, 1e-3);
    const auto result = run_loop(model, standard_prior(), backend, cfg, 5, forced_pulse(1e-3));
    REQUIRE(result.reason == Termination::max_iterations);
    const auto& it = result.iterations.front();
    CHECK(it.sigma_inflated);
    CHECK(it.sigma_used == 2e-3);
    CHECK(result.record.terms.front().sigma == 2e-3);
    CHECK(it.retained >= 3);
  }
  SUBCASE("consistent measurement keeps sigma") {
    ScriptedBackend backend(1.0, 1e-3);
    const auto result = run_loop(model, standard_prior(), backend, cfg, 5, forced_pulse(1e-3));
    REQUIRE(result.reason == Termination::max_iterations);
    CHECK_FALSE(result.iterations.front().sigma_inflated);
    CHECK(result.iterations.front().sigma_used == 1e-3);
  }
  SUBCASE("impossible measurement collapses") {
    ScriptedBackend backend(0.0, 1e-3);
    const auto result = run_loop(model, standard_prior(), backend, cfg, 5, forced_pulse(1e-3));
    CHECK(result.reason == Termination::error);
    REQUIRE(result.error_code.has_value());
    CHECK(*result.error_code == ErrorCode::filter_collapse);
    CHECK(result.iterations.empty());
  }
}

TEST_CASE("projection axes") {
  const auto model = ModelSpec::one_qubit();
  const auto pulse = ControlWaveform::single({{0.3, Complex(1.0, 0.0)}});
  Matrix same(2, 3);
  same << 4.0, 4.0, 4.0, 6.0, 6.0, 6.0;
  const auto axes = projection_axes(Population(same), pulse, model, vec({4.0, 6.0}));
  CHECK_FALSE(axes.lambda_dev.has_value());
  REQUIRE(axes.lambda_grad.has_value());
  const auto f = fisher(model, vec({4.0, 6.0}), pulse);
  CHECK((*axes.lambda_grad - f.direction).norm() < 1e-12);

  const auto pop = oracle::sample_gaussian(vec({4.1, 6.2}), Matrix(vec({0.01, 0.01}).asDiagonal()), 200, 3);
  const auto axes2 = projection_axes(pop, pulse, model, vec({4.0, 6.0}));
  REQUIRE(axes2.lambda_dev.has_value());
  CHECK(axes2.lambda_dev->norm() == doctest::Approx(1.0));
  CHECK(axes2.lambda_grad->norm() == doctest::Approx(1.0));
  CHECK_FALSE(projection_axes(pop, pulse, model).lambda_dev.has_value());
}

TEST_CASE("loop config validation") {
  auto cfg = small_config();
  cfg.families.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.population_size = 10;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.stall_ratio = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(omega_estimate(ModelSpec::one_qubit(), vec({4.0, -6.0})) == 6.0);
  CHECK(omega_estimate(ModelSpec::one_qubit(), vec({4.0, 0.0})) == 1e-6);
}
