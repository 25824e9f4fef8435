#include "obsid/cost.hpp"
#include "obsid/parameter_space.hpp"
#include "obsid/quantum_model.hpp"
#include "obsid/rng.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace obsid;

namespace {

ControlWaveform pwc(int channels, int segments, double T) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  ControlWaveform w;
  for (int c = 0; c < channels; ++c) {
    std::vector<Segment> ch;
    for (int k = 0; k < segments; ++k) ch.push_back({T / segments, Complex(amp(rng), 0.0)});
    w.channels.push_back(ch);
  }
  return w;
}

Population prior_population(std::size_t n) {
  ParameterVector mean(2);
  mean << 4.1, 6.2;
  const GaussianDensity prior(mean, Matrix::Identity(2, 2) * 0.25);
  return importance_sample_prior(NllRecord{prior, {}, LikelihoodConvention::paper}, prior, n, 1,
                                 ModelSpec::one_qubit())
      .population;
}

void BM_Evolve1q(benchmark::State& state) {
  const auto model = ModelSpec::one_qubit();
  ParameterVector g(2);
  g << 4.0, 6.0;
  const auto w = pwc(1, static_cast<int>(state.range(0)), 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(evolve(model, g, w).p0);
}
BENCHMARK(BM_Evolve1q)->Arg(1)->Arg(10)->Arg(100);

void BM_Evolve2q(benchmark::State& state) {
  const auto model = ModelSpec::two_qubit();
  ParameterVector g(5);
  g << 4.1, 5.5, 4.0, 6.0, 0.5;
  const auto w = pwc(2, static_cast<int>(state.range(0)), 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(evolve(model, g, w).p0);
}
BENCHMARK(BM_Evolve2q)->Arg(1)->Arg(10);

void BM_ApcCost(benchmark::State& state) {
  const auto pop = prior_population(static_cast<std::size_t>(state.range(0)));
  const CostEvaluator eval(pop, ModelSpec::one_qubit(), CostKind::apc, CostSettings{});
  const auto w = pwc(1, 10, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(eval.value(w));
}
BENCHMARK(BM_ApcCost)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_ImportanceSample(benchmark::State& state) {
  ParameterVector mean(2);
  mean << 4.1, 6.2;
  const GaussianDensity prior(mean, Matrix::Identity(2, 2) * 0.25);
  NllRecord record{prior, {}, LikelihoodConvention::paper};
  record.terms.push_back({ControlWaveform::single({{2.0, Complex(1.0, 0.0)}}), 0.4, 0.02});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        importance_sample_prior(record, prior, static_cast<std::size_t>(state.range(0)), ++seed, ModelSpec::one_qubit()));
  }
}
BENCHMARK(BM_ImportanceSample)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
