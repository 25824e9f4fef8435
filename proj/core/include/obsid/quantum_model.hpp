#pragma once

#include "obsid/types.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace obsid {

/// One piecewise-constant segment of a control channel.
struct Segment {
  double duration = 0.0;  // seconds, > 0
  Complex value{0.0, 0.0};

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Rendered piecewise-constant control: one segment list per channel, all
/// channels sharing the same total duration.
struct ControlWaveform {
  std::vector<std::vector<Segment>> channels;

  std::size_t channel_count() const { return channels.size(); }
  double duration() const;
  std::size_t segment_count() const;

  /// Throws invalid_argument when a duration is non-positive or channel
  /// durations disagree.
  void validate() const;

  static ControlWaveform single(std::vector<Segment> segments);

  friend bool operator==(const ControlWaveform&, const ControlWaveform&) = default;
};

/// A control waveform resampled onto the union of all channel boundaries.
struct MergedSegment {
  double duration = 0.0;
  std::array<Complex, 2> values{};
};

/// Builds the merged grid. Throws segment_overflow beyond 10^6 segments.
std::vector<MergedSegment> merge_channels(const ControlWaveform& pulse);

enum class ModelFamily { one_qubit_2param, two_qubit_5param };

std::string to_string(ModelFamily family);
ModelFamily model_family_from_string(const std::string& name);

struct ModelSpec {
  ModelFamily family = ModelFamily::one_qubit_2param;
  std::vector<std::string> parameter_labels;
  int initial_state = 0;
  /// Basis indices spanning the return subspace; empty means {initial_state}.
  std::vector<int> return_projector;

  static ModelSpec one_qubit();
  static ModelSpec two_qubit();
  static ModelSpec for_family(ModelFamily family);

  std::size_t parameter_count() const;
  std::size_t hilbert_dimension() const;
  std::size_t channel_count() const;

  void validate() const;
};

struct EvolutionResult {
  double p0 = 1.0;
  Eigen::VectorXcd final_state;
};

/// Hamiltonian with the controls held at `control_values` (one per channel).
/// Basis: Z|0> = +|0>, L = |0><1|; two-qubit index = 2*q1 + q2.
Eigen::MatrixXcd hamiltonian(const ModelSpec& model, const ParameterVector& g,
                             std::span<const Complex> control_values);

EvolutionResult evolve(const ModelSpec& model, const ParameterVector& g, const ControlWaveform& pulse);

/// Same as evolve(...).p0 without materialising the result struct.
double return_probability(const ModelSpec& model, const ParameterVector& g,
                          std::span<const MergedSegment> merged);
double return_probability(const ModelSpec& model, const ParameterVector& g, const ControlWaveform& pulse);

/// Central finite-difference gradient of P0 with h_i = max(1e-6 |g_i|, 1e-8).
ParameterVector response_gradient(const ModelSpec& model, const ParameterVector& g,
                                  const ControlWaveform& pulse);
ParameterVector response_gradient(const ModelSpec& model, const ParameterVector& g,
                                  std::span<const MergedSegment> merged);

/// P0 at every sample of the population; bitwise equal to per-sample calls.
std::vector<double> batch_response(const ModelSpec& model, const Population& population,
                                   const ControlWaveform& pulse);

}  // namespace obsid
