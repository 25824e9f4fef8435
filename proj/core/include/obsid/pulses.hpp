#pragma once

#include "obsid/quantum_model.hpp"

#include <span>
#include <string>
#include <vector>

namespace obsid {

enum class PulseKind { rabi, ramsey, pwc_amplitude, bang_bang, phase_only };

std::string to_string(PulseKind kind);
PulseKind pulse_kind_from_string(const std::string& name);

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const { return x >= lower && x <= upper; }
};

/// Allowed pulse durations for one optimisation step.
struct DurationWindow {
  double min = 0.0;
  double max = 0.0;
};

/// A control family and its variable layout.
///
/// Layouts (C = channel_count, n = segments):
///   rabi           [T]                                  all channels held at 1
///   ramsey         [T]                                  single channel; +pi/2 kick, free, -pi/2 kick
///   pwc_amplitude  [a(1,1..n), ..., a(C,1..n), T]       equal-width real amplitudes in [-1, 1]
///   bang_bang      [on(1..n), off(1..n-1), phi(2..n)]   single channel, n = on-segment count
///   phase_only     [phi(1,1..n), ..., phi(C,1..n), T]   unit-magnitude segments e^{i phi}
struct PulseFamily {
  PulseKind kind = PulseKind::rabi;
  int segments = 1;
  int channel_count = 1;
  double duration_cap = 1e6;
  /// Ramsey kick width as a fraction of T (upper bound; see render()).
  double ramsey_width_fraction = 0.01;

  std::size_t variable_count() const;
  /// Short identifier, e.g. "pwc_amplitude(10)".
  std::string tag() const;

  /// Box constraints for a given duration window (already clipped to the cap).
  std::vector<Bounds> bounds(DurationWindow window) const;

  /// Variables of the canonical seed pulse at duration T: unit amplitudes,
  /// zero phases, equal bang-bang durations summing to T.
  std::vector<double> canonical_variables(double duration) const;

  /// Index of the duration variable, or -1 for bang_bang (durations are split).
  int duration_index() const;

  void validate() const;
};

/// Renders variables into a waveform. `omega_estimate` (> 0) is used only by
/// ramsey to size the pi/2 kicks. Throws invalid_argument when the duration is
/// non-positive or exceeds the family cap.
ControlWaveform render(const PulseFamily& family, std::span<const double> variables, double omega_estimate);

struct PulseChoice {
  PulseFamily family;
  std::vector<double> variables;
  ControlWaveform rendered;
};

double duration_of(const PulseChoice& choice);

/// Kick width used by the Ramsey rendering at total duration T.
double ramsey_kick_width(const PulseFamily& family, double duration, double omega_estimate);

}  // namespace obsid
