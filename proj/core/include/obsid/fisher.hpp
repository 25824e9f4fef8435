#pragma once

#include "obsid/pulses.hpp"
#include "obsid/quantum_model.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace obsid {

struct FisherResult {
  Matrix fim;                 // f f^T
  double fi = 0.0;            // |f|^2
  ParameterVector direction;  // grad P0 / |grad P0|, zero when undefined
  bool direction_defined = false;
  bool variance_clamped = false;  // P0 - P0^2 hit the 1e-12 floor
};

/// Fisher quantities from a response and its gradient.
FisherResult fisher_from_gradient(double p0, const ParameterVector& gradient);

FisherResult fisher(const ModelSpec& model, const ParameterVector& g, const ControlWaveform& pulse);

struct FiScanPoint {
  double duration = 0.0;
  double fi = 0.0;
  double theta = 0.0;  // fi / T^2
};

/// FI as a function of duration for a fixed-shape family (rabi by default).
/// Families with more than a duration use their canonical variables.
std::vector<FiScanPoint> fi_scan(const ModelSpec& model, const ParameterVector& g, std::span<const double> durations,
                                 const PulseFamily& family = PulseFamily{});

void write_fi_scan_csv(std::ostream& os, std::span<const FiScanPoint> scan);

/// trace(Sigma^{-1/2}) in seconds (hbar = 1). Throws degenerate_covariance
/// when Sigma is singular.
double optimal_duration_hint(const Matrix& covariance);

}  // namespace obsid
