#include "obsid/fisher.hpp"

#include "obsid/csv.hpp"
#include "obsid/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <ostream>

namespace obsid {

FisherResult fisher_from_gradient(double p0, const ParameterVector& gradient) {
  constexpr double kVarianceFloor = 1e-12;
  FisherResult out;
  double variance = p0 - p0 * p0;
  if (variance < kVarianceFloor) {
    variance = kVarianceFloor;
    out.variance_clamped = true;
  }
  const ParameterVector f = gradient / std::sqrt(variance);
  out.fim = f * f.transpose();
  out.fi = f.squaredNorm();
  const double norm = gradient.norm();
  out.direction_defined = norm > 0.0;
  out.direction = out.direction_defined ? ParameterVector(gradient / norm) : ParameterVector::Zero(gradient.size());
  return out;
}

FisherResult fisher(const ModelSpec& model, const ParameterVector& g, const ControlWaveform& pulse) {
  const auto merged = merge_channels(pulse);
  const double p0 = return_probability(model, g, pulse);
  return fisher_from_gradient(p0, response_gradient(model, g, merged));
}

std::vector<FiScanPoint> fi_scan(const ModelSpec& model, const ParameterVector& g, std::span<const double> durations,
                                 const PulseFamily& family) {
  std::vector<FiScanPoint> out;
  out.reserve(durations.size());
  double previous = 0.0;
  const double omega_hat = model.parameter_count() >= 2 ? std::abs(g[1]) : 1.0;
  for (double t : durations) {
    if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "scan durations must be positive");
    if (t < previous) fail(ErrorCode::invalid_argument, "scan durations must be ascending");
    previous = t;
    PulseFamily f = family;
    f.channel_count = static_cast<int>(model.channel_count());
    if (f.kind == PulseKind::ramsey || f.kind == PulseKind::bang_bang) f.channel_count = 1;
    f.duration_cap = std::max(f.duration_cap, t);
    const auto pulse = render(f, f.canonical_variables(t), omega_hat > 0.0 ? omega_hat : 1.0);
    const auto result = fisher(model, g, pulse);
    out.push_back({t, result.fi, result.fi / (t * t)});
  }
  return out;
}

void write_fi_scan_csv(std::ostream& os, std::span<const FiScanPoint> scan) {
  os << "T,fi,theta\n";
  for (const auto& p : scan) os << format_double(p.duration) << ',' << format_double(p.fi) << ',' << format_double(p.theta) << '\n';
}

double optimal_duration_hint(const Matrix& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    fail(ErrorCode::invalid_argument, "covariance must be square and nonempty");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  const auto& vals = eig.eigenvalues();
  const double top = vals[vals.size() - 1];
  if (!(vals[0] > 1e-14 * std::max(top, 1e-300))) {
    fail(ErrorCode::degenerate_covariance, "optimal duration hint needs a positive-definite covariance");
  }
  double trace = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) trace += 1.0 / std::sqrt(vals[i]);
  return trace;
}

}  // namespace obsid
