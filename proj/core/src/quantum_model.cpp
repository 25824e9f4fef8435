#include "obsid/quantum_model.hpp"

#include "obsid/error.hpp"
#include "obsid/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace obsid {

double ControlWaveform::duration() const {
  if (channels.empty()) return 0.0;
  double total = 0.0;
  for (const auto& seg : channels.front()) total += seg.duration;
  return total;
}

std::size_t ControlWaveform::segment_count() const {
  std::size_t n = 0;
  for (const auto& ch : channels) n += ch.size();
  return n;
}

void ControlWaveform::validate() const {
  if (channels.empty()) fail(ErrorCode::invalid_argument, "control waveform has no channels");
  double reference = -1.0;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].empty()) fail(ErrorCode::invalid_argument, "control channel has no segments");
    double total = 0.0;
    for (const auto& seg : channels[c]) {
      if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
        fail(ErrorCode::invalid_argument, "segment duration must be positive and finite");
      }
      if (!std::isfinite(seg.value.real()) || !std::isfinite(seg.value.imag())) {
        fail(ErrorCode::invalid_argument, "segment value must be finite");
      }
      total += seg.duration;
    }
    if (reference < 0.0) {
      reference = total;
    } else if (std::abs(total - reference) > 1e-9 * std::max(1.0, reference)) {
      std::ostringstream os;
      os << "channel " << c << " duration " << total << " differs from channel 0 duration " << reference;
      fail(ErrorCode::invalid_argument, os.str());
    }
  }
}

ControlWaveform ControlWaveform::single(std::vector<Segment> segments) {
  ControlWaveform w;
  w.channels.push_back(std::move(segments));
  return w;
}

std::vector<MergedSegment> merge_channels(const ControlWaveform& pulse) {
  constexpr std::size_t kMaxSegments = 1'000'000;
  pulse.validate();
  if (pulse.channel_count() > 2) fail(ErrorCode::invalid_argument, "at most two control channels are supported");

  std::vector<MergedSegment> merged;
  if (pulse.channel_count() == 1) {
    const auto& ch = pulse.channels.front();
    if (ch.size() > kMaxSegments) fail(ErrorCode::segment_overflow, "more than 10^6 segments");
    merged.reserve(ch.size());
    for (const auto& seg : ch) merged.push_back({seg.duration, {seg.value, Complex{}}});
    return merged;
  }

  // Sweep both channels' boundaries. Remaining-time bookkeeping avoids
  // accumulating absolute time, so identical grids merge without slivers.
  const auto& a = pulse.channels[0];
  const auto& b = pulse.channels[1];
  std::size_t ia = 0, ib = 0;
  double left_a = a[0].duration, left_b = b[0].duration;
  const double tol = 1e-12 * std::max(1.0, pulse.duration());
  while (ia < a.size() && ib < b.size()) {
    const double step = std::min(left_a, left_b);
    if (step > tol) merged.push_back({step, {a[ia].value, b[ib].value}});
    if (merged.size() > kMaxSegments) fail(ErrorCode::segment_overflow, "more than 10^6 merged segments");
    left_a -= step;
    left_b -= step;
    if (left_a <= tol) {
      ++ia;
      if (ia < a.size()) left_a += a[ia].duration;
    }
    if (left_b <= tol) {
      ++ib;
      if (ib < b.size()) left_b += b[ib].duration;
    }
  }
  return merged;
}

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::one_qubit_2param: return "one_qubit_2param";
    case ModelFamily::two_qubit_5param: return "two_qubit_5param";
  }
  return "unknown";
}

ModelFamily model_family_from_string(const std::string& name) {
  if (name == "one_qubit_2param") return ModelFamily::one_qubit_2param;
  if (name == "two_qubit_5param") return ModelFamily::two_qubit_5param;
  fail(ErrorCode::invalid_argument, "unknown model family '" + name + "'");
}

ModelSpec ModelSpec::one_qubit() {
  ModelSpec m;
  m.family = ModelFamily::one_qubit_2param;
  m.parameter_labels = {"delta", "omega"};
  return m;
}

ModelSpec ModelSpec::two_qubit() {
  ModelSpec m;
  m.family = ModelFamily::two_qubit_5param;
  m.parameter_labels = {"delta1", "omega1", "delta2", "omega2", "J"};
  return m;
}

ModelSpec ModelSpec::for_family(ModelFamily family) {
  return family == ModelFamily::one_qubit_2param ? one_qubit() : two_qubit();
}

std::size_t ModelSpec::parameter_count() const {
  return family == ModelFamily::one_qubit_2param ? 2 : 5;
}

std::size_t ModelSpec::hilbert_dimension() const {
  return family == ModelFamily::one_qubit_2param ? 2 : 4;
}

std::size_t ModelSpec::channel_count() const {
  return family == ModelFamily::one_qubit_2param ? 1 : 2;
}

void ModelSpec::validate() const {
  if (parameter_labels.size() != parameter_count()) {
    fail(ErrorCode::invalid_argument, "model " + to_string(family) + " expects " +
                                          std::to_string(parameter_count()) + " parameter labels");
  }
  const int dim = static_cast<int>(hilbert_dimension());
  if (initial_state < 0 || initial_state >= dim) fail(ErrorCode::invalid_argument, "initial state out of range");
  for (int k : return_projector) {
    if (k < 0 || k >= dim) fail(ErrorCode::invalid_argument, "return projector index out of range");
  }
}

namespace {

void check_dimensions(const ModelSpec& model, const ParameterVector& g) {
  if (static_cast<std::size_t>(g.size()) != model.parameter_count()) {
    fail(ErrorCode::invalid_argument, "parameter vector has length " + std::to_string(g.size()) + ", model expects " +
                                          std::to_string(model.parameter_count()));
  }
}

// 2x2 block -Delta Z/2 + Omega (c L + c* L^dagger)/2 written into `h` at offset.
void add_qubit_term(Eigen::Matrix4cd& h, double delta, double omega, Complex c, int qubit) {
  // qubit 0 is the high bit of the two-qubit index.
  for (int other = 0; other < 2; ++other) {
    const int i0 = qubit == 0 ? (0 << 1) | other : (other << 1) | 0;
    const int i1 = qubit == 0 ? (1 << 1) | other : (other << 1) | 1;
    h(i0, i0) += -delta / 2.0;
    h(i1, i1) += delta / 2.0;
    h(i0, i1) += omega * c / 2.0;
    h(i1, i0) += omega * std::conj(c) / 2.0;
  }
}

Eigen::Matrix4cd two_qubit_hamiltonian(const ParameterVector& g, Complex c1, Complex c2) {
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  add_qubit_term(h, g[0], g[1], c1, 0);
  add_qubit_term(h, g[2], g[3], c2, 1);
  // J (L1^dagger L2 + L2^dagger L1) couples |01> <-> |10>
  h(1, 2) += g[4];
  h(2, 1) += g[4];
  return h;
}

double projector_weight(const ModelSpec& model, const Complex* psi) {
  if (model.return_projector.empty()) return std::norm(psi[model.initial_state]);
  double p = 0.0;
  for (int k : model.return_projector) p += std::norm(psi[k]);
  return p;
}

// Closed-form exp(-i H dt) for H = h.sigma applied in place.
inline void propagate_qubit(Complex& a, Complex& b, double delta, double omega, Complex c, double dt) {
  const double hz = -delta / 2.0;
  const double hx = omega * c.real() / 2.0;
  const double hy = -omega * c.imag() / 2.0;
  const double norm = std::sqrt(hx * hx + hy * hy + hz * hz);
  const double theta = norm * dt;
  const double cs = std::cos(theta);
  // sin(theta)/norm, stable as norm -> 0
  const double sn = theta > 1e-8 ? std::sin(theta) / norm : dt * (1.0 - theta * theta / 6.0);
  const Complex off(hx, -hy);  // H01
  const Complex ha = hz * a + off * b;
  const Complex hb = std::conj(off) * a - hz * b;
  const Complex minus_i(0.0, -1.0);
  a = cs * a + minus_i * sn * ha;
  b = cs * b + minus_i * sn * hb;
}

void evolve_one_qubit(const ModelSpec& model, const ParameterVector& g, std::span<const MergedSegment> merged,
                      Complex* psi) {
  psi[0] = psi[1] = Complex{};
  psi[model.initial_state] = 1.0;
  for (const auto& seg : merged) propagate_qubit(psi[0], psi[1], g[0], g[1], seg.values[0], seg.duration);
}

void evolve_two_qubit(const ModelSpec& model, const ParameterVector& g, std::span<const MergedSegment> merged,
                      Eigen::Vector4cd& psi) {
  psi.setZero();
  psi[model.initial_state] = 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver;
  Eigen::Vector4cd coeff;
  for (const auto& seg : merged) {
    solver.compute(two_qubit_hamiltonian(g, seg.values[0], seg.values[1]));
    const auto& vecs = solver.eigenvectors();
    const auto& vals = solver.eigenvalues();
    coeff.noalias() = vecs.adjoint() * psi;
    for (int k = 0; k < 4; ++k) coeff[k] *= std::polar(1.0, -vals[k] * seg.duration);
    psi.noalias() = vecs * coeff;
  }
}

void check_finite(double p0) {
  if (!std::isfinite(p0)) fail(ErrorCode::model_blowup, "model response is not finite");
}

}  // namespace

Eigen::MatrixXcd hamiltonian(const ModelSpec& model, const ParameterVector& g,
                             std::span<const Complex> control_values) {
  check_dimensions(model, g);
  if (control_values.size() != model.channel_count()) {
    fail(ErrorCode::invalid_argument, "expected " + std::to_string(model.channel_count()) + " control values");
  }
  if (model.family == ModelFamily::one_qubit_2param) {
    const Complex c = control_values[0];
    Eigen::Matrix2cd h;
    h(0, 0) = -g[0] / 2.0;
    h(1, 1) = g[0] / 2.0;
    h(0, 1) = g[1] * c / 2.0;
    h(1, 0) = g[1] * std::conj(c) / 2.0;
    return h;
  }
  return two_qubit_hamiltonian(g, control_values[0], control_values[1]);
}

double return_probability(const ModelSpec& model, const ParameterVector& g, std::span<const MergedSegment> merged) {
  if (model.family == ModelFamily::one_qubit_2param) {
    Complex psi[2];
    evolve_one_qubit(model, g, merged, psi);
    const double p0 = projector_weight(model, psi);
    check_finite(p0);
    return p0;
  }
  Eigen::Vector4cd psi;
  evolve_two_qubit(model, g, merged, psi);
  const double p0 = projector_weight(model, psi.data());
  check_finite(p0);
  return p0;
}

double return_probability(const ModelSpec& model, const ParameterVector& g, const ControlWaveform& pulse) {
  check_dimensions(model, g);
  if (pulse.channel_count() != model.channel_count()) {
    fail(ErrorCode::invalid_argument, "pulse has " + std::to_string(pulse.channel_count()) +
                                          " channels, model expects " + std::to_string(model.channel_count()));
  }
  const auto merged = merge_channels(pulse);
  return return_probability(model, g, merged);
}

EvolutionResult evolve(const ModelSpec& model, const ParameterVector& g, const ControlWaveform& pulse) {
  check_dimensions(model, g);
  if (pulse.channel_count() != model.channel_count()) {
    fail(ErrorCode::invalid_argument, "pulse has " + std::to_string(pulse.channel_count()) +
                                          " channels, model expects " + std::to_string(model.channel_count()));
  }
  const auto merged = merge_channels(pulse);
  EvolutionResult result;
  if (model.family == ModelFamily::one_qubit_2param) {
    Complex psi[2];
    evolve_one_qubit(model, g, merged, psi);
    result.final_state = Eigen::Vector2cd(psi[0], psi[1]);
  } else {
    Eigen::Vector4cd psi;
    evolve_two_qubit(model, g, merged, psi);
    result.final_state = psi;
  }
  result.p0 = projector_weight(model, result.final_state.data());
  check_finite(result.p0);
  return result;
}

ParameterVector response_gradient(const ModelSpec& model, const ParameterVector& g,
                                  std::span<const MergedSegment> merged) {
  ParameterVector grad(g.size());
  ParameterVector probe = g;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double h = std::max(1e-6 * std::abs(g[i]), 1e-8);
    probe[i] = g[i] + h;
    const double up = return_probability(model, probe, merged);
    probe[i] = g[i] - h;
    const double down = return_probability(model, probe, merged);
    probe[i] = g[i];
    grad[i] = (up - down) / (2.0 * h);
    if (!std::isfinite(grad[i])) fail(ErrorCode::model_blowup, "non-finite response gradient");
  }
  return grad;
}

ParameterVector response_gradient(const ModelSpec& model, const ParameterVector& g, const ControlWaveform& pulse) {
  check_dimensions(model, g);
  if (pulse.channel_count() != model.channel_count()) {
    fail(ErrorCode::invalid_argument, "pulse channel count does not match model");
  }
  const auto merged = merge_channels(pulse);
  return response_gradient(model, g, merged);
}

std::vector<double> batch_response(const ModelSpec& model, const Population& population,
                                   const ControlWaveform& pulse) {
  if (population.dimension() != model.parameter_count()) {
    fail(ErrorCode::invalid_argument, "population dimension does not match model");
  }
  if (pulse.channel_count() != model.channel_count()) {
    fail(ErrorCode::invalid_argument, "pulse channel count does not match model");
  }
  const auto merged = merge_channels(pulse);
  std::vector<double> out(population.size());
  parallel_for(population.size(), [&](std::size_t begin, std::size_t end) {
    ParameterVector g(population.dimension());
    for (std::size_t s = begin; s < end; ++s) {
      g = population.sample(s);
      try {
        out[s] = return_probability(model, g, merged);
      } catch (const Error& e) {
        fail(e.code(), std::string(e.what()) + " (sample " + std::to_string(s) + ")");
      }
    }
  });
  return out;
}

}  // namespace obsid
