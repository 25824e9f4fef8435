#include "obsid/pulses.hpp"

#include "obsid/error.hpp"

#include <cmath>
#include <numbers>

namespace obsid {

std::string to_string(PulseKind kind) {
  switch (kind) {
    case PulseKind::rabi: return "rabi";
    case PulseKind::ramsey: return "ramsey";
    case PulseKind::pwc_amplitude: return "pwc_amplitude";
    case PulseKind::bang_bang: return "bang_bang";
    case PulseKind::phase_only: return "phase_only";
  }
  return "unknown";
}

PulseKind pulse_kind_from_string(const std::string& name) {
  if (name == "rabi") return PulseKind::rabi;
  if (name == "ramsey") return PulseKind::ramsey;
  if (name == "pwc_amplitude") return PulseKind::pwc_amplitude;
  if (name == "bang_bang") return PulseKind::bang_bang;
  if (name == "phase_only") return PulseKind::phase_only;
  fail(ErrorCode::invalid_argument, "unknown pulse kind '" + name + "'");
}

std::size_t PulseFamily::variable_count() const {
  const auto n = static_cast<std::size_t>(segments);
  const auto c = static_cast<std::size_t>(channel_count);
  switch (kind) {
    case PulseKind::rabi:
    case PulseKind::ramsey: return 1;
    case PulseKind::pwc_amplitude:
    case PulseKind::phase_only: return n * c + 1;
    case PulseKind::bang_bang: return 3 * n - 2;
  }
  return 0;
}

std::string PulseFamily::tag() const {
  switch (kind) {
    case PulseKind::rabi:
    case PulseKind::ramsey: return to_string(kind);
    default: return to_string(kind) + "(" + std::to_string(segments) + ")";
  }
}

int PulseFamily::duration_index() const {
  return kind == PulseKind::bang_bang ? -1 : static_cast<int>(variable_count()) - 1;
}

void PulseFamily::validate() const {
  if (channel_count < 1 || channel_count > 2) fail(ErrorCode::invalid_argument, "channel_count must be 1 or 2");
  if (segments < 1) fail(ErrorCode::invalid_argument, "segment count must be >= 1");
  if (!(duration_cap > 0.0)) fail(ErrorCode::invalid_argument, "duration cap must be positive");
  if ((kind == PulseKind::ramsey || kind == PulseKind::bang_bang) && channel_count != 1) {
    fail(ErrorCode::invalid_argument, tag() + " supports a single channel only");
  }
  if (kind == PulseKind::ramsey && !(ramsey_width_fraction > 0.0 && ramsey_width_fraction < 0.5)) {
    fail(ErrorCode::invalid_argument, "ramsey width fraction must lie in (0, 0.5)");
  }
}

std::vector<Bounds> PulseFamily::bounds(DurationWindow window) const {
  const double t_max = std::min(window.max, duration_cap);
  const double t_min = std::min(window.min, t_max);
  const auto n = static_cast<std::size_t>(segments);
  std::vector<Bounds> out;
  out.reserve(variable_count());
  switch (kind) {
    case PulseKind::rabi:
    case PulseKind::ramsey: out.push_back({t_min, t_max}); break;
    case PulseKind::pwc_amplitude:
      out.assign(n * static_cast<std::size_t>(channel_count), Bounds{-1.0, 1.0});
      out.push_back({t_min, t_max});
      break;
    case PulseKind::phase_only:
      out.assign(n * static_cast<std::size_t>(channel_count), Bounds{-std::numbers::pi, std::numbers::pi});
      out.push_back({t_min, t_max});
      break;
    case PulseKind::bang_bang: {
      const double each = t_max / static_cast<double>(2 * n - 1);
      out.assign(2 * n - 1, Bounds{0.0, each});
      out.insert(out.end(), n - 1, Bounds{-std::numbers::pi, std::numbers::pi});
      break;
    }
  }
  return out;
}

std::vector<double> PulseFamily::canonical_variables(double duration) const {
  const auto n = static_cast<std::size_t>(segments);
  std::vector<double> v;
  switch (kind) {
    case PulseKind::rabi:
    case PulseKind::ramsey: v = {duration}; break;
    case PulseKind::pwc_amplitude:
      v.assign(n * static_cast<std::size_t>(channel_count), 1.0);
      v.push_back(duration);
      break;
    case PulseKind::phase_only:
      v.assign(n * static_cast<std::size_t>(channel_count), 0.0);
      v.push_back(duration);
      break;
    case PulseKind::bang_bang:
      v.assign(2 * n - 1, duration / static_cast<double>(2 * n - 1));
      v.insert(v.end(), n - 1, 0.0);
      break;
  }
  return v;
}

double ramsey_kick_width(const PulseFamily& family, double duration, double omega_estimate) {
  return std::min(family.ramsey_width_fraction * duration, std::numbers::pi / (20.0 * omega_estimate));
}

namespace {

void check_duration(const PulseFamily& family, double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) fail(ErrorCode::invalid_argument, "pulse duration must be positive");
  if (duration > family.duration_cap * (1.0 + 1e-12)) {
    fail(ErrorCode::invalid_argument, "pulse duration " + std::to_string(duration) + " exceeds cap " +
                                          std::to_string(family.duration_cap));
  }
}

}  // namespace

ControlWaveform render(const PulseFamily& family, std::span<const double> variables, double omega_estimate) {
  family.validate();
  if (variables.size() != family.variable_count()) {
    fail(ErrorCode::invalid_argument, family.tag() + " expects " + std::to_string(family.variable_count()) +
                                          " variables, got " + std::to_string(variables.size()));
  }
  for (double v : variables) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "pulse variables must be finite");
  }
  const auto n = static_cast<std::size_t>(family.segments);
  const auto channels = static_cast<std::size_t>(family.channel_count);
  ControlWaveform w;
  w.channels.resize(channels);

  switch (family.kind) {
    case PulseKind::rabi: {
      const double t = variables[0];
      check_duration(family, t);
      for (auto& ch : w.channels) ch = {Segment{t, Complex{1.0, 0.0}}};
      break;
    }
    case PulseKind::ramsey: {
      const double t = variables[0];
      check_duration(family, t);
      if (!(omega_estimate > 0.0)) fail(ErrorCode::invalid_argument, "ramsey rendering needs omega_estimate > 0");
      const double width = ramsey_kick_width(family, t, omega_estimate);
      const double kick = std::numbers::pi / (2.0 * omega_estimate * width);
      w.channels[0] = {Segment{width, Complex{kick, 0.0}}, Segment{t - 2.0 * width, Complex{}},
                       Segment{width, Complex{-kick, 0.0}}};
      break;
    }
    case PulseKind::pwc_amplitude:
    case PulseKind::phase_only: {
      const double t = variables.back();
      check_duration(family, t);
      const double width = t / static_cast<double>(n);
      for (std::size_t c = 0; c < channels; ++c) {
        auto& ch = w.channels[c];
        ch.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
          const double v = variables[c * n + k];
          if (family.kind == PulseKind::pwc_amplitude) {
            if (v < -1.0 || v > 1.0) fail(ErrorCode::invalid_argument, "PWC amplitudes must lie in [-1, 1]");
            ch.push_back({width, Complex{v, 0.0}});
          } else {
            ch.push_back({width, std::polar(1.0, v)});
          }
        }
      }
      break;
    }
    case PulseKind::bang_bang: {
      const auto on = variables.subspan(0, n);
      const auto off = variables.subspan(n, n - 1);
      const auto phases = variables.subspan(2 * n - 1, n - 1);
      double total = 0.0;
      auto& ch = w.channels[0];
      for (std::size_t k = 0; k < n; ++k) {
        if (on[k] < 0.0 || (k + 1 < n && off[k] < 0.0)) {
          fail(ErrorCode::invalid_argument, "bang-bang durations must be non-negative");
        }
        const double phase = k == 0 ? 0.0 : phases[k - 1];
        if (on[k] > 0.0) ch.push_back({on[k], std::polar(1.0, phase)});
        total += on[k];
        if (k + 1 < n) {
          if (off[k] > 0.0) ch.push_back({off[k], Complex{}});
          total += off[k];
        }
      }
      check_duration(family, total);
      break;
    }
  }
  return w;
}

double duration_of(const PulseChoice& choice) { return choice.rendered.duration(); }

}  // namespace obsid
