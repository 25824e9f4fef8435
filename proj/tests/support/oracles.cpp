#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using C = std::complex<double>;

double rabi_p0(double delta, double omega, double T) {
  const double w = std::sqrt(delta * delta + omega * omega);
  if (w == 0.0) return 1.0;
  const double s = std::sin(w * T / 2.0);
  return 1.0 - (omega * omega) / (w * w) * s * s;
}

std::array<double, 2> rabi_gradient(double delta, double omega, double T) {
  // P = 1 - A sin^2(wT/2), A = omega^2 / w^2, w = sqrt(delta^2 + omega^2)
  const double w2 = delta * delta + omega * omega;
  const double w = std::sqrt(w2);
  const double A = omega * omega / w2;
  const double s = std::sin(w * T / 2.0);
  const double dA_ddelta = -2.0 * omega * omega * delta / (w2 * w2);
  const double dA_domega = 2.0 * omega / w2 - 2.0 * omega * omega * omega / (w2 * w2);
  // d sin^2(wT/2) / dw = sin(wT) T / 2
  const double dS_dw = std::sin(w * T) * T / 2.0;
  return {-(dA_ddelta * s * s + A * dS_dw * delta / w), -(dA_domega * s * s + A * dS_dw * omega / w)};
}

namespace {

Eigen::MatrixXcd qubit_h(double delta, double omega, C c) {
  Eigen::MatrixXcd h(2, 2);
  h << C(-delta / 2.0), omega * c / 2.0, omega * std::conj(c) / 2.0, C(delta / 2.0);
  return h;
}

Eigen::MatrixXcd build_h(const obsid::ModelSpec& model, const obsid::ParameterVector& g, C c1, C c2) {
  if (model.family == obsid::ModelFamily::one_qubit_2param) return qubit_h(g[0], g[1], c1);
  const Eigen::MatrixXcd h1 = qubit_h(g[0], g[1], c1);
  const Eigen::MatrixXcd h2 = qubit_h(g[2], g[3], c2);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4, 4);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int k = 0; k < 2; ++k) {
        h(2 * a + k, 2 * b + k) += h1(a, b);
        h(2 * k + a, 2 * k + b) += h2(a, b);
      }
    }
  }
  h(1, 2) += g[4];
  h(2, 1) += g[4];
  return h;
}

C value_at(const std::vector<obsid::Segment>& channel, double t) {
  double start = 0.0;
  for (const auto& s : channel) {
    if (t < start + s.duration) return s.value;
    start += s.duration;
  }
  return channel.back().value;
}

}  // namespace

Eigen::VectorXcd rk4_state(const obsid::ModelSpec& model, const obsid::ParameterVector& g,
                           const obsid::ControlWaveform& pulse, int steps) {
  std::vector<double> cuts{0.0};
  for (const auto& ch : pulse.channels) {
    double t = 0.0;
    for (const auto& s : ch) cuts.push_back(t += s.duration);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-13; }),
             cuts.end());
  const double total = cuts.back();

  const auto dim = static_cast<Eigen::Index>(model.family == obsid::ModelFamily::one_qubit_2param ? 2 : 4);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi[0] = 1.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double len = cuts[k + 1] - cuts[k];
    if (len <= 0.0) continue;
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const C c1 = value_at(pulse.channels[0], mid);
    const C c2 = pulse.channels.size() > 1 ? value_at(pulse.channels[1], mid) : C(0.0);
    const Eigen::MatrixXcd A = C(0.0, -1.0) * build_h(model, g, c1, c2);
    const int n = std::max(10, static_cast<int>(std::ceil(steps * len / total)));
    const double dt = len / n;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXcd k1 = A * psi;
      const Eigen::VectorXcd k2 = A * (psi + 0.5 * dt * k1);
      const Eigen::VectorXcd k3 = A * (psi + 0.5 * dt * k2);
      const Eigen::VectorXcd k4 = A * (psi + dt * k3);
      psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return psi;
}

double rk4_p0(const obsid::ModelSpec& model, const obsid::ParameterVector& g, const obsid::ControlWaveform& pulse,
              int steps) {
  return std::norm(rk4_state(model, g, pulse, steps)[0]);
}

obsid::ParameterVector richardson_gradient(const std::function<double(const obsid::ParameterVector&)>& f,
                                           const obsid::ParameterVector& g, double step) {
  obsid::ParameterVector grad(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    auto central = [&](double h) {
      obsid::ParameterVector up = g, down = g;
      up[i] += h;
      down[i] -= h;
      return (f(up) - f(down)) / (2.0 * h);
    };
    const double d1 = central(step);
    const double d2 = central(step / 2.0);
    grad[i] = (4.0 * d2 - d1) / 3.0;
  }
  return grad;
}

double ideal_ramsey_p0(double delta, double tau) {
  // Rx(theta) = exp(-i theta X / 2); free evolution exp(-i tau (-delta Z / 2))
  auto rx = [](double theta) {
    Eigen::Matrix2cd m;
    m << std::cos(theta / 2.0), C(0.0, -std::sin(theta / 2.0)), C(0.0, -std::sin(theta / 2.0)), std::cos(theta / 2.0);
    return m;
  };
  Eigen::Matrix2cd free = Eigen::Matrix2cd::Zero();
  free(0, 0) = std::exp(C(0.0, delta * tau / 2.0));
  free(1, 1) = std::exp(C(0.0, -delta * tau / 2.0));
  const Eigen::Matrix2cd u = rx(-std::numbers::pi / 2.0) * free * rx(std::numbers::pi / 2.0);
  return std::norm(u(0, 0));
}

namespace {

template <class Fn>
void for_grid(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance, int n, double span, Fn&& fn) {
  const Eigen::Matrix2d inv = covariance.inverse();
  const double sx = std::sqrt(covariance(0, 0)), sy = std::sqrt(covariance(1, 1));
  const double hx = 2.0 * span * sx / n, hy = 2.0 * span * sy / n;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector2d g(mean[0] - span * sx + (i + 0.5) * hx, mean[1] - span * sy + (k + 0.5) * hy);
      const Eigen::Vector2d d = g - mean;
      fn(g, std::exp(-0.5 * d.dot(inv * d)) * hx * hy);
    }
  }
}

}  // namespace

GridPosterior grid_bayes(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance,
                         const std::function<double(const Eigen::Vector2d&)>& likelihood, int n, double span) {
  long double z = 0.0L, m0 = 0.0L, m1 = 0.0L;
  std::vector<std::pair<Eigen::Vector2d, double>> cells;
  cells.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for_grid(mean, covariance, n, span, [&](const Eigen::Vector2d& g, double w) {
    const double p = w * likelihood(g);
    cells.emplace_back(g, p);
    z += p;
    m0 += p * g[0];
    m1 += p * g[1];
  });
  GridPosterior out;
  out.mean = Eigen::Vector2d(static_cast<double>(m0 / z), static_cast<double>(m1 / z));
  long double c00 = 0.0L, c01 = 0.0L, c11 = 0.0L;
  for (const auto& [g, p] : cells) {
    const Eigen::Vector2d d = g - out.mean;
    c00 += p * d[0] * d[0];
    c01 += p * d[0] * d[1];
    c11 += p * d[1] * d[1];
  }
  out.covariance << static_cast<double>(c00 / z), static_cast<double>(c01 / z), static_cast<double>(c01 / z),
      static_cast<double>(c11 / z);
  return out;
}

double grid_expectation(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance,
                        const std::function<double(const Eigen::Vector2d&)>& f, int n, double span) {
  long double z = 0.0L, acc = 0.0L;
  for_grid(mean, covariance, n, span, [&](const Eigen::Vector2d& g, double w) {
    z += w;
    acc += w * f(g);
  });
  return static_cast<double>(acc / z);
}

long double extended_sum(std::span<const double> values) {
  long double acc = 0.0L;
  for (double v : values) acc += static_cast<long double>(v);
  return acc;
}

obsid::Population sample_gaussian(const obsid::ParameterVector& mean, const obsid::Matrix& covariance, std::size_t n,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const obsid::Matrix L = Eigen::LLT<obsid::Matrix>(covariance).matrixL();
  obsid::Matrix samples(mean.size(), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    samples.col(static_cast<Eigen::Index>(s)) = mean + L * z;
  }
  return obsid::Population(std::move(samples));
}

}  // namespace oracle
