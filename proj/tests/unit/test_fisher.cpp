#include "obsid/error.hpp"
#include "obsid/fisher.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace obsid;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
  ParameterVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ControlWaveform rabi(double T) { return ControlWaveform::single({{T, Complex(1.0, 0.0)}}); }

}  // namespace

TEST_CASE("fisher matrix is rank one") {
  const auto q1 = ModelSpec::one_qubit();
  const auto q2 = ModelSpec::two_qubit();
  for (double T : {0.4, 1.3, 3.7}) {
    const auto r = fisher(q1, vec({4.0, 6.0}), rabi(T));
    CHECK(r.fi >= 0.0);
    CHECK(std::abs(r.fi - r.fim.trace()) <= 1e-10 * r.fi);
    const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Matrix>(r.fim).eigenvalues();
    CHECK(std::abs(eig[1] - r.fi) <= 1e-10 * r.fi);
    CHECK(std::abs(eig[0]) <= 1e-10 * r.fi);
    CHECK(r.direction_defined);
    CHECK(r.direction.norm() == doctest::Approx(1.0));
  }
  ControlWaveform w;
  w.channels.push_back({{1.0, Complex(0.7, 0.0)}, {1.0, Complex(-0.3, 0.0)}});
  w.channels.push_back({{2.0, Complex(0.5, 0.0)}});
  const auto r = fisher(q2, vec({4.1, 5.5, 4.0, 6.0, 0.5}), w);
  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Matrix>(r.fim).eigenvalues();
  CHECK(std::abs(eig[4] - r.fi) <= 1e-10 * r.fi);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(eig[i]) <= 1e-10 * r.fi);
}

TEST_CASE("fisher information matches the closed form") {
  const auto q1 = ModelSpec::one_qubit();
  for (double delta : {0.0, 4.0}) {
    for (double T : {0.5, 1.1, 2.9}) {
      const double p = oracle::rabi_p0(delta, 6.0, T);
      const auto grad = oracle::rabi_gradient(delta, 6.0, T);
      const double expected = (grad[0] * grad[0] + grad[1] * grad[1]) / std::max(p - p * p, 1e-12);
      const auto r = fisher(q1, vec({delta, 6.0}), rabi(T));
      CHECK(std::abs(r.fi - expected) <= 1e-6 * expected);
      const double gnorm = std::hypot(grad[0], grad[1]);
      CHECK(std::abs(r.direction[0] - grad[0] / gnorm) < 1e-6);
      CHECK(std::abs(r.direction[1] - grad[1] / gnorm) < 1e-6);
    }
  }
}

TEST_CASE("flat response gives zero information") {
  const auto r = fisher(ModelSpec::one_qubit(), vec({4.0, 6.0}), rabi(1e-12));
  CHECK(r.fi < 1e-6);
  const auto z = fisher_from_gradient(0.5, vec({0.0, 0.0}));
  CHECK(z.fi == 0.0);
  CHECK(z.fim.norm() == 0.0);
  CHECK_FALSE(z.direction_defined);
  CHECK(fisher_from_gradient(1.0, vec({1.0, 0.0})).variance_clamped);
  CHECK_FALSE(fisher_from_gradient(0.5, vec({1.0, 0.0})).variance_clamped);
  CHECK(fisher_from_gradient(0.5, vec({1.0, 0.0})).fi == doctest::Approx(4.0));
}

TEST_CASE("unit rescaling of one parameter scales its score component") {
  // Omega measured in units of k: g1' = g1 / k and the model multiplies back,
  // realised here by scaling the drive amplitude by k.
  const auto q1 = ModelSpec::one_qubit();
  const double k = 2.5, T = 1.7;
  const auto base = fisher(q1, vec({4.0, 6.0}), rabi(T));
  ControlWaveform scaled = ControlWaveform::single({{T, Complex(k, 0.0)}});
  const auto r = fisher(q1, vec({4.0, 6.0 / k}), scaled);
  const double f0 = std::sqrt(base.fim(0, 0)), f1 = std::sqrt(base.fim(1, 1));
  CHECK(std::abs(std::sqrt(r.fim(0, 0)) - f0) < 1e-8 * (f0 + f1) * k);
  CHECK(std::abs(std::sqrt(r.fim(1, 1)) - k * f1) < 1e-6 * k * f1);
}

TEST_CASE("fi scan grows with a T^2 envelope") {
  const auto q1 = ModelSpec::one_qubit();
  std::vector<double> grid;
  for (int i = 0; i <= 3000; ++i) grid.push_back(0.5 + 7.5 * i / 3000.0);
  const auto scan = fi_scan(q1, vec({4.0, 6.0}), grid);
  REQUIRE(scan.size() == grid.size());
  std::vector<double> peaks_theta;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(scan[i].theta >= 0.0);
    CHECK(scan[i].theta == doctest::Approx(scan[i].fi / (scan[i].duration * scan[i].duration)));
    if (i > 0 && i + 1 < scan.size() && scan[i].theta > scan[i - 1].theta && scan[i].theta >= scan[i + 1].theta) {
      peaks_theta.push_back(scan[i].theta);
    }
  }
  REQUIRE(peaks_theta.size() >= 3);
  const auto [lo, hi] = std::minmax_element(peaks_theta.begin(), peaks_theta.end());
  CHECK(*hi / *lo < 3.0);

  std::ostringstream os;
  write_fi_scan_csv(os, std::span(scan).first(2));
  CHECK(os.str().rfind("T,fi,theta\n", 0) == 0);
}

TEST_CASE("duration hint") {
  CHECK(optimal_duration_hint(Matrix(vec({0.25, 0.25}).asDiagonal())) == doctest::Approx(4.0));
  CHECK(optimal_duration_hint(Matrix::Identity(3, 3) * 0.16) == doctest::Approx(3.0 / 0.4));
  CHECK(optimal_duration_hint(Matrix(vec({0.09, 0.09, 0.09, 0.09, 0.0009}).asDiagonal())) ==
        doctest::Approx(4.0 / 0.3 + 1.0 / 0.03));
  Matrix rotated(2, 2);
  rotated << 0.5, 0.3, 0.3, 0.5;  // eigenvalues 0.8, 0.2
  CHECK(optimal_duration_hint(rotated) == doctest::Approx(1.0 / std::sqrt(0.8) + 1.0 / std::sqrt(0.2)));
  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  bool threw = false;
  try {
    optimal_duration_hint(singular);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::degenerate_covariance;
  }
  CHECK(threw);
}

TEST_CASE("Cramer-Rao order of magnitude") {
  // Omega only: one high-shot Rabi measurement, grid posterior vs 1 / (fi r).
  const auto q1 = ModelSpec::one_qubit();
  const double T = 0.9, r = 10000.0, omega = 6.0;
  const double m = oracle::rabi_p0(0.0, omega, T);
  const double sigma = std::sqrt(m * (1.0 - m) / r);
  const auto f = fisher(q1, vec({0.0, omega}), rabi(T));
  const double fi_omega = f.fim(1, 1);
  // 1-D grid posterior over omega with a broad prior
  long double z = 0, m1 = 0, m2 = 0;
  for (int i = 0; i < 20001; ++i) {
    const double w = omega - 0.2 + 0.4 * i / 20000.0;
    const double d = oracle::rabi_p0(0.0, w, T) - m;
    const double l = std::exp(-d * d / (4.0 * sigma * sigma)) * std::exp(-0.5 * (w - omega) * (w - omega) / 0.25);
    z += l;
    m1 += l * w;
    m2 += l * w * w;
  }
  const double var = static_cast<double>(m2 / z - (m1 / z) * (m1 / z));
  const double bound = 0.5 / (fi_omega * r);
  CHECK(var >= bound / 5.0);
  CHECK(var <= bound * 5.0);
}
