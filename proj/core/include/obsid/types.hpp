#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>

namespace obsid {

using Complex = std::complex<double>;

/// A point g in model-parameter space (Hamiltonian energy scales, hbar = 1).
using ParameterVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A cloud of S parameter samples, stored column-wise (p x S).
struct Population {
  Matrix samples;

  Population() = default;
  explicit Population(Matrix m) : samples(std::move(m)) {}

  std::size_t size() const { return static_cast<std::size_t>(samples.cols()); }
  std::size_t dimension() const { return static_cast<std::size_t>(samples.rows()); }
  auto sample(std::size_t s) const { return samples.col(static_cast<Eigen::Index>(s)); }
  bool empty() const { return samples.cols() == 0; }
};

}  // namespace obsid
