#pragma once

// Seeded, implementation-independent randomness for property tests and the
// CLI's random states: mt19937_64 plus a hand-rolled Box-Muller, so the same
// seed yields the same stream on every standard library.

#include <cstdint>
#include <random>

#include "telsim/common.hpp"
#include "telsim/teleport.hpp"

namespace telsim::rng {

inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;  // in (0, 1]
}

inline double gaussian(std::mt19937_64& gen) {
  const double u = uniform01(gen);
  const double v = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

inline Complex complex_gaussian(std::mt19937_64& gen) {
  const double re = gaussian(gen);
  const double im = gaussian(gen);
  return {re * M_SQRT1_2, im * M_SQRT1_2};
}

inline ModeVector random_mode_vector(int dim, std::mt19937_64& gen, double scale = 1.0) {
  ModeVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = scale * complex_gaussian(gen);
  return v;
}

// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
// of diag(R) absorbed into Q.
inline ComplexMatrix haar_unitary(int dim, std::mt19937_64& gen) {
  ComplexMatrix z(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) z(i, j) = complex_gaussian(gen);
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex diag = r(j, j);
    q.col(j) *= std::abs(diag) > 0.0 ? diag / std::abs(diag) : Complex(1.0);
  }
  return q;
}

// Random qudit state with Haar amplitude rows; mixed states draw their
// weights from the flat simplex distribution.
inline QuditState random_qudit_state(int dim, std::uint64_t seed, bool pure = false) {
  std::mt19937_64 gen(seed);
  QuditState q;
  q.amplitudes = haar_unitary(dim, gen).transpose();  // rows orthonormal
  q.weights = Eigen::VectorXd::Zero(dim);
  if (pure) {
    q.weights(0) = 1.0;
  } else {
    double sum = 0.0;
    for (int s = 0; s < dim; ++s) {
      q.weights(s) = -std::log(uniform01(gen));
      sum += q.weights(s);
    }
    q.weights /= sum;
  }
  return q;
}

}  // namespace telsim::rng
