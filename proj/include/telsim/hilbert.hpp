#pragma once

// One-particle space L²(G) reduced to a finite abstract orthonormal basis,
// and the beam-splitter operator data (K1, K2, T) acting on it. Only the
// finitely many inner products among the designated vectors ever matter,
// so an ambient dimension of N (half-half) or 2N (two regions) suffices.

#include <cmath>
#include <optional>
#include <vector>

#include "telsim/common.hpp"

namespace telsim {

inline Complex mode_inner(const ModeVector& g, const ModeVector& h) {
  require(g.size() == h.size(), "mode_inner: dimension mismatch");
  return g.dot(h);  // conjugate-linear in the first argument
}

inline double mode_norm2(const ModeVector& g) { return g.squaredNorm(); }

inline bool mode_finite(const ModeVector& g) {
  return g.allFinite();
}

enum class SplittingKind { HalfHalf, ProjectionPair, Custom };

// Beam-splitter data: K1*K1 + K2*K2 = 1, T unitary, and on the designated
// basis {g_j}: T K1 g_j = K2 g_j, the K_r g_j mutually orthogonal with
// squared norm 1/2.
struct Splitting {
  ComplexMatrix k1;
  ComplexMatrix k2;
  ComplexMatrix t;
  SplittingKind kind = SplittingKind::Custom;
  std::vector<ModeVector> basis;  // the designated g_j

  // Region masks over ambient coordinates, set for projection-pair
  // splittings: x1 = Alice's region, x2 = Bob's region.
  std::optional<std::vector<bool>> region_x1;
  std::optional<std::vector<bool>> region_x2;

  Eigen::Index ambient_dim() const { return k1.rows(); }
};

// K1 = K2 = (1/sqrt 2)·I on C^n, T = I; g_j = e_j.
inline Splitting half_half_splitting(int n) {
  require(n >= 1, "half_half_splitting: n must be >= 1");
  Splitting s;
  const double r = 1.0 / std::sqrt(2.0);
  s.k1 = r * ComplexMatrix::Identity(n, n);
  s.k2 = s.k1;
  s.t = ComplexMatrix::Identity(n, n);
  s.kind = SplittingKind::HalfHalf;
  s.basis.reserve(n);
  for (int j = 0; j < n; ++j) {
    ModeVector g = ModeVector::Zero(n);
    g(j) = 1.0;
    s.basis.push_back(std::move(g));
  }
  return s;
}

// Two disjoint regions, one coordinate pair per g_j: coordinate 2j carries
// the X1-part and 2j+1 the X2-part of g_j = (e_{2j} + e_{2j+1})/sqrt 2.
// K1, K2 project onto the even/odd coordinates and T swaps the pair, so
// T restricted to K1 g_j realizes the translation X1 -> X2.
inline Splitting projection_splitting(int n) {
  require(n >= 1, "projection_splitting: n must be >= 1");
  const int m = 2 * n;
  Splitting s;
  s.k1 = ComplexMatrix::Zero(m, m);
  s.k2 = ComplexMatrix::Zero(m, m);
  s.t = ComplexMatrix::Zero(m, m);
  std::vector<bool> x1(m, false), x2(m, false);
  for (int j = 0; j < n; ++j) {
    s.k1(2 * j, 2 * j) = 1.0;
    s.k2(2 * j + 1, 2 * j + 1) = 1.0;
    s.t(2 * j + 1, 2 * j) = 1.0;
    s.t(2 * j, 2 * j + 1) = 1.0;
    x1[2 * j] = true;
    x2[2 * j + 1] = true;
  }
  s.kind = SplittingKind::ProjectionPair;
  s.region_x1 = std::move(x1);
  s.region_x2 = std::move(x2);
  const double r = 1.0 / std::sqrt(2.0);
  s.basis.reserve(n);
  for (int j = 0; j < n; ++j) {
    ModeVector g = ModeVector::Zero(m);
    g(2 * j) = r;
    g(2 * j + 1) = r;
    s.basis.push_back(std::move(g));
  }
  return s;
}

namespace detail {

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace detail

// Residuals of the splitting identities on the given basis, one named check
// per identity in the operator data.
inline ValidationReport validate_splitting(const Splitting& s,
                                           const std::vector<ModeVector>& basis,
                                           double tol = kOperatorTol) {
  const Eigen::Index m = s.ambient_dim();
  require(s.k1.rows() == m && s.k1.cols() == m && s.k2.rows() == m &&
              s.k2.cols() == m && s.t.rows() == m && s.t.cols() == m,
          "validate_splitting: operator shape mismatch");
  for (const auto& g : basis)
    require(g.size() == m, "validate_splitting: basis vector dimension mismatch");

  ValidationReport report;
  const ComplexMatrix eye = ComplexMatrix::Identity(m, m);
  report.add("splitting.completeness",
             detail::max_abs(s.k1.adjoint() * s.k1 + s.k2.adjoint() * s.k2 - eye), tol);
  report.add("splitting.t_unitary", detail::max_abs(s.t.adjoint() * s.t - eye), tol);

  double transport = 0.0, k1_cross = 0.0, k2_cross = 0.0, half_mass = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const ModeVector k1g = s.k1 * basis[j];
    const ModeVector k2g = s.k2 * basis[j];
    transport = std::max(transport, (s.t * k1g - k2g).norm());
    half_mass = std::max(half_mass, std::abs(k1g.squaredNorm() - 0.5));
    half_mass = std::max(half_mass, std::abs(k2g.squaredNorm() - 0.5));
    for (std::size_t k = 0; k < j; ++k) {
      k1_cross = std::max(k1_cross, std::abs(mode_inner(s.k1 * basis[k], k1g)));
      k2_cross = std::max(k2_cross, std::abs(mode_inner(s.k2 * basis[k], k2g)));
    }
  }
  report.add("splitting.transport", transport, tol);
  report.add("splitting.k1_orthogonal", k1_cross, tol);
  report.add("splitting.half_mass", half_mass, tol);
  report.add("splitting.k2_orthogonal", k2_cross, tol);
  return report;
}

inline ValidationReport validate_splitting(const Splitting& s, double tol = kOperatorTol) {
  return validate_splitting(s, s.basis, tol);
}

}  // namespace telsim
