#pragma once

// Exact linear algebra over finite coherent spans of the symmetric Fock
// space. A vector is a finite sum of amplitudes times tensor products of
// normalized exponential vectors |exp(h)> = e^{-|h|^2/2} exp(h); every inner
// product reduces to the shifted kernel e^{<g,h> - |g|^2/2 - |h|^2/2}, whose
// modulus never exceeds 1, so high-density beams stay inside double range.
// Kernel sums are accumulated in long double: verifying orthogonality of
// coherent families through the kernel is badly conditioned as the overlaps
// approach 1 (low density), and the extra mantissa keeps those residuals
// meaningful.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "telsim/common.hpp"
#include "telsim/hilbert.hpp"

namespace telsim {

using LComplex = std::complex<long double>;

inline constexpr double kTermMergeTol = 1e-12;
inline constexpr double kFrameCutoff = 1e-10;  // relative Gram eigenvalue cutoff

namespace detail {

inline LComplex to_l(const Complex& z) { return {z.real(), z.imag()}; }

inline LComplex exp_l(long double re, long double im) {
  const long double mag = std::exp(re);
  return {mag * std::cos(im), mag * std::sin(im)};
}

}  // namespace detail

// <exp(g), exp(h)> = e^{<g,h>}. Overflows for large vectors; protocol-scale
// arithmetic goes through normalized_kernel instead.
inline Complex exponential_kernel(const ModeVector& g, const ModeVector& h) {
  return std::exp(mode_inner(g, h));
}

namespace detail {

// <|exp(g)>, |exp(h)>> with the real part of the exponent written as
// -|g-h|^2/2, which is exact for g = h and free of cancellation.
inline LComplex normalized_kernel_acc(const ModeVector& g, const ModeVector& h) {
  require(g.size() == h.size(), "kernel: dimension mismatch");
  const long double re = -0.5L * static_cast<long double>((g - h).squaredNorm());
  const long double im = static_cast<long double>(g.dot(h).imag());
  return exp_l(re, im);
}

}  // namespace detail

// <|exp(g)>, |exp(h)>> = e^{<g,h> - |g|^2/2 - |h|^2/2}; modulus <= 1.
inline Complex normalized_kernel(const ModeVector& g, const ModeVector& h) {
  const LComplex k = detail::normalized_kernel_acc(g, h);
  return {static_cast<double>(k.real()), static_cast<double>(k.imag())};
}

// amplitude * |exp(h_1)> ⊗ ... ⊗ |exp(h_p)> with normalized factors.
struct CoherentTerm {
  Complex amplitude;
  std::vector<ModeVector> factors;
};

class FockVector {
 public:
  FockVector() = default;

  FockVector(int modes, Eigen::Index ambient_dim)
      : modes_(modes), ambient_dim_(ambient_dim) {
    require(modes >= 1, "FockVector: modes must be >= 1");
    require(ambient_dim >= 1, "FockVector: ambient dimension must be >= 1");
  }

  static FockVector vacuum(int modes, Eigen::Index ambient_dim) {
    FockVector v(modes, ambient_dim);
    v.add_term(1.0, std::vector<ModeVector>(modes, ModeVector::Zero(ambient_dim)));
    return v;
  }

  // |exp(h)>: the normalized exponential (coherent) vector, unit norm.
  static FockVector coherent(const ModeVector& h) {
    FockVector v(1, h.size());
    v.add_term(1.0, {h});
    return v;
  }

  // Raw exp(h) = e^{+|h|^2/2} |exp(h)>. Overflows for |h|^2 > ~1400.
  static FockVector exponential(const ModeVector& h) {
    FockVector v(1, h.size());
    v.add_term(std::exp(0.5 * h.squaredNorm()), {h});
    return v;
  }

  int modes() const { return modes_; }
  Eigen::Index ambient_dim() const { return ambient_dim_; }
  const std::vector<CoherentTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  // Canonical form: terms with entrywise-equal factor lists are merged.
  void add_term(Complex amplitude, std::vector<ModeVector> factors) {
    require(static_cast<int>(factors.size()) == modes_, "add_term: mode count mismatch");
    for (const auto& f : factors) {
      require(f.size() == ambient_dim_, "add_term: factor dimension mismatch");
      require(mode_finite(f), "add_term: non-finite factor entry");
    }
    for (auto& t : terms_) {
      if (factors_match(t.factors, factors)) {
        t.amplitude += amplitude;
        if (std::abs(t.amplitude) == 0.0)
          terms_.erase(terms_.begin() + (&t - terms_.data()));
        return;
      }
    }
    if (std::abs(amplitude) != 0.0) terms_.push_back({amplitude, std::move(factors)});
  }

  FockVector& operator+=(const FockVector& o) {
    require(modes_ == o.modes_ && ambient_dim_ == o.ambient_dim_,
            "FockVector +=: shape mismatch");
    for (const auto& t : o.terms_) add_term(t.amplitude, t.factors);
    return *this;
  }

  FockVector& operator-=(const FockVector& o) {
    require(modes_ == o.modes_ && ambient_dim_ == o.ambient_dim_,
            "FockVector -=: shape mismatch");
    for (const auto& t : o.terms_) add_term(-t.amplitude, t.factors);
    return *this;
  }

  FockVector& operator*=(Complex c) {
    if (std::abs(c) == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_) t.amplitude *= c;
    return *this;
  }

  friend FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
  friend FockVector operator-(FockVector a, const FockVector& b) { return a -= b; }
  friend FockVector operator*(Complex c, FockVector v) { return v *= c; }
  friend FockVector operator*(FockVector v, Complex c) { return v *= c; }

 private:
  static bool factors_match(const std::vector<ModeVector>& a,
                            const std::vector<ModeVector>& b) {
    for (std::size_t q = 0; q < a.size(); ++q)
      for (Eigen::Index i = 0; i < a[q].size(); ++i)
        if (std::abs(a[q](i) - b[q](i)) > kTermMergeTol) return false;
    return true;
  }

  int modes_ = 1;
  Eigen::Index ambient_dim_ = 1;
  std::vector<CoherentTerm> terms_;
};

inline Complex inner(const FockVector& v, const FockVector& w) {
  require(v.modes() == w.modes(), "inner: mode mismatch");
  require(v.ambient_dim() == w.ambient_dim(), "inner: dimension mismatch");
  LComplex sum = 0.0L;
  for (const auto& s : v.terms()) {
    for (const auto& t : w.terms()) {
      LComplex prod = std::conj(detail::to_l(s.amplitude)) * detail::to_l(t.amplitude);
      for (int q = 0; q < v.modes(); ++q)
        prod *= detail::normalized_kernel_acc(s.factors[q], t.factors[q]);
      sum += prod;
    }
  }
  return {static_cast<double>(sum.real()), static_cast<double>(sum.imag())};
}

inline double norm2(const FockVector& v) { return inner(v, v).real(); }

inline double norm(const FockVector& v) { return std::sqrt(std::max(0.0, norm2(v))); }

inline FockVector normalized(const FockVector& v) {
  const double n = norm(v);
  if (!(n > 1e-150)) throw NullVectorError("normalize: vector norm is numerically zero");
  return v * Complex(1.0 / n, 0.0);
}

inline FockVector tensor(const FockVector& v, const FockVector& w) {
  require(v.ambient_dim() == w.ambient_dim(), "tensor: dimension mismatch");
  FockVector out(v.modes() + w.modes(), v.ambient_dim());
  for (const auto& s : v.terms()) {
    for (const auto& t : w.terms()) {
      std::vector<ModeVector> factors = s.factors;
      factors.insert(factors.end(), t.factors.begin(), t.factors.end());
      out.add_term(s.amplitude * t.amplitude, std::move(factors));
    }
  }
  return out;
}

// Inserts a one-mode vector as tensor factor `position` (0-based).
inline FockVector insert_mode(const FockVector& v, int position, const FockVector& one) {
  require(one.modes() == 1, "insert_mode: inserted vector must have one mode");
  require(v.ambient_dim() == one.ambient_dim(), "insert_mode: dimension mismatch");
  require(position >= 0 && position <= v.modes(), "insert_mode: position out of range");
  FockVector out(v.modes() + 1, v.ambient_dim());
  for (const auto& s : v.terms()) {
    for (const auto& t : one.terms()) {
      std::vector<ModeVector> factors = s.factors;
      factors.insert(factors.begin() + position, t.factors[0]);
      out.add_term(s.amplitude * t.amplitude, std::move(factors));
    }
  }
  return out;
}

// D exp(g) = exp(g) ⊗ exp(g), extended linearly. On normalized factors the
// amplitude picks up e^{+|h|^2/2}.
inline FockVector malliavin_derivative(const FockVector& v) {
  require(v.modes() == 1, "malliavin_derivative: defined on one-mode vectors");
  FockVector out(2, v.ambient_dim());
  for (const auto& t : v.terms()) {
    const double mult = std::exp(0.5 * t.factors[0].squaredNorm());
    out.add_term(t.amplitude * mult, {t.factors[0], t.factors[0]});
  }
  return out;
}

// S(exp(g) ⊗ exp(h)) = exp(g+h); the normalized bookkeeping contributes
// e^{Re<g,h>} per term.
inline FockVector skorohod_integral(const FockVector& v) {
  require(v.modes() == 2, "skorohod_integral: defined on two-mode vectors");
  FockVector out(1, v.ambient_dim());
  for (const auto& t : v.terms()) {
    const ModeVector sum = t.factors[0] + t.factors[1];
    const double mult = std::exp(t.factors[0].dot(t.factors[1]).real());
    out.add_term(t.amplitude * mult, {sum});
  }
  return out;
}

namespace detail {

inline double operator_norm(const ComplexMatrix& t) {
  return t.jacobiSvd().singularValues()(0);
}

}  // namespace detail

// Γ(T): applies T inside the designated exponential factor (all factors when
// `factor` is empty). Requires a contraction, |T| <= 1.
inline FockVector second_quantized(const ComplexMatrix& t, const FockVector& v,
                                   std::optional<int> factor = std::nullopt) {
  require(t.rows() == v.ambient_dim() && t.cols() == v.ambient_dim(),
          "second_quantized: operator shape mismatch");
  if (detail::operator_norm(t) > 1.0 + kOperatorTol)
    throw std::invalid_argument("second_quantized: operator norm exceeds 1");
  if (factor)
    require(*factor >= 0 && *factor < v.modes(), "second_quantized: factor out of range");
  FockVector out(v.modes(), v.ambient_dim());
  for (const auto& term : v.terms()) {
    std::vector<ModeVector> factors = term.factors;
    double log_mult = 0.0;
    for (int q = 0; q < v.modes(); ++q) {
      if (factor && *factor != q) continue;
      const ModeVector th = t * factors[q];
      log_mult += 0.5 * (th.squaredNorm() - factors[q].squaredNorm());
      factors[q] = th;
    }
    out.add_term(term.amplitude * std::exp(log_mult), std::move(factors));
  }
  return out;
}

// ν_{K1,K2} exp(g) = exp(K1 g) ⊗ exp(K2 g); an isometry when
// K1*K1 + K2*K2 = 1.
inline FockVector beam_split(const Splitting& s, const FockVector& v) {
  require(v.modes() == 1, "beam_split: defined on one-mode vectors");
  require(s.ambient_dim() == v.ambient_dim(), "beam_split: dimension mismatch");
  FockVector out(2, v.ambient_dim());
  for (const auto& t : v.terms()) {
    const ModeVector h1 = s.k1 * t.factors[0];
    const ModeVector h2 = s.k2 * t.factors[0];
    const double log_mult =
        0.5 * (h1.squaredNorm() + h2.squaredNorm() - t.factors[0].squaredNorm());
    out.add_term(t.amplitude * std::exp(log_mult), {h1, h2});
  }
  return out;
}

// ν*(exp(h) ⊗ exp(g)) = exp(K1* h + K2* g).
inline FockVector beam_split_adjoint(const Splitting& s, const FockVector& v) {
  require(v.modes() == 2, "beam_split_adjoint: defined on two-mode vectors");
  require(s.ambient_dim() == v.ambient_dim(), "beam_split_adjoint: dimension mismatch");
  FockVector out(1, v.ambient_dim());
  for (const auto& t : v.terms()) {
    const ModeVector u = s.k1.adjoint() * t.factors[0] + s.k2.adjoint() * t.factors[1];
    const double log_mult = 0.5 * (u.squaredNorm() - t.factors[0].squaredNorm() -
                                   t.factors[1].squaredNorm());
    out.add_term(t.amplitude * std::exp(log_mult), {u});
  }
  return out;
}

// F_+ = 1 - |exp(0)><exp(0)| on the designated factor; with a region mask X,
// F_{+,X} = 1 - (vacuum-on-X projector), which sends exp(h) to
// exp(h) - exp(h·χ_{X^c}).
inline FockVector vacuum_filter(const FockVector& v, int factor,
                                const std::optional<std::vector<bool>>& mask = std::nullopt) {
  require(factor >= 0 && factor < v.modes(), "vacuum_filter: factor out of range");
  if (mask)
    require(static_cast<Eigen::Index>(mask->size()) == v.ambient_dim(),
            "vacuum_filter: mask length mismatch");
  FockVector out(v.modes(), v.ambient_dim());
  for (const auto& t : v.terms()) {
    out.add_term(t.amplitude, t.factors);
    const ModeVector& h = t.factors[factor];
    ModeVector outside = ModeVector::Zero(v.ambient_dim());
    double mass_inside = 0.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      if (!mask || (*mask)[i])
        mass_inside += std::norm(h(i));
      else
        outside(i) = h(i);
    }
    std::vector<ModeVector> factors = t.factors;
    factors[factor] = std::move(outside);
    out.add_term(-t.amplitude * std::exp(-0.5 * mass_inside), std::move(factors));
  }
  return out;
}

// Contracts the first bra.modes() tensor factors of v against bra
// (antilinearly): (<bra| ⊗ 1) v.
inline FockVector pair_first(const FockVector& bra, const FockVector& v) {
  require(v.modes() > bra.modes(), "pair_first: bra must have fewer modes than v");
  require(v.ambient_dim() == bra.ambient_dim(), "pair_first: dimension mismatch");
  const int q = bra.modes();
  FockVector out(v.modes() - q, v.ambient_dim());
  for (const auto& s : v.terms()) {
    LComplex coeff = 0.0L;
    for (const auto& b : bra.terms()) {
      LComplex prod = std::conj(detail::to_l(b.amplitude));
      for (int i = 0; i < q; ++i)
        prod *= detail::normalized_kernel_acc(b.factors[i], s.factors[i]);
      coeff += prod;
    }
    coeff *= detail::to_l(s.amplitude);
    out.add_term({static_cast<double>(coeff.real()), static_cast<double>(coeff.imag())},
                 {s.factors.begin() + q, s.factors.end()});
  }
  return out;
}

// Contracts a single tensor factor of v against a one-mode bra.
inline FockVector pair_mode(const FockVector& bra, const FockVector& v, int mode) {
  require(bra.modes() == 1, "pair_mode: bra must have one mode");
  require(v.modes() >= 2, "pair_mode: v must keep at least one mode");
  require(mode >= 0 && mode < v.modes(), "pair_mode: mode out of range");
  require(v.ambient_dim() == bra.ambient_dim(), "pair_mode: dimension mismatch");
  FockVector out(v.modes() - 1, v.ambient_dim());
  for (const auto& s : v.terms()) {
    LComplex coeff = 0.0L;
    for (const auto& b : bra.terms())
      coeff += std::conj(detail::to_l(b.amplitude)) *
               detail::normalized_kernel_acc(b.factors[0], s.factors[mode]);
    coeff *= detail::to_l(s.amplitude);
    std::vector<ModeVector> factors;
    factors.reserve(s.factors.size() - 1);
    for (int i = 0; i < v.modes(); ++i)
      if (i != mode) factors.push_back(s.factors[i]);
    out.add_term({static_cast<double>(coeff.real()), static_cast<double>(coeff.imag())},
                 std::move(factors));
  }
  return out;
}

// Applies an operator specified by its action on an orthonormal family to
// tensor factor `mode`: v = Σ_j basis_j ⊗ w_j maps to Σ_j mapped_j ⊗ w_j.
// Valid only when the mode-`mode` content of v lies in span{basis};
// *leakage_out reports |v|^2 - Σ_j |w_j|^2 when requested.
inline FockVector apply_span_operator(const FockVector& v, int mode,
                                      const std::vector<FockVector>& basis,
                                      const std::vector<FockVector>& mapped,
                                      double* leakage_out = nullptr) {
  require(basis.size() == mapped.size(), "apply_span_operator: basis size mismatch");
  require(!basis.empty(), "apply_span_operator: empty basis");
  FockVector out(v.modes(), v.ambient_dim());
  double coords_norm2 = 0.0;
  if (v.modes() == 1) {
    require(mode == 0, "apply_span_operator: mode out of range");
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const Complex c = inner(basis[j], v);
      coords_norm2 += std::norm(c);
      out += mapped[j] * c;
    }
  } else {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const FockVector w = pair_mode(basis[j], v, mode);
      coords_norm2 += norm2(w);
      out += insert_mode(w, mode, mapped[j]);
    }
  }
  if (leakage_out) *leakage_out = norm2(v) - coords_norm2;
  return out;
}

// ---------------------------------------------------------------------------
// Frames, operators, metrics

struct OrthonormalFrame {
  std::vector<FockVector> vectors;      // orthonormal basis of the span
  ComplexMatrix coefficients;           // rank x n: vectors[i] = Σ_j coeff(i,j)·gen_j
  std::vector<double> gram_eigenvalues; // retained eigenvalues, descending
  int rank() const { return static_cast<int>(vectors.size()); }
};

// Orthonormalizes the span of the generators through the Gram
// eigendecomposition; eigenvalues below tol·λ_max are discarded (coherent
// Grams become singular as overlaps approach 1).
inline OrthonormalFrame orthonormal_span(const std::vector<FockVector>& generators,
                                         double tol = kFrameCutoff) {
  require(!generators.empty(), "orthonormal_span: no generators");
  const int n = static_cast<int>(generators.size());
  ComplexMatrix gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gram(i, j) = inner(generators[i], generators[j]);
  gram = 0.5 * (gram + gram.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(gram);
  const Eigen::VectorXd evals = solver.eigenvalues();
  const double max_eval = evals.maxCoeff();
  if (!(max_eval > 0.0))
    throw NullVectorError("orthonormal_span: all generators are numerically zero");

  OrthonormalFrame frame;
  std::vector<std::pair<double, int>> kept;
  for (int k = n - 1; k >= 0; --k)
    if (evals(k) > tol * max_eval) kept.emplace_back(evals(k), k);
  frame.coefficients.resize(static_cast<Eigen::Index>(kept.size()), n);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const auto [lambda, k] = kept[r];
    const double scale = 1.0 / std::sqrt(lambda);
    FockVector f(generators.front().modes(), generators.front().ambient_dim());
    for (int j = 0; j < n; ++j) {
      const Complex c = scale * solver.eigenvectors()(j, k);
      frame.coefficients(static_cast<Eigen::Index>(r), j) = c;
      f += generators[j] * c;
    }
    frame.gram_eigenvalues.push_back(lambda);
    frame.vectors.push_back(std::move(f));
  }
  return frame;
}

// Rank-decomposed operator Σ_t w_t |ket_t><bra_t|; states keep ket = bra and
// real nonnegative weights.
struct DensityOperator {
  struct Summand {
    Complex weight;
    FockVector ket;
    FockVector bra;
  };

  int modes = 0;
  Eigen::Index ambient = 0;
  std::vector<Summand> summands;

  static DensityOperator pure(const FockVector& ket) { return state({1.0}, {ket}); }

  static DensityOperator state(const std::vector<double>& weights,
                               const std::vector<FockVector>& kets) {
    require(weights.size() == kets.size() && !kets.empty(),
            "DensityOperator::state: shape mismatch");
    DensityOperator rho;
    rho.modes = kets.front().modes();
    rho.ambient = kets.front().ambient_dim();
    for (std::size_t s = 0; s < kets.size(); ++s) rho.add(weights[s], kets[s], kets[s]);
    return rho;
  }

  void add(Complex weight, FockVector ket, FockVector bra) {
    if (modes == 0) {
      modes = ket.modes();
      ambient = ket.ambient_dim();
    }
    require(ket.modes() == modes && bra.modes() == modes, "DensityOperator: mode mismatch");
    require(ket.ambient_dim() == ambient && bra.ambient_dim() == ambient,
            "DensityOperator: dimension mismatch");
    summands.push_back({weight, std::move(ket), std::move(bra)});
  }

  Complex trace() const {
    Complex tr = 0.0;
    for (const auto& s : summands) tr += s.weight * inner(s.bra, s.ket);
    return tr;
  }

  DensityOperator scaled(Complex c) const {
    DensityOperator out = *this;
    for (auto& s : out.summands) s.weight *= c;
    return out;
  }
};

// The matrix <frame_i| op |frame_j>. Leakage |tr(op) - tr(matrix)| above
// the threshold means op is not supported on the frame's span.
inline ComplexMatrix matrix_representation(const DensityOperator& op,
                                           const OrthonormalFrame& frame,
                                           double* leakage_out = nullptr,
                                           double leakage_tol = kProtocolTol) {
  const int r = frame.rank();
  ComplexMatrix m = ComplexMatrix::Zero(r, r);
  for (const auto& s : op.summands) {
    Eigen::VectorXcd ket_coords(r), bra_coords(r);
    for (int i = 0; i < r; ++i) {
      ket_coords(i) = inner(frame.vectors[i], s.ket);
      bra_coords(i) = inner(frame.vectors[i], s.bra);
    }
    m += s.weight * ket_coords * bra_coords.adjoint();
  }
  const double leakage = std::abs(op.trace() - m.trace());
  if (leakage_out) *leakage_out = leakage;
  if (leakage > leakage_tol)
    throw SupportError("matrix_representation: operator leaks outside the frame span");
  return m;
}

namespace detail {

// Metric frames keep directions down to the double-precision floor: the
// default cutoff would silently merge nearly parallel states and report a
// collapsed distance for genuinely distinct ones.
inline constexpr double kMetricFrameCutoff = 3e-14;

inline OrthonormalFrame joint_frame(const DensityOperator& a, const DensityOperator& b) {
  std::vector<FockVector> gens;
  for (const auto& s : a.summands) {
    gens.push_back(s.ket);
    gens.push_back(s.bra);
  }
  for (const auto& s : b.summands) {
    gens.push_back(s.ket);
    gens.push_back(s.bra);
  }
  return orthonormal_span(gens, kMetricFrameCutoff);
}

inline ComplexMatrix hermitized(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint().eval());
}

inline ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
  Eigen::VectorXd evals = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * evals.asDiagonal() * solver.eigenvectors().adjoint();
}

}  // namespace detail

// Uhlmann fidelity (tr sqrt(sqrt(ρ) σ sqrt(ρ)))^2 on a joint orthonormal
// frame of both supports.
inline double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  const OrthonormalFrame frame = detail::joint_frame(rho, sigma);
  const ComplexMatrix a = detail::hermitized(matrix_representation(rho, frame));
  const ComplexMatrix b = detail::hermitized(matrix_representation(sigma, frame));
  const ComplexMatrix sa = detail::psd_sqrt(a);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(detail::hermitized(sa * b * sa));
  const double root_sum = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(root_sum * root_sum, 0.0, 1.0);
}

inline double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  const OrthonormalFrame frame = detail::joint_frame(rho, sigma);
  const ComplexMatrix a = detail::hermitized(matrix_representation(rho, frame));
  const ComplexMatrix b = detail::hermitized(matrix_representation(sigma, frame));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a - b);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace telsim
