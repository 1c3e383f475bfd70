#pragma once

// The beam-splitting teleportation models: the vacuum-removed entangled
// state (perfect channel), the physical coherent-beam entangled state with
// vacuum post-selection, the qudit lift/reduce through the coherent frames,
// and the spatially separated variant with a local filter.

#include <cmath>
#include <optional>
#include <vector>

#include "telsim/common.hpp"
#include "telsim/fock.hpp"
#include "telsim/hilbert.hpp"

namespace telsim {

class ModelBuildError : public std::runtime_error {
 public:
  ModelBuildError(std::string check, double residual, double tolerance)
      : std::runtime_error("model build check failed: " + check +
                           " (residual " + std::to_string(residual) + " > tolerance " +
                           std::to_string(tolerance) + ")"),
        check_name(std::move(check)) {}
  std::string check_name;
};

enum class Variant { Perfect, Coherent, CoherentFilter };

// Measurement phase rows: unimodular entries, mutually orthogonal rows.
struct BMatrix {
  ComplexMatrix rows;

  int dim() const { return static_cast<int>(rows.rows()); }

  ValidationReport validate(double tol = kOperatorTol) const {
    ValidationReport report;
    const int n = dim();
    double unimodular = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        unimodular = std::max(unimodular, std::abs(std::abs(rows(i, k)) - 1.0));
    double cross = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        cross = std::max(cross, std::abs(rows.row(i).dot(rows.row(j))) / n);
    report.add("b.unimodular", unimodular, tol);
    report.add("b.orthogonal_rows", cross, tol);
    return report;
  }
};

inline BMatrix dft_b_matrix(int n) {
  require(n >= 1, "dft_b_matrix: n must be >= 1");
  BMatrix b;
  b.rows.resize(n, n);
  const double step = 2.0 * M_PI / n;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) b.rows(i, k) = std::polar(1.0, step * i * k);
  return b;
}

// Qudit density in spectral form: weights λ_s over orthonormal amplitude
// rows c_s, inducing ρ = Σ_s λ_s |c_s><c_s|.
struct QuditState {
  Eigen::VectorXd weights;
  ComplexMatrix amplitudes;  // row s = c_s

  int dim() const { return static_cast<int>(weights.size()); }

  ComplexMatrix density() const {
    const int n = dim();
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    for (int s = 0; s < n; ++s)
      rho += weights(s) * amplitudes.row(s).transpose() * amplitudes.row(s).conjugate();
    return rho;
  }

  ValidationReport validate(double tol = kProtocolTol) const {
    ValidationReport report;
    const int n = dim();
    double wmin = 0.0, wsum = 0.0;
    for (int s = 0; s < n; ++s) {
      wmin = std::min(wmin, weights(s));
      wsum += weights(s);
    }
    report.add("state.weights_nonnegative", std::max(0.0, -wmin), tol);
    report.add("state.weights_sum", std::abs(wsum - 1.0), tol);
    const ComplexMatrix gram = amplitudes * amplitudes.adjoint();
    report.add("state.rows_orthonormal",
               (gram - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), tol);
    return report;
  }

  static QuditState basis(int n, int k) {
    require(n >= 1 && k >= 0 && k < n, "QuditState::basis: index out of range");
    QuditState q;
    q.weights = Eigen::VectorXd::Zero(n);
    q.weights(k) = 1.0;
    q.amplitudes = ComplexMatrix::Identity(n, n);
    return q;
  }

  // Pure uniform superposition; the normalized DFT rows complete it to a CONS.
  static QuditState uniform(int n) {
    QuditState q;
    q.weights = Eigen::VectorXd::Zero(n);
    q.weights(0) = 1.0;
    q.amplitudes = dft_b_matrix(n).rows / std::sqrt(static_cast<double>(n));
    return q;
  }

  static QuditState from_density(const ComplexMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(
        ComplexMatrix(0.5 * (rho + rho.adjoint())));
    const int n = static_cast<int>(rho.rows());
    QuditState q;
    q.weights = Eigen::VectorXd::Zero(n);
    q.amplitudes = ComplexMatrix::Zero(n, n);
    for (int s = 0; s < n; ++s) {  // descending
      q.weights(s) = std::max(0.0, solver.eigenvalues()(n - 1 - s));
      q.amplitudes.row(s) = solver.eigenvectors().col(n - 1 - s).transpose();
    }
    const double sum = q.weights.sum();
    if (sum > kProbabilityFloor) q.weights /= sum;
    return q;
  }
};

struct OutcomeResult {
  int n = 0;
  int m = 0;
  double probability = 0.0;
  DensityOperator post_state;  // normalized state on Bob's mode
  std::optional<QuditState> recovered_qudit;
  std::optional<double> fidelity_to_input;
};

struct ClosedForms {
  double gamma_squared = 0.0;
  double per_outcome_prob = 0.0;
  double total_prob = 0.0;
};

// Vacuum-filtered success probabilities, evaluated without forming any
// e^{+d} intermediate.
inline ClosedForms closed_forms(int n, double d) {
  require(n >= 1, "closed_forms: n must be >= 1");
  require(d > 0.0, "closed_forms: d must be positive");
  ClosedForms f;
  f.gamma_squared = 1.0 / (1.0 + (n - 1) * std::exp(-d));
  const double one_minus = -std::expm1(-0.5 * d);  // 1 - e^{-d/2}
  f.total_prob = f.gamma_squared * one_minus * one_minus;
  f.per_outcome_prob = f.total_prob / (static_cast<double>(n) * n);
  return f;
}

class TeleportModel {
 public:
  // Constructs every derived object and verifies the model invariants.
  // Check tolerances widen with the conditioning of the coherent Gram
  // arithmetic (amplitudes grow like (1-e^{-d/2})^{-1/2} as d -> 0, and the
  // orthogonality verification cancels through them); across d in
  // [1e-1, 1e3] the strict tolerances govern.
  TeleportModel(int n, double d, Splitting splitting, BMatrix b,
                double tol = kProtocolTol)
      : n_(n), d_(d), a_(std::sqrt(d)), splitting_(std::move(splitting)), b_(std::move(b)) {
    require(n >= 1, "TeleportModel: n must be >= 1");
    if (!(d > 0.0)) throw std::invalid_argument("TeleportModel: d must be positive");
    require(static_cast<int>(splitting_.basis.size()) == n,
            "TeleportModel: splitting must designate n basis vectors");
    require(b_.dim() == n, "TeleportModel: b matrix dimension mismatch");

    for (const auto& check : validate_splitting(splitting_).checks) {
      build_report_.checks.push_back(check);
      if (!check.pass) throw ModelBuildError(check.name, check.residual, check.tolerance);
    }
    for (const auto& check : b_.validate().checks) {
      build_report_.checks.push_back(check);
      if (!check.pass) throw ModelBuildError(check.name, check.residual, check.tolerance);
    }

    build_vectors();
    verify_invariants(tol);
    build_keys(tol);
  }

  int dim() const { return n_; }
  double density() const { return d_; }
  double amplitude_scale() const { return a_; }
  const Splitting& splitting() const { return splitting_; }
  const BMatrix& b_matrix() const { return b_; }
  double gamma_normalizer() const { return gamma_norm_; }
  const ValidationReport& build_report() const { return build_report_; }

  const FockVector& gamma1(int j) const { return gamma1_[j]; }
  const FockVector& gamma2(int j) const { return gamma2_[j]; }
  const std::vector<FockVector>& gamma1_frame() const { return gamma1_; }
  const std::vector<FockVector>& gamma2_frame() const { return gamma2_; }
  const FockVector& xi(int n, int m) const { return xi_[n * n_ + m]; }
  const FockVector& entangled_perfect() const { return xi_perfect_; }
  const FockVector& entangled_coherent() const { return xi_tilde_; }
  const FockVector& beam_superposition() const { return eta_; }
  const FockVector& entangled(Variant v) const {
    return v == Variant::Perfect ? xi_perfect_ : xi_tilde_;
  }
  const ComplexMatrix& key(int n, int m) const { return keys_[n * n_ + m]; }

  int shifted(int j, int m) const { return (j + m) % n_; }

  // Γ(T) U_m B_n^* applied to a one-mode vector supported on span{γ_j}.
  FockVector conjugation_op(const FockVector& v, int n, int m) const {
    FockVector acc(1, splitting_.ambient_dim());
    for (int j = 0; j < n_; ++j) {
      const Complex coord = inner(gamma1_[j], v);
      acc += gamma1_[shifted(j, m)] * (coord * std::conj(b_.rows(n, j)));
    }
    return second_quantized(splitting_.t, acc);
  }

  DensityOperator conjugate_density(const DensityOperator& rho, int n, int m) const {
    DensityOperator out;
    for (const auto& s : rho.summands)
      out.add(s.weight, conjugation_op(s.ket, n, m), conjugation_op(s.bra, n, m));
    return out;
  }

 private:
  void build_vectors() {
    const Eigen::Index ambient = splitting_.ambient_dim();
    const double one_minus = -std::expm1(-0.5 * d_);          // 1 - e^{-d/2}
    const double coh_amp = 1.0 / std::sqrt(one_minus);        // e^{d/4}/sqrt(e^{d/2}-1)
    const double vac_amp = std::exp(-0.25 * d_) * coh_amp;    // 1/sqrt(e^{d/2}-1)
    gamma_norm_ = 1.0 / std::sqrt(1.0 + (n_ - 1) * std::exp(-d_));

    const ModeVector zero = ModeVector::Zero(ambient);
    gamma1_.reserve(n_);
    gamma2_.reserve(n_);
    for (int j = 0; j < n_; ++j) {
      const ModeVector h1 = a_ * (splitting_.k1 * splitting_.basis[j]);
      const ModeVector h2 = a_ * (splitting_.k2 * splitting_.basis[j]);
      FockVector g1(1, ambient), g2(1, ambient);
      g1.add_term(coh_amp, {h1});
      g1.add_term(-vac_amp, {zero});
      g2.add_term(coh_amp, {h2});
      g2.add_term(-vac_amp, {zero});
      gamma1_.push_back(std::move(g1));
      gamma2_.push_back(std::move(g2));
    }

    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
    xi_.reserve(static_cast<std::size_t>(n_) * n_);
    for (int nn = 0; nn < n_; ++nn) {
      for (int mm = 0; mm < n_; ++mm) {
        FockVector v(2, ambient);
        for (int j = 0; j < n_; ++j)
          v += tensor(gamma1_[j], gamma1_[shifted(j, mm)]) * (inv_sqrt_n * b_.rows(nn, j));
        xi_.push_back(std::move(v));
      }
    }

    xi_perfect_ = FockVector(2, ambient);
    for (int k = 0; k < n_; ++k)
      xi_perfect_ += tensor(gamma1_[k], gamma2_[k]) * Complex(inv_sqrt_n);

    eta_ = FockVector(1, ambient);
    for (int k = 0; k < n_; ++k) {
      FockVector beam = FockVector::coherent(a_ * splitting_.basis[k]);
      eta_ += beam * Complex(gamma_norm_ * inv_sqrt_n);
    }
    xi_tilde_ = beam_split(splitting_, eta_);
  }

  static double l1_amplitude_mass(const FockVector& v) {
    double mass = 0.0;
    for (const auto& t : v.terms()) mass += std::abs(t.amplitude);
    return mass;
  }

  static double max_factor_norm2(const FockVector& v) {
    double m = 0.0;
    for (const auto& t : v.terms())
      for (const auto& f : t.factors) m = std::max(m, f.squaredNorm());
    return m;
  }

  // Verification through kernel arithmetic carries two conditioning factors:
  // term amplitudes blow up like (1-e^{-d/2})^{-1/2} as d -> 0 and cancel in
  // the Gram sums, and kernel exponents of size |h|^2 ~ d lose absolute
  // precision as d grows. Both vanish against the strict tolerance on the
  // d-range the closed forms are asserted over.
  double effective_tol(double tol, const std::vector<const FockVector*>& involved) const {
    double mass = 1.0, fnorm2 = 0.0;
    for (const auto* v : involved) {
      mass = std::max(mass, l1_amplitude_mass(*v));
      fnorm2 = std::max(fnorm2, max_factor_norm2(*v));
    }
    return std::max(tol, std::max(mass * mass * 1e-16, fnorm2 * 4e-16));
  }

  void check(const std::string& name, double residual, double tolerance) {
    build_report_.add(name, residual, tolerance);
    if (!build_report_.checks.back().pass)
      throw ModelBuildError(name, residual, tolerance);
  }

  void verify_invariants(double tol) {
    std::vector<const FockVector*> g1_ptrs, xi_ptrs;
    for (const auto& g : gamma1_) g1_ptrs.push_back(&g);
    for (const auto& x : xi_) xi_ptrs.push_back(&x);

    double gram1 = 0.0, gram2 = 0.0;
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < n_; ++k) {
        const double target = j == k ? 1.0 : 0.0;
        gram1 = std::max(gram1, std::abs(inner(gamma1_[j], gamma1_[k]) - target));
        gram2 = std::max(gram2, std::abs(inner(gamma2_[j], gamma2_[k]) - target));
      }
    }
    const double gamma_tol = effective_tol(tol, g1_ptrs);
    check("model.gamma1_orthonormal", gram1, gamma_tol);
    check("model.gamma2_orthonormal", gram2, gamma_tol);

    double xi_gram = 0.0;
    for (std::size_t p = 0; p < xi_.size(); ++p) {
      for (std::size_t q = 0; q <= p; ++q) {
        const double target = p == q ? 1.0 : 0.0;
        xi_gram = std::max(xi_gram, std::abs(inner(xi_[p], xi_[q]) - target));
      }
    }
    check("model.xi_orthonormal", xi_gram, effective_tol(tol, xi_ptrs));

    std::vector<const FockVector*> coherent_ptrs = {&eta_, &xi_tilde_};
    check("model.entangled_perfect_norm", std::abs(norm(xi_perfect_) - 1.0),
          effective_tol(tol, xi_ptrs));
    check("model.beam_superposition_norm", std::abs(norm(eta_) - 1.0),
          effective_tol(tol, coherent_ptrs));
    check("model.entangled_coherent_norm", std::abs(norm(xi_tilde_) - 1.0),
          effective_tol(tol, coherent_ptrs));

    // both construction routes: ν(η) against the explicit split-beam superposition
    FockVector explicit_tilde(2, splitting_.ambient_dim());
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
    for (int k = 0; k < n_; ++k) {
      const ModeVector h1 = a_ * (splitting_.k1 * splitting_.basis[k]);
      const ModeVector h2 = a_ * (splitting_.k2 * splitting_.basis[k]);
      explicit_tilde += tensor(FockVector::coherent(h1), FockVector::coherent(h2)) *
                        Complex(gamma_norm_ * inv_sqrt_n);
    }
    check("model.entangled_coherent_split_route", norm(xi_tilde_ - explicit_tilde),
          effective_tol(tol, coherent_ptrs));
  }

  void build_keys(double tol) {
    keys_.reserve(xi_.size());
    double unitary_residual = 0.0;
    std::vector<const FockVector*> g_ptrs;
    for (const auto& g : gamma1_) g_ptrs.push_back(&g);
    for (const auto& g : gamma2_) g_ptrs.push_back(&g);
    for (int nn = 0; nn < n_; ++nn) {
      for (int mm = 0; mm < n_; ++mm) {
        ComplexMatrix v(n_, n_);
        for (int j = 0; j < n_; ++j) {
          const FockVector mapped = conjugation_op(gamma1_[j], nn, mm);
          for (int i = 0; i < n_; ++i) v(i, j) = inner(gamma2_[i], mapped);
        }
        unitary_residual = std::max(
            unitary_residual,
            (v.adjoint() * v - ComplexMatrix::Identity(n_, n_)).cwiseAbs().maxCoeff());
        keys_.push_back(std::move(v));
      }
    }
    check("model.keys_unitary", unitary_residual,
          effective_tol(std::max(kOperatorTol, tol * 0.01), g_ptrs));
  }

  int n_;
  double d_;
  double a_;
  Splitting splitting_;
  BMatrix b_;
  double gamma_norm_ = 1.0;
  std::vector<FockVector> gamma1_, gamma2_;
  std::vector<FockVector> xi_;       // row-major (n, m)
  FockVector xi_perfect_;
  FockVector xi_tilde_;
  FockVector eta_;
  std::vector<ComplexMatrix> keys_;  // row-major (n, m)
  ValidationReport build_report_;
};

// Alice's von Neumann measurement outcome (n, m): projects ρ ⊗ σ with
// F_nm ⊗ 1 on each rank-one factor and traces out her modes. The projected
// vector factorizes as ξ_nm ⊗ w, so the Bob-side state is assembled from
// the pair_first contractions directly.
inline OutcomeResult alice_measure(const TeleportModel& model, const DensityOperator& rho,
                                   const FockVector& entangled, int n, int m) {
  require(rho.modes == 1, "alice_measure: input state must be one-mode");
  require(n >= 0 && n < model.dim() && m >= 0 && m < model.dim(),
          "alice_measure: outcome index out of range");
  const FockVector& projector_ket = model.xi(n, m);
  DensityOperator unnormalized;
  for (const auto& s : rho.summands) {
    FockVector ket = pair_first(projector_ket, tensor(s.ket, entangled));
    FockVector bra = pair_first(projector_ket, tensor(s.bra, entangled));
    unnormalized.add(s.weight, std::move(ket), std::move(bra));
  }
  OutcomeResult result;
  result.n = n;
  result.m = m;
  result.probability = unnormalized.trace().real();
  if (result.probability < kProbabilityFloor)
    throw ImpossibleOutcome("alice_measure: outcome probability is numerically zero");
  result.post_state = unnormalized.scaled(1.0 / result.probability);
  return result;
}

// Bob's vacuum post-selection: F_+ (or the local F_{+,X2} for region
// splittings) applied to the received state, probability scaled by the
// acceptance weight.
inline OutcomeResult bob_post_select(const TeleportModel& model, const OutcomeResult& outcome,
                                     bool local = false) {
  std::optional<std::vector<bool>> mask;
  if (local) {
    if (model.splitting().kind != SplittingKind::ProjectionPair)
      throw ConfigError("local vacuum filter requires a projection (regions) splitting");
    mask = model.splitting().region_x2;
  }
  DensityOperator filtered;
  for (const auto& s : outcome.post_state.summands)
    filtered.add(s.weight, vacuum_filter(s.ket, 0, mask), vacuum_filter(s.bra, 0, mask));
  const double acceptance = filtered.trace().real();
  if (acceptance < kProbabilityFloor)
    throw ImpossibleOutcome("bob_post_select: filter annihilates the state");
  OutcomeResult result;
  result.n = outcome.n;
  result.m = outcome.m;
  result.probability = outcome.probability * acceptance;
  result.post_state = filtered.scaled(1.0 / acceptance);
  return result;
}

// E*(ρ̂) = W1 ρ̂ W1*: the qudit state carried by the K1-side coherent frame.
inline DensityOperator lift_state(const TeleportModel& model, const QuditState& q) {
  require(q.dim() == model.dim(), "lift_state: qudit dimension mismatch");
  DensityOperator rho;
  for (int s = 0; s < q.dim(); ++s) {
    if (q.weights(s) == 0.0) continue;
    FockVector phi(1, model.splitting().ambient_dim());
    for (int j = 0; j < q.dim(); ++j) phi += model.gamma1(j) * q.amplitudes(s, j);
    rho.add(q.weights(s), phi, phi);
  }
  require(!rho.summands.empty(), "lift_state: state has no support");
  return rho;
}

// R(ρ) = W2* Π_{M2} ρ W2 / tr(...): the qudit read back from the K2-side
// frame; anything orthogonal to that frame is discarded by the projection.
// Overlap below fp noise relative to the state's own trace counts as zero.
inline ComplexMatrix reduce_matrix(const TeleportModel& model, const DensityOperator& rho) {
  require(rho.modes == 1, "reduce_matrix: state must be one-mode");
  const int n = model.dim();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& s : rho.summands) {
    Eigen::VectorXcd ket_coords(n), bra_coords(n);
    for (int i = 0; i < n; ++i) {
      ket_coords(i) = inner(model.gamma2(i), s.ket);
      bra_coords(i) = inner(model.gamma2(i), s.bra);
    }
    out += s.weight * ket_coords * bra_coords.adjoint();
  }
  const Complex tr = out.trace();
  const double floor = std::max(kProbabilityFloor, 1e-14 * std::abs(rho.trace()));
  if (!(std::abs(tr) > floor))
    throw SupportError("reduce_matrix: state has no overlap with the receiving frame");
  return out / tr;
}

inline QuditState reduce_state(const TeleportModel& model, const DensityOperator& rho) {
  return QuditState::from_density(reduce_matrix(model, rho));
}

namespace detail {

inline double matrix_fidelity(const ComplexMatrix& a, const ComplexMatrix& b) {
  const ComplexMatrix sa = psd_sqrt(hermitized(a));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitized(sa * hermitized(b) * sa));
  const double root_sum = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(root_sum * root_sum, 0.0, 1.0);
}

inline double matrix_trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitized(a) - hermitized(b));
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace detail

// Full pipeline for every outcome (n, m): lift, measure, optionally filter,
// reduce, undo the key V_nm, compare with the input.
inline std::vector<OutcomeResult> end_to_end(const TeleportModel& model, const QuditState& q,
                                             Variant variant, bool local_filter = false) {
  const DensityOperator rho = lift_state(model, q);
  const ComplexMatrix rho_hat = q.density();
  const FockVector& entangled = model.entangled(variant);
  std::vector<OutcomeResult> results;
  results.reserve(static_cast<std::size_t>(model.dim()) * model.dim());
  for (int n = 0; n < model.dim(); ++n) {
    for (int m = 0; m < model.dim(); ++m) {
      OutcomeResult outcome = alice_measure(model, rho, entangled, n, m);
      if (variant == Variant::CoherentFilter)
        outcome = bob_post_select(model, outcome, local_filter);
      const ComplexMatrix reduced = reduce_matrix(model, outcome.post_state);
      const ComplexMatrix& key = model.key(n, m);
      const ComplexMatrix recovered = key.adjoint() * reduced * key;
      outcome.recovered_qudit = QuditState::from_density(recovered);
      outcome.fidelity_to_input = detail::matrix_fidelity(recovered, rho_hat);
      results.push_back(std::move(outcome));
    }
  }
  return results;
}

struct PerfectnessReport {
  std::vector<double> per_state_e1;    // max_(n,m) trace distance to the conjugated input
  std::vector<double> per_state_e2;    // |Σ p_nm - 1|
  std::vector<double> per_state_prob;  // Σ p_nm
  double e1_max = 0.0;
  double e2_max = 0.0;
  std::optional<double> eq39_residual;  // half-half splittings only
};

// Conditions (E1)/(E2) for the given states, plus the representation of the
// measurement projections as unitary images of the entangled vector
// (checked for the half-half splitting, where it is asserted).
inline PerfectnessReport verify_perfectness(const TeleportModel& model,
                                            const std::vector<QuditState>& states,
                                            Variant variant = Variant::Perfect,
                                            bool local_filter = false) {
  PerfectnessReport report;
  for (const auto& q : states) {
    const DensityOperator rho = lift_state(model, q);
    double e1 = 0.0, psum = 0.0;
    for (int n = 0; n < model.dim(); ++n) {
      for (int m = 0; m < model.dim(); ++m) {
        OutcomeResult outcome = alice_measure(model, rho, model.entangled(variant), n, m);
        if (variant == Variant::CoherentFilter)
          outcome = bob_post_select(model, outcome, local_filter);
        psum += outcome.probability;
        DensityOperator target = model.conjugate_density(rho, n, m);
        e1 = std::max(e1, trace_distance(outcome.post_state, target));
      }
    }
    report.per_state_e1.push_back(e1);
    report.per_state_e2.push_back(std::abs(psum - 1.0));
    report.per_state_prob.push_back(psum);
    report.e1_max = std::max(report.e1_max, e1);
    report.e2_max = std::max(report.e2_max, std::abs(psum - 1.0));
  }

  if (model.splitting().kind == SplittingKind::HalfHalf) {
    // |ξ_nm> = (B_n ⊗ U_m Γ(T*)) |ξ>
    double residual = 0.0;
    std::vector<FockVector> b_mapped(model.dim(), FockVector(1, model.splitting().ambient_dim()));
    std::vector<FockVector> shift_mapped = b_mapped;
    for (int n = 0; n < model.dim(); ++n) {
      for (int m = 0; m < model.dim(); ++m) {
        for (int j = 0; j < model.dim(); ++j)
          b_mapped[j] = model.gamma1(j) * model.b_matrix().rows(n, j);
        FockVector rhs = apply_span_operator(model.entangled_perfect(), 0,
                                             model.gamma1_frame(), b_mapped);
        rhs = second_quantized(model.splitting().t.adjoint(), rhs, 1);
        for (int j = 0; j < model.dim(); ++j)
          shift_mapped[j] = model.gamma1(model.shifted(j, m));
        rhs = apply_span_operator(rhs, 1, model.gamma1_frame(), shift_mapped);
        residual = std::max(residual, norm(model.xi(n, m) - rhs));
      }
    }
    report.eq39_residual = residual;
  }
  return report;
}

}  // namespace telsim
