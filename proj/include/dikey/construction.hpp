#pragma once

// The d-outcome family of realizations: Fourier basis, shift operator, the
// fractional shift U_ε, overlap matrices, the maximally entangled state and
// the ideal two-setting measurements, plus seeded junk-padded dilations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dikey/error.hpp"
#include "dikey/linalg.hpp"
#include "dikey/random.hpp"
#include "dikey/spectral.hpp"

namespace dikey {

/// Entrywise |⟨j|e_k⟩| between two orthonormal bases of C^d.
class OverlapMatrix {
 public:
  OverlapMatrix() = default;
  OverlapMatrix(std::size_t d, std::vector<double> entries) : d_(d), entries_(std::move(entries)) {
    if (entries_.size() != d_ * d_) throw Error(ErrorKind::DimensionMismatch, "overlap matrix size");
  }

  static OverlapMatrix identity(std::size_t d) {
    std::vector<double> e(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) e[i * d + i] = 1.0;
    return OverlapMatrix(d, std::move(e));
  }

  std::size_t dim() const noexcept { return d_; }
  double operator()(std::size_t j, std::size_t k) const { return entries_[j * d_ + k]; }
  std::span<const double> entries() const noexcept { return entries_; }

  double min_entry() const { return *std::min_element(entries_.begin(), entries_.end()); }

  /// max over rows and columns of |Σ O² − 1|.
  double stochasticity_residual() const {
    double r = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
      double row = 0.0;
      double col = 0.0;
      for (std::size_t k = 0; k < d_; ++k) {
        row += (*this)(i, k) * (*this)(i, k);
        col += (*this)(k, i) * (*this)(k, i);
      }
      r = std::max({r, std::abs(row - 1.0), std::abs(col - 1.0)});
    }
    return r;
  }

 private:
  std::size_t d_ = 0;
  std::vector<double> entries_;
};

struct Scenario {
  std::vector<std::size_t> alice_outcomes;  // k_A per setting; size is n_A
  std::vector<std::size_t> bob_outcomes;    // k_B per setting; size is n_B

  std::size_t alice_settings() const noexcept { return alice_outcomes.size(); }
  std::size_t bob_settings() const noexcept { return bob_outcomes.size(); }

  void validate() const {
    if (alice_outcomes.empty() || bob_outcomes.empty()) {
      throw Error(ErrorKind::InvalidArgument, "scenario needs at least one setting per party");
    }
    for (auto k : alice_outcomes)
      if (k == 0) throw Error(ErrorKind::InvalidArgument, "alice setting with zero outcomes");
    for (auto k : bob_outcomes)
      if (k == 0) throw Error(ErrorKind::InvalidArgument, "bob setting with zero outcomes");
  }

  bool operator==(const Scenario&) const = default;
};

/// A real tensor t(a,b,x,y) shaped by a (possibly ragged) scenario, stored
/// block by block in (x, y, a, b) order.
class OutcomeTensor {
 public:
  OutcomeTensor() = default;

  explicit OutcomeTensor(Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    std::size_t off = 0;
    for (std::size_t x = 0; x < scenario_.alice_settings(); ++x)
      for (std::size_t y = 0; y < scenario_.bob_settings(); ++y) {
        offsets_.push_back(off);
        off += scenario_.alice_outcomes[x] * scenario_.bob_outcomes[y];
      }
    values_.assign(off, 0.0);
  }

  const Scenario& scenario() const noexcept { return scenario_; }
  std::size_t entries() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::size_t index(std::size_t a, std::size_t b, std::size_t x, std::size_t y) const {
    return offsets_[x * scenario_.bob_settings() + y] + a * scenario_.bob_outcomes[y] + b;
  }

  double& operator()(std::size_t a, std::size_t b, std::size_t x, std::size_t y) { return values_[index(a, b, x, y)]; }
  double operator()(std::size_t a, std::size_t b, std::size_t x, std::size_t y) const {
    return values_[index(a, b, x, y)];
  }

 private:
  Scenario scenario_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

/// Uniform scenario: n_A settings with k_A outcomes, n_B settings with k_B.
inline Scenario uniform_scenario(std::size_t n_a, std::size_t k_a, std::size_t n_b, std::size_t k_b) {
  return Scenario{std::vector<std::size_t>(n_a, k_a), std::vector<std::size_t>(n_b, k_b)};
}

class Povm {
 public:
  Povm() = default;
  explicit Povm(std::vector<ComplexMatrix> effects) : effects_(std::move(effects)) {
    if (effects_.empty()) throw Error(ErrorKind::InvalidArgument, "POVM without outcomes");
    const std::size_t n = effects_.front().rows();
    for (const auto& e : effects_) {
      if (!e.square() || e.rows() != n) throw Error(ErrorKind::DimensionMismatch, "POVM effect shapes differ");
    }
  }

  /// Projective measurement onto the columns of an orthonormal basis.
  static Povm from_basis(const std::vector<StateVector>& basis) {
    std::vector<ComplexMatrix> effects;
    effects.reserve(basis.size());
    for (const auto& v : basis) effects.push_back(v.projector());
    return Povm(std::move(effects));
  }

  std::size_t dim() const noexcept { return effects_.empty() ? 0 : effects_.front().rows(); }
  std::size_t outcomes() const noexcept { return effects_.size(); }
  const ComplexMatrix& operator[](std::size_t a) const { return effects_[a]; }
  const std::vector<ComplexMatrix>& effects() const noexcept { return effects_; }

  /// ‖Σ_a E_a − I‖_max
  double completeness_residual() const {
    ComplexMatrix sum(dim(), dim());
    for (const auto& e : effects_) sum += e;
    return max_abs_diff(sum, ComplexMatrix::identity(dim()));
  }

  /// max over outcomes of max(‖E−E†‖_max, −λ_min(E)).
  double positivity_residual() const {
    double r = 0.0;
    for (const auto& e : effects_) {
      const double herm = hermiticity_residual(e);
      r = std::max(r, herm);
      if (herm <= 1e-6) r = std::max(r, -min_eigenvalue(e));
    }
    return r;
  }

  /// max of ‖E_a² − E_a‖_max and ‖E_a E_b‖_max (a ≠ b).
  double projectivity_residual() const {
    double r = 0.0;
    for (std::size_t a = 0; a < effects_.size(); ++a) {
      for (std::size_t b = 0; b < effects_.size(); ++b) {
        const ComplexMatrix prod = effects_[a] * effects_[b];
        r = std::max(r, a == b ? max_abs_diff(prod, effects_[a]) : max_abs(prod));
      }
    }
    return r;
  }

  bool is_projective(double tol = 1e-9) const { return projectivity_residual() <= tol; }

  void validate(double tol = 1e-9) const {
    const double pos = positivity_residual();
    if (pos > tol) throw Error(ErrorKind::InvariantViolation, "POVM effect not PSD (residual " + fmt_real(pos) + ")");
    const double comp = completeness_residual();
    if (comp > tol) {
      throw Error(ErrorKind::InvariantViolation, "POVM effects do not sum to identity (residual " + fmt_real(comp) + ")");
    }
  }

  /// Entrywise complex conjugate of every effect.
  Povm conj() const {
    std::vector<ComplexMatrix> out;
    out.reserve(effects_.size());
    for (const auto& e : effects_) out.push_back(e.conj());
    return Povm(std::move(out));
  }

  /// U E_a U† for every effect.
  Povm conjugated_by(const ComplexMatrix& u) const {
    const ComplexMatrix ud = u.adjoint();
    std::vector<ComplexMatrix> out;
    out.reserve(effects_.size());
    for (const auto& e : effects_) out.push_back(u * e * ud);
    return Povm(std::move(out));
  }

  /// E_a ⊗ I_junk for every effect.
  Povm padded(std::size_t junk_dim) const {
    const ComplexMatrix id = ComplexMatrix::identity(junk_dim);
    std::vector<ComplexMatrix> out;
    out.reserve(effects_.size());
    for (const auto& e : effects_) out.push_back(kron(e, id));
    return Povm(std::move(out));
  }

 private:
  std::vector<ComplexMatrix> effects_;
};

/// A bipartite state with measurement families for both parties.
///
/// `bob_hats` holds the two reference measurements (P̂, Q̂) from which Bob's
/// isometry is built. They are not measured settings; for the ideal family
/// they are the entrywise conjugates of Alice's two measurements, which is
/// what the transpose identity (M ⊗ I)|φ⁺⟩ = (I ⊗ Mᵀ)|φ⁺⟩ calls for.
struct Realization {
  ComplexMatrix state;
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  std::vector<Povm> alice;
  std::vector<Povm> bob;
  std::size_t key_alice = 0;
  std::size_t key_bob = 0;
  std::vector<Povm> bob_hats;

  Scenario scenario() const {
    Scenario s;
    for (const auto& p : alice) s.alice_outcomes.push_back(p.outcomes());
    for (const auto& p : bob) s.bob_outcomes.push_back(p.outcomes());
    return s;
  }

  void validate(double tol = 1e-9) const {
    if (state.rows() != dim_a * dim_b || !state.square()) {
      throw Error(ErrorKind::DimensionMismatch, "state does not live on H_A ⊗ H_B");
    }
    const double tr = state.trace().real();
    if (std::abs(tr - 1.0) > tol) throw Error(ErrorKind::InvariantViolation, "state trace " + fmt_real(tr));
    if (hermiticity_residual(state) > tol) throw Error(ErrorKind::InvariantViolation, "state not Hermitian");
    const double lmin = min_eigenvalue(state);
    if (lmin < -tol) throw Error(ErrorKind::InvariantViolation, "state not PSD: " + fmt_real(lmin));
    for (const auto& p : alice) {
      if (p.dim() != dim_a) throw Error(ErrorKind::DimensionMismatch, "alice POVM dimension");
      p.validate(tol);
    }
    for (const auto& p : bob) {
      if (p.dim() != dim_b) throw Error(ErrorKind::DimensionMismatch, "bob POVM dimension");
      p.validate(tol);
    }
    if (key_alice >= alice.size() || key_bob >= bob.size()) {
      throw Error(ErrorKind::InvalidArgument, "key setting index out of range");
    }
  }
};

inline void require_dim(std::size_t d) {
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "d must be >= 2, got " + std::to_string(d));
}

inline void require_epsilon(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in [0,1], got " + fmt_real(eps));
  }
}

/// ω_d^x = e^{2πi x / d} for real x.
inline cplx root_of_unity_power(std::size_t d, double x) {
  return std::polar(1.0, 2.0 * std::numbers::pi * x / static_cast<double>(d));
}

/// |χ_j⟩ = d^{-1/2} Σ_k ω_d^{jk} |k⟩
inline std::vector<StateVector> fourier_basis(std::size_t d) {
  require_dim(d);
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<StateVector> basis;
  basis.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    StateVector v(d);
    // reduce jk mod d so the phase argument stays small
    for (std::size_t k = 0; k < d; ++k) v[k] = norm * root_of_unity_power(d, static_cast<double>((j * k) % d));
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Cyclic shift X|j⟩ = |j+1 mod d⟩.
inline ComplexMatrix pauli_x(std::size_t d) {
  require_dim(d);
  ComplexMatrix x(d, d);
  for (std::size_t j = 0; j < d; ++j) x((j + 1) % d, j) = 1.0;
  return x;
}

/// Σ_j f_j |χ_j⟩⟨χ_j| for the Fourier basis.
inline ComplexMatrix fourier_diagonal(std::size_t d, const std::vector<cplx>& f) {
  const auto basis = fourier_basis(d);
  ComplexMatrix out(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    ComplexMatrix p = basis[j].projector();
    p *= f[j];
    out += p;
  }
  return out;
}

/// U_ε = Σ_j ω_d^{εj} |χ_j⟩⟨χ_j|. U_0 = I and U_1 = X† (X|χ_j⟩ = ω_d^{-j}|χ_j⟩
/// with this Fourier convention), so U_ε is a fractional power of the shift.
inline ComplexMatrix u_epsilon(std::size_t d, double eps) {
  require_dim(d);
  require_epsilon(eps);
  std::vector<cplx> f(d);
  for (std::size_t j = 0; j < d; ++j) f[j] = root_of_unity_power(d, eps * static_cast<double>(j));
  return fourier_diagonal(d, f);
}

/// Generator G = Σ_j (2πi j / d) |χ_j⟩⟨χ_j| with U_ε = e^{εG}, e^G = X†.
inline ComplexMatrix shift_generator(std::size_t d) {
  require_dim(d);
  std::vector<cplx> f(d);
  for (std::size_t j = 0; j < d; ++j) f[j] = cplx{0.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(d)};
  return fourier_diagonal(d, f);
}

/// O_jk = |⟨j|U_ε|k⟩| by direct matrix entries.
inline OverlapMatrix overlap_direct(std::size_t d, double eps) {
  const ComplexMatrix u = u_epsilon(d, eps);
  std::vector<double> e(d * d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) e[j * d + k] = std::abs(u(j, k));
  return OverlapMatrix(d, std::move(e));
}

/// O_jk from the geometric-sum closed form
///   O_jk² = (1/d²)·[1 − cos 2π(ε−k+j)] / [1 − cos (2π/d)(ε−k+j)],
/// valid only for ε strictly inside (0,1) where the denominator never vanishes.
inline OverlapMatrix overlap_closed_form(std::size_t d, double eps) {
  require_dim(d);
  if (!(eps > 0.0 && eps < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "closed-form overlap needs epsilon in (0,1), got " + fmt_real(eps));
  }
  const double dd = static_cast<double>(d);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> e(d * d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double alpha = eps - static_cast<double>(k) + static_cast<double>(j);
      const double num = 1.0 - std::cos(two_pi * alpha);
      const double den = 1.0 - std::cos(two_pi * alpha / dd);
      e[j * d + k] = std::sqrt(std::max(0.0, num / den)) / dd;
    }
  }
  return OverlapMatrix(d, std::move(e));
}

/// |φ⁺_d⟩ = d^{-1/2} Σ_j |jj⟩
inline StateVector max_entangled(std::size_t d) {
  require_dim(d);
  StateVector v(d * d);
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t j = 0; j < d; ++j) v[j * d + j] = a;
  return v;
}

inline std::vector<StateVector> computational_basis(std::size_t d) {
  std::vector<StateVector> basis;
  basis.reserve(d);
  for (std::size_t j = 0; j < d; ++j) basis.push_back(StateVector::basis(d, j));
  return basis;
}

/// Ideal realization for (d, ε): |φ⁺_d⟩, Alice setting 0 = {|j⟩⟨j|},
/// setting 1 = {U_ε|k⟩⟨k|U_ε†}. Bob's settings are the optional plugin
/// settings followed by the key setting {|b⟩⟨b|}, so ŷ = extra_bob.size().
inline Realization ideal_realization(std::size_t d, double eps, const std::vector<Povm>& extra_bob = {}) {
  require_dim(d);
  require_epsilon(eps);
  const ComplexMatrix u = u_epsilon(d, eps);
  const Povm p = Povm::from_basis(computational_basis(d));
  const Povm q = p.conjugated_by(u);

  Realization r;
  r.state = max_entangled(d).projector();
  r.dim_a = d;
  r.dim_b = d;
  r.alice = {p, q};
  for (const auto& b : extra_bob) {
    if (b.dim() != d) throw Error(ErrorKind::DimensionMismatch, "plugin measurement dimension differs from d");
    b.validate();
    r.bob.push_back(b);
  }
  r.bob.push_back(p);
  r.key_alice = 0;
  r.key_bob = r.bob.size() - 1;
  r.bob_hats = {p.conj(), q.conj()};
  return r;
}

/// Replaces Bob's key measurement by one whose outcome is shifted
/// b → b+1 mod k with probability q.
inline Realization with_bob_key_noise(Realization r, double q) {
  if (!(q >= 0.0 && q <= 0.5)) throw Error(ErrorKind::InvalidArgument, "noise must lie in [0, 0.5]");
  if (q == 0.0) return r;
  const Povm& key = r.bob[r.key_bob];
  const std::size_t k = key.outcomes();
  std::vector<ComplexMatrix> effects;
  for (std::size_t b = 0; b < k; ++b) {
    effects.push_back((1.0 - q) * key[b] + q * key[(b + k - 1) % k]);
  }
  r.bob[r.key_bob] = Povm(std::move(effects));
  return r;
}

/// A dilated realization together with the ingredients that produced it.
struct Dilation {
  Realization realization;
  ComplexMatrix w_a;    // unitary on H_A ⊗ J_A
  ComplexMatrix w_b;    // unitary on H_B ⊗ J_B
  ComplexMatrix junk;   // σ_junk on J_A ⊗ J_B
};

/// Embeds a realization into H_A⊗J_A, H_B⊗J_B: the state becomes
/// (W_A⊗W_B)(ρ ⊗ σ_junk)(W_A⊗W_B)† with subsystems ordered (A, J_A, B, J_B)
/// and every effect becomes W (E ⊗ I_junk) W†. The Born correlation is
/// unchanged. σ_junk and the W's are drawn from `seed` in that order.
inline Dilation dilate_with_witness(const Realization& real, std::size_t junk_dim_a, std::size_t junk_dim_b,
                                    std::uint64_t seed) {
  if (junk_dim_a < 1 || junk_dim_b < 1) throw Error(ErrorKind::InvalidArgument, "junk dims must be >= 1");
  Rng rng(seed);
  Dilation out;
  out.junk = random_density_matrix(junk_dim_a * junk_dim_b, rng);
  out.w_a = random_unitary(real.dim_a * junk_dim_a, rng);
  out.w_b = random_unitary(real.dim_b * junk_dim_b, rng);

  const std::size_t dims[4] = {real.dim_a, real.dim_b, junk_dim_a, junk_dim_b};
  const std::size_t perm[4] = {0, 2, 1, 3};
  const ComplexMatrix padded = permute_subsystems(kron(real.state, out.junk), dims, perm);
  const ComplexMatrix w = kron(out.w_a, out.w_b);

  Realization& r = out.realization;
  r.state = w * padded * w.adjoint();
  r.dim_a = real.dim_a * junk_dim_a;
  r.dim_b = real.dim_b * junk_dim_b;
  for (const auto& p : real.alice) r.alice.push_back(p.padded(junk_dim_a).conjugated_by(out.w_a));
  for (const auto& p : real.bob) r.bob.push_back(p.padded(junk_dim_b).conjugated_by(out.w_b));
  for (const auto& p : real.bob_hats) r.bob_hats.push_back(p.padded(junk_dim_b).conjugated_by(out.w_b));
  r.key_alice = real.key_alice;
  r.key_bob = real.key_bob;
  return out;
}

inline Realization dilate(const Realization& real, std::size_t junk_dim_a, std::size_t junk_dim_b,
                          std::uint64_t seed) {
  return dilate_with_witness(real, junk_dim_a, junk_dim_b, seed).realization;
}

}  // namespace dikey
