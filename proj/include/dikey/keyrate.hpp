#pragma once

// Born-rule correlations, Shannon and von Neumann conditional entropies,
// the classical-quantum state held by the eavesdropper, and the
// one-way (Devetak-Winter) key-rate bound H(A|E) − H(A|B).

#include <cmath>
#include <string>
#include <vector>

#include "dikey/construction.hpp"
#include "dikey/entropy.hpp"
#include "dikey/error.hpp"
#include "dikey/linalg.hpp"

namespace dikey {

/// p(a,b|x,y): an outcome tensor with probability invariants.
class Correlation : public OutcomeTensor {
 public:
  Correlation() = default;
  explicit Correlation(Scenario scenario) : OutcomeTensor(std::move(scenario)) {}

  double alice_marginal(std::size_t a, std::size_t x, std::size_t y = 0) const {
    double s = 0.0;
    for (std::size_t b = 0; b < scenario().bob_outcomes[y]; ++b) s += (*this)(a, b, x, y);
    return s;
  }

  double bob_marginal(std::size_t b, std::size_t y, std::size_t x = 0) const {
    double s = 0.0;
    for (std::size_t a = 0; a < scenario().alice_outcomes[x]; ++a) s += (*this)(a, b, x, y);
    return s;
  }

  /// Positivity, per-setting normalization and no-signaling.
  void validate(double tol = 1e-9) const {
    const auto& s = scenario();
    for (std::size_t x = 0; x < s.alice_settings(); ++x) {
      for (std::size_t y = 0; y < s.bob_settings(); ++y) {
        double sum = 0.0;
        for (std::size_t a = 0; a < s.alice_outcomes[x]; ++a)
          for (std::size_t b = 0; b < s.bob_outcomes[y]; ++b) {
            const double v = (*this)(a, b, x, y);
            if (!(v >= -1e-12)) throw violation(x, y, "negative probability " + fmt_real(v));
            sum += v;
          }
        if (std::abs(sum - 1.0) > tol) throw violation(x, y, "block sums to " + fmt_real(sum));
        for (std::size_t a = 0; a < s.alice_outcomes[x]; ++a) {
          if (std::abs(alice_marginal(a, x, y) - alice_marginal(a, x, 0)) > tol) {
            throw violation(x, y, "alice marginal depends on y");
          }
        }
        for (std::size_t b = 0; b < s.bob_outcomes[y]; ++b) {
          if (std::abs(bob_marginal(b, y, x) - bob_marginal(b, y, 0)) > tol) {
            throw violation(x, y, "bob marginal depends on x");
          }
        }
      }
    }
  }

 private:
  static Error violation(std::size_t x, std::size_t y, const std::string& what) {
    return Error(ErrorKind::InvariantViolation,
                 "correlation (x=" + std::to_string(x) + ", y=" + std::to_string(y) + "): " + what);
  }
};

namespace detail {

// tr[(A ⊗ B) ρ] = Σ A_ij B_kl ρ_(j,l),(i,k)
inline double born_probability(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& rho) {
  const std::size_t na = a.rows();
  const std::size_t nb = b.rows();
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx{0.0, 0.0}) continue;
      cplx inner_sum{0.0, 0.0};
      for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t l = 0; l < nb; ++l) inner_sum += b(k, l) * rho(j * nb + l, i * nb + k);
      s += aij * inner_sum;
    }
  return s.real();
}

}  // namespace detail

/// p(a,b|x,y) = tr[(A^x_a ⊗ B^y_b) ρ] over every setting pair.
inline Correlation born_correlation(const Realization& real) {
  Correlation c(real.scenario());
  if (real.state.rows() != real.dim_a * real.dim_b) throw Error(ErrorKind::DimensionMismatch, "state vs local dims");
  for (std::size_t x = 0; x < real.alice.size(); ++x)
    for (std::size_t y = 0; y < real.bob.size(); ++y)
      for (std::size_t a = 0; a < real.alice[x].outcomes(); ++a)
        for (std::size_t b = 0; b < real.bob[y].outcomes(); ++b)
          c(a, b, x, y) = detail::born_probability(real.alice[x][a], real.bob[y][b], real.state);
  c.validate();
  return c;
}

/// H(A|B) = H(AB) − H(B) on the block p(·,·|x̂,ŷ).
inline double h_a_given_b(const Correlation& corr, std::size_t x_hat, std::size_t y_hat) {
  const auto& s = corr.scenario();
  if (x_hat >= s.alice_settings() || y_hat >= s.bob_settings()) {
    throw Error(ErrorKind::InvalidArgument, "setting index out of range");
  }
  std::vector<double> joint;
  std::vector<double> bob(s.bob_outcomes[y_hat], 0.0);
  for (std::size_t a = 0; a < s.alice_outcomes[x_hat]; ++a)
    for (std::size_t b = 0; b < s.bob_outcomes[y_hat]; ++b) {
      const double p = corr(a, b, x_hat, y_hat);
      joint.push_back(p);
      bob[b] += p;
    }
  return shannon_entropy(joint) - shannon_entropy(bob);
}

/// H(A) for Alice's outcome distribution on setting x̂.
inline double h_a(const Correlation& corr, std::size_t x_hat) {
  std::vector<double> p;
  for (std::size_t a = 0; a < corr.scenario().alice_outcomes[x_hat]; ++a) p.push_back(corr.alice_marginal(a, x_hat));
  return shannon_entropy(p);
}

/// σ_AE = Σ_a |a⟩⟨a| ⊗ σ_E^a, stored as its blocks; tr σ_E^a = p(a).
struct ClassicalQuantumState {
  std::vector<double> outcome_probs;
  std::vector<ComplexMatrix> conditional_env_states;

  ComplexMatrix environment_state() const {
    ComplexMatrix e = conditional_env_states.front();
    for (std::size_t a = 1; a < conditional_env_states.size(); ++a) e += conditional_env_states[a];
    return e;
  }

  void validate(double tol = 1e-9) const {
    double total = 0.0;
    for (const auto& blk : conditional_env_states) {
      total += blk.trace().real();
      if (hermiticity_residual(blk) > tol || min_eigenvalue(blk) < -tol) {
        throw Error(ErrorKind::InvariantViolation, "cq block is not PSD");
      }
    }
    if (std::abs(total - 1.0) > tol) throw Error(ErrorKind::InvariantViolation, "cq blocks sum to trace " + fmt_real(total));
  }

  /// max_a ‖σ_E^a − p(a)·σ_E‖_max: zero iff Eve's state carries no
  /// information about a.
  double product_form_residual() const {
    const ComplexMatrix env = environment_state();
    double r = 0.0;
    for (std::size_t a = 0; a < conditional_env_states.size(); ++a) {
      r = std::max(r, max_abs_diff(conditional_env_states[a], outcome_probs[a] * env));
    }
    return r;
  }
};

/// Blocks tr_AB[(A^x̂_a ⊗ I_B ⊗ I_E)|ψ⟩⟨ψ|] for a purification ψ of real.state.
inline ClassicalQuantumState sigma_ae(const Realization& real, const StateVector& purification, double tol = 1e-9) {
  const std::size_t n = real.dim_a * real.dim_b;
  const std::size_t env = environment_dim(purification, n);
  const double mismatch = max_abs_diff(reduce_purification(purification, n), real.state);
  if (mismatch > tol) {
    throw Error(ErrorKind::PurificationMismatch, "tr_E |psi><psi| differs from the state by " + fmt_real(mismatch));
  }
  // Ψ is n × env with ψ = Σ Ψ_ie |i⟩|e⟩; the block for M is (Ψ† M Ψ)ᵀ.
  ComplexMatrix psi(n, env, std::vector<cplx>(purification.amplitudes().begin(), purification.amplitudes().end()));
  const ComplexMatrix psi_dag = psi.adjoint();
  const ComplexMatrix id_b = ComplexMatrix::identity(real.dim_b);
  const Povm& key = real.alice[real.key_alice];

  ClassicalQuantumState cq;
  for (std::size_t a = 0; a < key.outcomes(); ++a) {
    ComplexMatrix blk = (psi_dag * (kron(key[a], id_b) * psi)).transpose();
    ComplexMatrix herm = blk + blk.adjoint();
    herm *= 0.5;
    cq.outcome_probs.push_back(herm.trace().real());
    cq.conditional_env_states.push_back(std::move(herm));
  }
  return cq;
}

/// H(A|E) = H(AE) − H(E) in bits. σ_AE is block diagonal, so H(AE) is the
/// entropy of the union of the block spectra.
inline double h_a_given_e(const ClassicalQuantumState& cq) {
  double h_ae = 0.0;
  for (const auto& blk : cq.conditional_env_states) h_ae += detail::entropy_of_operator(blk);
  const double h_e = detail::entropy_of_operator(cq.environment_state());
  return h_ae - h_e;
}

struct KeyRateReport {
  double h_a = 0.0;
  double h_a_given_b = 0.0;
  double h_a_given_e = 0.0;
  double dw_rate = 0.0;
  double product_form_residual = 0.0;
  double purification_residual = 0.0;  // ‖tr_E ψψ† − ρ‖_max
  std::size_t environment_dim = 0;
};

/// Key-rate certificate for one realization and one explicit purification.
inline KeyRateReport devetak_winter(const Realization& real, const StateVector& purification) {
  const Correlation corr = born_correlation(real);
  const ClassicalQuantumState cq = sigma_ae(real, purification);
  KeyRateReport rep;
  rep.h_a = h_a(corr, real.key_alice);
  rep.h_a_given_b = h_a_given_b(corr, real.key_alice, real.key_bob);
  rep.h_a_given_e = h_a_given_e(cq);
  rep.dw_rate = rep.h_a_given_e - rep.h_a_given_b;
  rep.product_form_residual = cq.product_form_residual();
  rep.purification_residual = max_abs_diff(reduce_purification(purification, real.dim_a * real.dim_b), real.state);
  rep.environment_dim = environment_dim(purification, real.dim_a * real.dim_b);
  return rep;
}

inline KeyRateReport devetak_winter(const Realization& real) { return devetak_winter(real, purify(real.state)); }

}  // namespace dikey
