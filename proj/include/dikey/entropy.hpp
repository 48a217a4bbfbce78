#pragma once

// Entropies in bits and purification of mixed states.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dikey/error.hpp"
#include "dikey/linalg.hpp"
#include "dikey/spectral.hpp"

namespace dikey {

/// Eigenvalues in [-kClampTol, 0) count as round-off and are clamped to 0.
inline constexpr double kClampTol = 1e-7;

namespace detail {

inline double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline double entropy_of_eigenvalues(std::span<const double> eigenvalues) {
  double h = 0.0;
  for (double lam : eigenvalues) {
    if (lam < -kClampTol) {
      throw Error(ErrorKind::NegativeEigenvalue, "eigenvalue " + fmt_real(lam));
    }
    h -= xlog2x(std::max(lam, 0.0));
  }
  return h + 0.0;  // avoid -0
}

// Entropy of a PSD operator without a normalization requirement; used on
// the subnormalized blocks of classical-quantum states.
inline double entropy_of_operator(const ComplexMatrix& m) {
  return entropy_of_eigenvalues(hermitian_eigen(m).eigenvalues);
}

}  // namespace detail

/// −Σ p log₂ p over a probability list.
inline double shannon_entropy(std::span<const double> p) {
  double sum = 0.0;
  for (double x : p) {
    if (x < -1e-12) throw Error(ErrorKind::Normalization, "negative probability " + fmt_real(x));
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::Normalization, "probabilities sum to " + fmt_real(sum));
  }
  double h = 0.0;
  for (double x : p) h -= detail::xlog2x(std::max(x, 0.0));
  return h + 0.0;
}

/// Binary entropy h₂(q).
inline double binary_entropy(double q) {
  const double p[2] = {q, 1.0 - q};
  return shannon_entropy(p);
}

/// −tr ρ log₂ ρ for a density matrix.
inline double von_neumann_entropy(const ComplexMatrix& rho) {
  if (!rho.square()) throw Error(ErrorKind::DimensionMismatch, "density matrix must be square");
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > 1e-9) {
    throw Error(ErrorKind::Normalization, "density matrix trace " + fmt_real(tr));
  }
  return detail::entropy_of_operator(rho);
}

struct PurifyOptions {
  double rank_tol = 1e-12;  // eigenvalues at or below this are dropped
};

/// Purification |ψ⟩ on H ⊗ H_E with dim(H_E) = rank(ρ):
/// |ψ⟩ = Σ_i √λ_i |v_i⟩ ⊗ |i⟩.
inline StateVector purify(const ComplexMatrix& rho, const PurifyOptions& opts = {}) {
  if (!rho.square()) throw Error(ErrorKind::DimensionMismatch, "density matrix must be square");
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > 1e-9) {
    throw Error(ErrorKind::Normalization, "density matrix trace " + fmt_real(tr));
  }
  const Spectrum s = hermitian_eigen(rho);
  if (s.eigenvalues.back() < -kClampTol) {
    throw Error(ErrorKind::NegativeEigenvalue,
                "state is not PSD: eigenvalue " + fmt_real(s.eigenvalues.back()));
  }
  std::size_t rank = 0;
  while (rank < s.eigenvalues.size() && s.eigenvalues[rank] > opts.rank_tol) ++rank;
  if (rank == 0) throw Error(ErrorKind::Normalization, "zero state");
  const std::size_t n = rho.rows();
  StateVector psi(n * rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const double w = std::sqrt(s.eigenvalues[i]);
    for (std::size_t r = 0; r < n; ++r) psi[r * rank + i] = w * s.eigenvectors(r, i);
  }
  return psi;
}

/// dim(H_E) of a purification of an n-dimensional state.
inline std::size_t environment_dim(const StateVector& purification, std::size_t system_dim) {
  if (system_dim == 0 || purification.dim() % system_dim != 0) {
    throw Error(ErrorKind::DimensionMismatch, "purification size not a multiple of system dim");
  }
  return purification.dim() / system_dim;
}

/// tr_E |ψ⟩⟨ψ| for ψ on H ⊗ H_E.
inline ComplexMatrix reduce_purification(const StateVector& psi, std::size_t system_dim) {
  const std::size_t env = environment_dim(psi, system_dim);
  const std::size_t dims[2] = {system_dim, env};
  const std::size_t keep[1] = {0};
  return partial_trace(psi, dims, keep);
}

}  // namespace dikey
