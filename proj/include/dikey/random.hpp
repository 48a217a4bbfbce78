#pragma once

// Seeded random matrices for adversarial test instances. Every generator
// takes the engine by reference; nothing here holds global state.

#include <cmath>
#include <cstdint>
#include <random>

#include "dikey/error.hpp"
#include "dikey/linalg.hpp"

namespace dikey {

using Rng = std::mt19937_64;

/// Complex Ginibre sample: i.i.d. standard complex normal entries.
inline ComplexMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(rows, cols);
  for (auto& z : g.entries()) {
    const double re = normal(rng);
    const double im = normal(rng);
    z = cplx{re, im} / std::sqrt(2.0);
  }
  return g;
}

/// Full-rank random density matrix G G† / tr(G G†).
inline ComplexMatrix random_density_matrix(std::size_t dim, Rng& rng, std::size_t rank = 0) {
  if (rank == 0) rank = dim;
  const ComplexMatrix g = ginibre(dim, rank, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho *= 1.0 / rho.trace().real();
  ComplexMatrix h = rho + rho.adjoint();
  h *= 0.5;
  return h;
}

/// Isometry with orthonormal columns (rows ≥ cols) via modified Gram-Schmidt
/// on a Ginibre sample. rows == cols yields a Haar-ish unitary.
inline ComplexMatrix random_isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  if (cols > rows) throw Error(ErrorKind::InvalidArgument, "isometry needs rows >= cols");
  ComplexMatrix q = ginibre(rows, cols, rng);
  for (std::size_t c = 0; c < cols; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < c; ++k) {
        cplx proj{0.0, 0.0};
        for (std::size_t r = 0; r < rows; ++r) proj += std::conj(q(r, k)) * q(r, c);
        for (std::size_t r = 0; r < rows; ++r) q(r, c) -= proj * q(r, k);
      }
    }
    double nrm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) nrm += std::norm(q(r, c));
    nrm = std::sqrt(nrm);
    for (std::size_t r = 0; r < rows; ++r) q(r, c) /= nrm;
  }
  return q;
}

inline ComplexMatrix random_unitary(std::size_t dim, Rng& rng) { return random_isometry(dim, dim, rng); }

inline StateVector random_state(std::size_t dim, Rng& rng) {
  const ComplexMatrix g = ginibre(dim, 1, rng);
  return StateVector(std::vector<cplx>(g.entries().begin(), g.entries().end())).normalized();
}

}  // namespace dikey
