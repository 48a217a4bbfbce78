#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dikey/error.hpp"
#include "dikey/linalg.hpp"

namespace dikey {

struct Spectrum {
  std::vector<double> eigenvalues;  // descending
  ComplexMatrix eigenvectors;       // column i pairs with eigenvalues[i]

  StateVector eigenvector(std::size_t i) const {
    StateVector v(eigenvectors.rows());
    for (std::size_t r = 0; r < eigenvectors.rows(); ++r) v[r] = eigenvectors(r, i);
    return v;
  }
};

struct JacobiOptions {
  double hermitian_tol = 1e-9;
  double off_diagonal_rel_tol = 1e-12;  // relative to ‖M‖_F
  int max_sweeps = 100;
};

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot a_pq with
/// diag(1, e^{-iφ}) and then applies the real symmetric Jacobi rotation, so
/// the accumulated transform stays exactly unitary up to round-off. Sweeps
/// continue until the off-diagonal Frobenius norm drops below
/// off_diagonal_rel_tol·‖M‖_F.
inline Spectrum hermitian_eigen(const ComplexMatrix& m, const JacobiOptions& opts = {}) {
  if (!m.square()) throw Error(ErrorKind::DimensionMismatch, "eigenproblem needs a square matrix");
  const std::size_t n = m.rows();
  const double scale = std::max(1.0, max_abs(m));
  const double herm = hermiticity_residual(m);
  if (herm > opts.hermitian_tol * scale) {
    throw Error(ErrorKind::NotHermitian, "hermiticity residual " + fmt_real(herm));
  }

  ComplexMatrix a = m + m.adjoint();
  a *= 0.5;
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double target = opts.off_diagonal_rel_tol * frobenius_norm(a);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > target) {
    if (sweep++ >= opts.max_sweeps) {
      throw Error(ErrorKind::NoConvergence,
                  "Jacobi did not converge in " + std::to_string(opts.max_sweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx g = a(p, q);
        const double mag = std::abs(g);
        if (mag == 0.0) continue;
        const cplx phase = g / mag;  // e^{iφ}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
        const cplx j00 = c;
        const cplx j01 = s;
        const cplx j10 = -s * std::conj(phase);
        const cplx j11 = c * std::conj(phase);

        for (std::size_t k = 0; k < n; ++k) {  // A ← A J
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = akp * j00 + akq * j10;
          a(k, q) = akp * j01 + akq * j11;
        }
        for (std::size_t k = 0; k < n; ++k) {  // A ← J† A
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = std::conj(j00) * apk + std::conj(j10) * aqk;
          a(q, k) = std::conj(j01) * apk + std::conj(j11) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = app - t * mag;
        a(q, q) = aqq + t * mag;
        for (std::size_t k = 0; k < n; ++k) {  // V ← V J
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = vkp * j00 + vkq * j10;
          v(k, q) = vkp * j01 + vkq * j11;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() > a(j, j).real(); });
  Spectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.eigenvalues[c] = a(order[c], order[c]).real();
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = v(r, order[c]);
  }
  return out;
}

/// V·diag(λ)·V†
inline ComplexMatrix reconstruct(const Spectrum& s) {
  const ComplexMatrix& v = s.eigenvectors;
  ComplexMatrix out(v.rows(), v.rows());
  for (std::size_t c = 0; c < s.eigenvalues.size(); ++c) {
    const double lam = s.eigenvalues[c];
    if (lam == 0.0) continue;
    for (std::size_t i = 0; i < v.rows(); ++i) {
      const cplx vi = lam * v(i, c);
      for (std::size_t j = 0; j < v.rows(); ++j) out(i, j) += vi * std::conj(v(j, c));
    }
  }
  return out;
}

/// Largest singular value.
inline double spectral_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  const auto s = hermitian_eigen(m.adjoint() * m);
  return std::sqrt(std::max(0.0, s.eigenvalues.front()));
}

inline double min_eigenvalue(const ComplexMatrix& hermitian) {
  const auto s = hermitian_eigen(hermitian);
  return s.eigenvalues.empty() ? 0.0 : s.eigenvalues.back();
}

}  // namespace dikey
