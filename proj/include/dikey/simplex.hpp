#pragma once

// Dense revised simplex for  min cᵀz  s.t.  A z = b, z ≥ 0,  with columns
// supplied on demand by a column source. Bland's rule picks both the
// entering column (lowest index with negative reduced cost) and the leaving
// row (lowest basic index among ratio ties), which rules out cycling.
//
// The caller provides a feasible starting basis; B⁻¹ is kept explicitly,
// updated by pivoting and rebuilt from scratch every `refactor_every`
// iterations.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dikey/error.hpp"

namespace dikey {

using SparseColumn = std::vector<std::pair<std::size_t, double>>;

template <class S>
concept ColumnSource = requires(const S& s, std::size_t j, SparseColumn& col) {
  { s.columns() } -> std::convertible_to<std::size_t>;
  { s.rows() } -> std::convertible_to<std::size_t>;
  { s.cost(j) } -> std::convertible_to<double>;
  s.column(j, col);
};

enum class LpStatus { Optimal, IterationCap, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::IterationCap: return "iteration-cap";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

struct SimplexOptions {
  double pivot_tol = 1e-10;
  double reduced_cost_tol = 1e-10;
  std::size_t iteration_cap = 1'000'000;
  std::size_t refactor_every = 50;
};

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::vector<std::size_t> basis;  // column index per row
  std::vector<double> basic_values;
};

namespace detail {

// Gauss-Jordan inverse with partial pivoting; m is tiny here.
inline std::vector<double> invert_dense(std::vector<double> a, std::size_t m) {
  std::vector<double> inv(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) inv[i * m + i] = 1.0;
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(a[r * m + c]) > std::abs(a[piv * m + c])) piv = r;
    if (std::abs(a[piv * m + c]) < 1e-14) throw Error(ErrorKind::InvariantViolation, "singular simplex basis");
    if (piv != c) {
      for (std::size_t k = 0; k < m; ++k) {
        std::swap(a[piv * m + k], a[c * m + k]);
        std::swap(inv[piv * m + k], inv[c * m + k]);
      }
    }
    const double d = a[c * m + c];
    for (std::size_t k = 0; k < m; ++k) {
      a[c * m + k] /= d;
      inv[c * m + k] /= d;
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      const double f = a[r * m + c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < m; ++k) {
        a[r * m + k] -= f * a[c * m + k];
        inv[r * m + k] -= f * inv[c * m + k];
      }
    }
  }
  return inv;
}

}  // namespace detail

template <ColumnSource Source>
LpSolution revised_simplex(const Source& src, const std::vector<double>& b, std::vector<std::size_t> basis,
                           const SimplexOptions& opts = {}) {
  const std::size_t m = src.rows();
  const std::size_t n = src.columns();
  if (b.size() != m || basis.size() != m) throw Error(ErrorKind::DimensionMismatch, "simplex basis/rhs size");

  std::vector<char> is_basic(n, 0);
  for (auto j : basis) {
    if (j >= n || is_basic[j]) throw Error(ErrorKind::InvalidArgument, "invalid starting basis");
    is_basic[j] = 1;
  }

  std::vector<double> binv;
  std::vector<double> x(m, 0.0);
  SparseColumn col;

  auto refactor = [&] {
    std::vector<double> bmat(m * m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      src.column(basis[r], col);
      for (const auto& [i, v] : col) bmat[i * m + r] = v;
    }
    binv = detail::invert_dense(std::move(bmat), m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) s += binv[i * m + k] * b[k];
      x[i] = std::abs(s) < 1e-13 ? 0.0 : s;
    }
  };
  refactor();
  for (double v : x) {
    if (v < -1e-9) throw Error(ErrorKind::InvalidArgument, "starting basis is not primal feasible");
  }

  LpSolution out;
  std::vector<double> pi(m);
  std::vector<double> u(m);
  std::size_t since_refactor = 0;

  while (true) {
    // π = c_Bᵀ B⁻¹
    std::fill(pi.begin(), pi.end(), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const double cb = src.cost(basis[r]);
      if (cb == 0.0) continue;
      for (std::size_t k = 0; k < m; ++k) pi[k] += cb * binv[r * m + k];
    }

    std::size_t entering = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (is_basic[j]) continue;
      src.column(j, col);
      double dj = src.cost(j);
      for (const auto& [i, v] : col) dj -= pi[i] * v;
      if (dj < -opts.reduced_cost_tol) {
        entering = j;
        break;
      }
    }
    if (entering == n) {
      out.status = LpStatus::Optimal;
      break;
    }
    if (out.iterations >= opts.iteration_cap) {
      out.status = LpStatus::IterationCap;
      break;
    }

    // u = B⁻¹ A_j (col still holds the entering column)
    std::fill(u.begin(), u.end(), 0.0);
    for (const auto& [i, v] : col)
      for (std::size_t r = 0; r < m; ++r) u[r] += binv[r * m + i] * v;

    std::size_t leave = m;
    double best = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (u[r] <= opts.pivot_tol) continue;
      const double ratio = std::max(0.0, x[r]) / u[r];
      if (leave == m || ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave == m) {
      out.status = LpStatus::Unbounded;
      break;
    }

    const double piv = u[leave];
    for (std::size_t k = 0; k < m; ++k) binv[leave * m + k] /= piv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == leave || u[r] == 0.0) continue;
      const double f = u[r];
      for (std::size_t k = 0; k < m; ++k) binv[r * m + k] -= f * binv[leave * m + k];
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r != leave) x[r] = std::max(0.0, x[r] - best * u[r]);
    }
    x[leave] = best;
    is_basic[basis[leave]] = 0;
    is_basic[entering] = 1;
    basis[leave] = entering;
    ++out.iterations;

    if (++since_refactor >= opts.refactor_every) {
      refactor();
      for (auto& v : x) v = std::max(0.0, v);
      since_refactor = 0;
    }
  }

  out.objective = 0.0;
  for (std::size_t r = 0; r < m; ++r) out.objective += src.cost(basis[r]) * x[r];
  out.basis = std::move(basis);
  out.basic_values = std::move(x);
  return out;
}

}  // namespace dikey
