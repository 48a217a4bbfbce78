#pragma once

// Dense complex matrices and state vectors. Row-major, no sparsity: every
// operator in this toolkit lives on at most a few hundred dimensions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dikey/error.hpp"

namespace dikey {

using cplx = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols, cplx{0.0, 0.0}) {}

  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) + " given " +
                      std::to_string(entries_.size()) + " entries");
    }
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix diagonal(std::span<const double> values) {
    ComplexMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  /// Builds a Hermitian matrix from (approximately) Hermitian entries. The
  /// input must satisfy ‖M − M†‖_max ≤ tol; the stored value is (M + M†)/2.
  static ComplexMatrix hermitian(std::size_t n, std::vector<cplx> entries, double tol = 1e-9);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<const cplx> entries() const noexcept { return entries_; }
  std::span<cplx> entries() noexcept { return entries_; }

  ComplexMatrix adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
  }

  ComplexMatrix transpose() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  ComplexMatrix conj() const {
    ComplexMatrix out = *this;
    for (auto& z : out.entries_) z = std::conj(z);
    return out;
  }

  cplx trace() const {
    cplx t{0.0, 0.0};
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  /// Rectangular block [r0, r0+nr) × [c0, c0+nc).
  ComplexMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) {
      throw Error(ErrorKind::DimensionMismatch, "block out of range");
    }
    ComplexMatrix out(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
    return out;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += other.entries_[k];
    return *this;
  }

  ComplexMatrix& operator-=(const ComplexMatrix& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= other.entries_[k];
    return *this;
  }

  ComplexMatrix& operator*=(cplx s) {
    for (auto& z : entries_) z *= s;
    return *this;
  }

 private:
  void require_same_shape(const ComplexMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
      throw Error(ErrorKind::DimensionMismatch, "shape mismatch in elementwise operation");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> entries_;
};

inline ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
inline ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
inline ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
inline ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix product " + std::to_string(a.rows()) + "x" +
                                                  std::to_string(a.cols()) + " * " +
                                                  std::to_string(b.rows()) + "x" +
                                                  std::to_string(b.cols()));
  }
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{0.0, 0.0}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline double max_abs(const ComplexMatrix& m) {
  double v = 0.0;
  for (const auto& z : m.entries()) v = std::max(v, std::abs(z));
  return v;
}

inline double frobenius_norm(const ComplexMatrix& m) {
  double s = 0.0;
  for (const auto& z : m.entries()) s += std::norm(z);
  return std::sqrt(s);
}

/// ‖a − b‖_max.
inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "shape mismatch in difference");
  }
  double v = 0.0;
  auto ea = a.entries();
  auto eb = b.entries();
  for (std::size_t k = 0; k < ea.size(); ++k) v = std::max(v, std::abs(ea[k] - eb[k]));
  return v;
}

inline double hermiticity_residual(const ComplexMatrix& m) {
  if (!m.square()) return INFINITY;
  double v = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j) v = std::max(v, std::abs(m(i, j) - std::conj(m(j, i))));
  return v;
}

inline ComplexMatrix ComplexMatrix::hermitian(std::size_t n, std::vector<cplx> entries, double tol) {
  ComplexMatrix m(n, n, std::move(entries));
  const double r = hermiticity_residual(m);
  if (r > tol) {
    throw Error(ErrorKind::NotHermitian, "hermiticity residual " + fmt_real(r));
  }
  ComplexMatrix h = m + m.adjoint();
  h *= 0.5;
  return h;
}

class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t dim) : amplitudes_(dim, cplx{0.0, 0.0}) {}
  explicit StateVector(std::vector<cplx> amplitudes) : amplitudes_(std::move(amplitudes)) {}

  static StateVector basis(std::size_t dim, std::size_t index) {
    if (index >= dim) throw Error(ErrorKind::InvalidArgument, "basis index out of range");
    StateVector v(dim);
    v.amplitudes_[index] = 1.0;
    return v;
  }

  std::size_t dim() const noexcept { return amplitudes_.size(); }
  cplx& operator[](std::size_t i) { return amplitudes_[i]; }
  const cplx& operator[](std::size_t i) const { return amplitudes_[i]; }
  std::span<const cplx> amplitudes() const noexcept { return amplitudes_; }
  std::span<cplx> amplitudes() noexcept { return amplitudes_; }

  double norm() const {
    double s = 0.0;
    for (const auto& z : amplitudes_) s += std::norm(z);
    return std::sqrt(s);
  }

  StateVector normalized() const {
    const double n = norm();
    if (n == 0.0) throw Error(ErrorKind::Normalization, "cannot normalize the zero vector");
    StateVector out = *this;
    for (auto& z : out.amplitudes_) z /= n;
    return out;
  }

  /// |v⟩⟨v|
  ComplexMatrix projector() const {
    const std::size_t n = dim();
    ComplexMatrix p(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p(i, j) = amplitudes_[i] * std::conj(amplitudes_[j]);
    return p;
  }

  StateVector& operator+=(const StateVector& other) {
    if (dim() != other.dim()) throw Error(ErrorKind::DimensionMismatch, "vector sum");
    for (std::size_t i = 0; i < dim(); ++i) amplitudes_[i] += other.amplitudes_[i];
    return *this;
  }

  StateVector& operator-=(const StateVector& other) {
    if (dim() != other.dim()) throw Error(ErrorKind::DimensionMismatch, "vector difference");
    for (std::size_t i = 0; i < dim(); ++i) amplitudes_[i] -= other.amplitudes_[i];
    return *this;
  }

  StateVector& operator*=(cplx s) {
    for (auto& z : amplitudes_) z *= s;
    return *this;
  }

 private:
  std::vector<cplx> amplitudes_;
};

inline StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
inline StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
inline StateVector operator*(cplx s, StateVector a) { return a *= s; }

/// ⟨a|b⟩, antilinear in the first argument.
inline cplx inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "inner product");
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline StateVector operator*(const ComplexMatrix& m, const StateVector& v) {
  if (m.cols() != v.dim()) throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
  StateVector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    cplx s{0.0, 0.0};
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

/// |a⟩⟨b|
inline ComplexMatrix outer(const StateVector& a, const StateVector& b) {
  ComplexMatrix m(a.dim(), b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) m(i, j) = a[i] * std::conj(b[j]);
  return m;
}

/// (a⊗b)[(i·r_b+k),(j·c_b+l)] = a[i,j]·b[k,l]
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t rb = b.rows();
  const std::size_t cb = b.cols();
  ComplexMatrix out(a.rows() * rb, a.cols() * cb);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx{0.0, 0.0}) continue;
      for (std::size_t k = 0; k < rb; ++k)
        for (std::size_t l = 0; l < cb; ++l) out(i * rb + k, j * cb + l) = aij * b(k, l);
    }
  return out;
}

inline StateVector kron(const StateVector& a, const StateVector& b) {
  StateVector out(a.dim() * b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t k = 0; k < b.dim(); ++k) out[i * b.dim() + k] = a[i] * b[k];
  return out;
}

namespace detail {

inline std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

// Maps a flat index over `dims` (first subsystem most significant) to the
// flat index of the same basis element after reordering the subsystems so
// that new position p holds old subsystem perm[p].
inline std::vector<std::size_t> permutation_map(std::span<const std::size_t> dims,
                                                std::span<const std::size_t> perm) {
  const std::size_t n = dims.size();
  if (perm.size() != n) throw Error(ErrorKind::DimensionMismatch, "permutation length");
  std::vector<bool> seen(n, false);
  for (auto p : perm) {
    if (p >= n || seen[p]) throw Error(ErrorKind::InvalidArgument, "not a permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> new_dims(n);
  for (std::size_t p = 0; p < n; ++p) new_dims[p] = dims[perm[p]];
  // stride of old subsystem s inside the new ordering
  std::vector<std::size_t> new_stride(n);
  {
    std::size_t s = 1;
    for (std::size_t p = n; p-- > 0;) {
      new_stride[perm[p]] = s;
      s *= new_dims[p];
    }
  }
  const std::size_t total = product(dims);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t target = 0;
    for (std::size_t s = 0; s < n; ++s) target += digit[s] * new_stride[s];
    map[idx] = target;
    for (std::size_t s = n; s-- > 0;) {
      if (++digit[s] < dims[s]) break;
      digit[s] = 0;
    }
  }
  return map;
}

}  // namespace detail

/// Reorders tensor factors: position p of the result holds old factor perm[p].
inline ComplexMatrix permute_subsystems(const ComplexMatrix& m, std::span<const std::size_t> dims,
                                        std::span<const std::size_t> perm) {
  if (!m.square() || m.rows() != detail::product(dims)) {
    throw Error(ErrorKind::DimensionMismatch, "subsystem dims do not match matrix size");
  }
  const auto map = detail::permutation_map(dims, perm);
  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(map[i], map[j]) = m(i, j);
  return out;
}

inline StateVector permute_subsystems(const StateVector& v, std::span<const std::size_t> dims,
                                      std::span<const std::size_t> perm) {
  if (v.dim() != detail::product(dims)) {
    throw Error(ErrorKind::DimensionMismatch, "subsystem dims do not match vector size");
  }
  const auto map = detail::permutation_map(dims, perm);
  StateVector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[map[i]] = v[i];
  return out;
}

namespace detail {

struct TraceLayout {
  std::size_t kept_dim = 1;
  std::size_t traced_dim = 1;
  // full index of (kept k, traced t) stored at [t * kept_dim + k]
  std::vector<std::size_t> full_index;
};

inline TraceLayout trace_layout(std::span<const std::size_t> dims, std::span<const std::size_t> keep) {
  const std::size_t n = dims.size();
  std::vector<bool> kept(n, false);
  for (auto k : keep) {
    if (k >= n) throw Error(ErrorKind::InvalidArgument, "kept subsystem index out of range");
    kept[k] = true;
  }
  TraceLayout layout;
  for (std::size_t s = 0; s < n; ++s) (kept[s] ? layout.kept_dim : layout.traced_dim) *= dims[s];
  const std::size_t total = product(dims);
  layout.full_index.resize(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t k = 0;
    std::size_t t = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (kept[s]) {
        k = k * dims[s] + digit[s];
      } else {
        t = t * dims[s] + digit[s];
      }
    }
    layout.full_index[t * layout.kept_dim + k] = idx;
    for (std::size_t s = n; s-- > 0;) {
      if (++digit[s] < dims[s]) break;
      digit[s] = 0;
    }
  }
  return layout;
}

}  // namespace detail

/// Reduced operator on the kept subsystems (in ascending subsystem order).
inline ComplexMatrix partial_trace(const ComplexMatrix& m, std::span<const std::size_t> dims,
                                   std::span<const std::size_t> keep) {
  if (!m.square()) throw Error(ErrorKind::DimensionMismatch, "partial trace of non-square matrix");
  if (detail::product(dims) != m.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "product of dims " + std::to_string(detail::product(dims)) +
                                                  " != matrix size " + std::to_string(m.rows()));
  }
  const auto layout = detail::trace_layout(dims, keep);
  const std::size_t kd = layout.kept_dim;
  ComplexMatrix out(kd, kd);
  for (std::size_t t = 0; t < layout.traced_dim; ++t) {
    const std::size_t* idx = &layout.full_index[t * kd];
    for (std::size_t a = 0; a < kd; ++a)
      for (std::size_t b = 0; b < kd; ++b) out(a, b) += m(idx[a], idx[b]);
  }
  return out;
}

/// Reduced density matrix of the pure state |v⟩⟨v| without forming the projector.
inline ComplexMatrix partial_trace(const StateVector& v, std::span<const std::size_t> dims,
                                   std::span<const std::size_t> keep) {
  if (detail::product(dims) != v.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "product of dims != vector size");
  }
  const auto layout = detail::trace_layout(dims, keep);
  const std::size_t kd = layout.kept_dim;
  ComplexMatrix out(kd, kd);
  for (std::size_t t = 0; t < layout.traced_dim; ++t) {
    const std::size_t* idx = &layout.full_index[t * kd];
    for (std::size_t a = 0; a < kd; ++a) {
      const cplx va = v[idx[a]];
      if (va == cplx{0.0, 0.0}) continue;
      for (std::size_t b = 0; b < kd; ++b) out(a, b) += va * std::conj(v[idx[b]]);
    }
  }
  return out;
}

}  // namespace dikey
