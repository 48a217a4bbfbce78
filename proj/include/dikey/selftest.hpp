#pragma once

// Algebraic self-testing checks: the overlap relations between Alice's two
// measurements, the explicit local isometries built from them, and the
// identities those isometries must satisfy on states and measurements.
//
// Isometry outputs are ordered (C^d, primed copy). After V_A ⊗ V_B the
// joint order (C^d_A, A', C^d_B, B') is permuted to (C^d_A, C^d_B, A', B')
// so that φ⁺_d sits on the leading pair.
//
// State-level identities are checked in vector form: ρ is factored as
// Σ_i w_i w_i† and every operator difference is an outer-product sum whose
// Frobenius norm comes from small Gram matrices. This keeps the dilated
// d = 6 instances (5184-dimensional output spaces) cheap and avoids
// cancellation between large terms.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "dikey/construction.hpp"
#include "dikey/error.hpp"
#include "dikey/linalg.hpp"
#include "dikey/spectral.hpp"

namespace dikey {

struct RelationReport {
  double max_residual_pqp = 0.0;  // max_jk ‖P_j Q_k P_j − O_jk² P_j‖_max
  double max_residual_qpq = 0.0;  // max_jk ‖Q_k P_j Q_k − O_jk² Q_k‖_max
  double projectivity_residual = 0.0;
  std::size_t d = 0;
  std::vector<double> pair_residuals;  // [j*d + k], max of both relations

  double max_residual() const {
    return std::max({max_residual_pqp, max_residual_qpq, projectivity_residual});
  }
};

inline RelationReport check_relations(const Povm& p, const Povm& q, const OverlapMatrix& o) {
  if (p.dim() != q.dim() || p.outcomes() != q.outcomes() || p.outcomes() != o.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "relations need two d-outcome measurements on one space and a d x d overlap");
  }
  const std::size_t d = o.dim();
  RelationReport rep;
  rep.d = d;
  rep.pair_residuals.assign(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double o2 = o(j, k) * o(j, k);
      const double pqp = max_abs_diff(p[j] * q[k] * p[j], o2 * p[j]);
      const double qpq = max_abs_diff(q[k] * p[j] * q[k], o2 * q[k]);
      rep.max_residual_pqp = std::max(rep.max_residual_pqp, pqp);
      rep.max_residual_qpq = std::max(rep.max_residual_qpq, qpq);
      rep.pair_residuals[j * d + k] = std::max(pqp, qpq);
    }
  }
  rep.projectivity_residual = std::max(p.projectivity_residual(), q.projectivity_residual());
  return rep;
}

struct IsometryPair {
  ComplexMatrix v_a;  // H_A → C^d ⊗ H_A'
  ComplexMatrix v_b;  // H_B → C^d ⊗ H_B'
  std::size_t anchor = 0;
  std::size_t d = 0;

  std::size_t dim_a() const noexcept { return v_a.cols(); }
  std::size_t dim_b() const noexcept { return v_b.cols(); }
};

inline constexpr double kDefaultOverlapThreshold = 1e-6;

namespace detail {

// (1/O_{d−1,j}) Σ_k (1/O_kj) |k⟩ ⊗ P_{d−1} Q_j P_k
inline ComplexMatrix isometry_from(const Povm& p, const Povm& q, const OverlapMatrix& o, std::size_t j) {
  const std::size_t d = o.dim();
  const std::size_t n = p.dim();
  const ComplexMatrix head = p[d - 1] * q[j];
  ComplexMatrix v(d * n, n);
  for (std::size_t k = 0; k < d; ++k) {
    ComplexMatrix blk = head * p[k];
    blk *= 1.0 / (o(d - 1, j) * o(k, j));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) v(k * n + r, c) = blk(r, c);
  }
  return v;
}

}  // namespace detail

/// Builds V_A from Alice's (P, Q) and V_B from the hatted pair (P̂, Q̂) for
/// anchor column j. Every O_kj must exceed `threshold`; the 1/O_kj factors
/// are singular at ε ∈ {0, 1}.
inline IsometryPair build_isometries(const Povm& p, const Povm& q, const Povm& p_hat, const Povm& q_hat,
                                     const OverlapMatrix& o, std::size_t anchor,
                                     double threshold = kDefaultOverlapThreshold) {
  const std::size_t d = o.dim();
  if (p.outcomes() != d || q.outcomes() != d || p_hat.outcomes() != d || q_hat.outcomes() != d) {
    throw Error(ErrorKind::DimensionMismatch, "isometries need d-outcome measurements");
  }
  if (p.dim() != q.dim() || p_hat.dim() != q_hat.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "measurement pair lives on different spaces");
  }
  if (anchor >= d) throw Error(ErrorKind::InvalidArgument, "anchor index out of range");
  for (std::size_t k = 0; k < d; ++k) {
    if (!(o(k, anchor) > threshold)) {
      throw Error(ErrorKind::NearZeroOverlap, "O(" + std::to_string(k) + "," + std::to_string(anchor) + ") = " +
                                                   fmt_real(o(k, anchor)) + " <= threshold " +
                                                   fmt_real(threshold));
    }
  }
  IsometryPair iso;
  iso.v_a = detail::isometry_from(p, q, o, anchor);
  iso.v_b = detail::isometry_from(p_hat, q_hat, o, anchor);
  iso.anchor = anchor;
  iso.d = d;
  return iso;
}

/// Isometries for a realization whose Alice settings 0/1 are (P, Q) and
/// whose bob_hats hold (P̂, Q̂).
inline IsometryPair build_isometries(const Realization& real, const OverlapMatrix& o, std::size_t anchor,
                                     double threshold = kDefaultOverlapThreshold) {
  if (real.alice.size() < 2 || real.bob_hats.size() != 2) {
    throw Error(ErrorKind::InvalidArgument, "realization lacks the two Alice settings or Bob's reference pair");
  }
  return build_isometries(real.alice[0], real.alice[1], real.bob_hats[0], real.bob_hats[1], o, anchor, threshold);
}

/// max(‖V_A†V_A − I‖_max, ‖V_B†V_B − I‖_max)
inline double isometry_residual(const IsometryPair& iso) {
  return std::max(max_abs_diff(iso.v_a.adjoint() * iso.v_a, ComplexMatrix::identity(iso.dim_a())),
                  max_abs_diff(iso.v_b.adjoint() * iso.v_b, ComplexMatrix::identity(iso.dim_b())));
}

struct MeasurementExtraction {
  double residual = 0.0;                  // max_a ‖V_A P_a V_A† − |a⟩⟨a| ⊗ Ã‖_max
  ComplexMatrix a_tilde;                  // read off the (0,0) block of V_A P_0 V_A†
  double anchor_projector_deviation = 0;  // ‖Ã − P_{d−1}‖_max
};

inline MeasurementExtraction verify_measurement_extraction(const IsometryPair& iso, const Povm& p) {
  const std::size_t d = iso.d;
  const std::size_t n = iso.dim_a();
  if (p.dim() != n || p.outcomes() != d) throw Error(ErrorKind::DimensionMismatch, "measurement does not match V_A");
  MeasurementExtraction out;
  const ComplexMatrix vd = iso.v_a.adjoint();
  std::vector<ComplexMatrix> images;
  images.reserve(d);
  for (std::size_t a = 0; a < d; ++a) images.push_back(iso.v_a * p[a] * vd);
  out.a_tilde = images[0].block(0, 0, n, n);
  for (std::size_t a = 0; a < d; ++a) {
    const ComplexMatrix expected = kron(StateVector::basis(d, a).projector(), out.a_tilde);
    out.residual = std::max(out.residual, max_abs_diff(images[a], expected));
  }
  out.anchor_projector_deviation = max_abs_diff(out.a_tilde, p[d - 1]);
  return out;
}

struct BobProjection {
  double residual = 0.0;  // ‖V_B V_B† − I ⊗ B̃‖_max
  ComplexMatrix b_tilde;  // (0,0) block of V_B V_B†
};

inline BobProjection verify_bob_projection(const IsometryPair& iso) {
  const std::size_t n = iso.dim_b();
  BobProjection out;
  const ComplexMatrix vv = iso.v_b * iso.v_b.adjoint();
  out.b_tilde = vv.block(0, 0, n, n);
  out.residual = max_abs_diff(vv, kron(ComplexMatrix::identity(iso.d), out.b_tilde));
  return out;
}

namespace detail {

/// ‖Σ_i a_i b_i†‖_F computed from Gram matrices.
inline double outer_sum_frobenius(const std::vector<std::pair<StateVector, StateVector>>& terms) {
  const std::size_t m = terms.size();
  std::vector<cplx> ga(m * m);
  std::vector<cplx> gb(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      ga[i * m + j] = inner(terms[i].first, terms[j].first);
      gb[i * m + j] = inner(terms[i].second, terms[j].second);
    }
  // tr(X†X) with X = Σ a_i b_i† equals Σ_ij ⟨a_i|a_j⟩⟨b_j|b_i⟩
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) s += ga[i * m + j] * gb[j * m + i];
  return std::sqrt(std::max(0.0, s.real()));
}

/// Columns w_i with ρ = Σ_i w_i w_i†, from the spectrum of ρ.
inline std::vector<StateVector> factor_state(const ComplexMatrix& rho) {
  const Spectrum s = hermitian_eigen(rho);
  const double cutoff = 1e-14 * std::max(1.0, s.eigenvalues.front());
  std::vector<StateVector> out;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    if (s.eigenvalues[i] <= cutoff) break;
    StateVector w = s.eigenvector(i);
    w *= std::sqrt(s.eigenvalues[i]);
    out.push_back(std::move(w));
  }
  return out;
}

/// (L ⊗ R)|w⟩ for w on H_A ⊗ H_B, i.e. L·W·Rᵀ on the reshaped vector.
inline StateVector apply_local(const ComplexMatrix& left, const ComplexMatrix& right, const StateVector& w) {
  const std::size_t na = left.cols();
  const std::size_t nb = right.cols();
  if (w.dim() != na * nb) throw Error(ErrorKind::DimensionMismatch, "local operator does not match state");
  ComplexMatrix wm(na, nb, std::vector<cplx>(w.amplitudes().begin(), w.amplitudes().end()));
  const ComplexMatrix t = left * wm * right.transpose();
  return StateVector(std::vector<cplx>(t.entries().begin(), t.entries().end()));
}

/// Vector picture of (V_A⊗V_B)ρ(V_A⊗V_B)†: one transformed column per
/// factor of ρ, its φ⁺-component and its junk vector.
struct TransformedState {
  std::size_t d = 0;
  std::size_t junk_dim = 0;             // dim A' · dim B'
  std::vector<StateVector> factors;     // w_i
  std::vector<StateVector> transformed; // t_i in order (C^d_A, C^d_B, A', B')
  std::vector<StateVector> junk;        // s_i = (⟨φ⁺| ⊗ I) t_i
  std::vector<StateVector> aligned;     // z_i = |φ⁺⟩ ⊗ s_i
};

inline StateVector reorder_output(const StateVector& t, std::size_t d, std::size_t na, std::size_t nb) {
  const std::size_t dims[4] = {d, na, d, nb};
  const std::size_t perm[4] = {0, 2, 1, 3};
  return permute_subsystems(t, dims, perm);
}

inline StateVector project_out_phi(const StateVector& t, std::size_t d, std::size_t junk_dim) {
  StateVector s(junk_dim);
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t j = 0; j < junk_dim; ++j) s[j] += a * t[(k * d + k) * junk_dim + j];
  return s;
}

inline TransformedState transform_state(const IsometryPair& iso, const ComplexMatrix& rho) {
  const std::size_t na = iso.dim_a();
  const std::size_t nb = iso.dim_b();
  if (!rho.square() || rho.rows() != na * nb) {
    throw Error(ErrorKind::DimensionMismatch, "state does not match isometry input spaces");
  }
  TransformedState ts;
  ts.d = iso.d;
  ts.junk_dim = na * nb;
  ts.factors = factor_state(rho);
  const StateVector phi = max_entangled(iso.d);
  for (const auto& w : ts.factors) {
    StateVector t = reorder_output(apply_local(iso.v_a, iso.v_b, w), iso.d, na, nb);
    StateVector s = project_out_phi(t, iso.d, ts.junk_dim);
    ts.aligned.push_back(kron(phi, s));
    ts.transformed.push_back(std::move(t));
    ts.junk.push_back(std::move(s));
  }
  return ts;
}

inline ComplexMatrix gram_sum(const std::vector<StateVector>& vs, std::size_t dim) {
  ComplexMatrix out(dim, dim);
  for (const auto& v : vs) out += v.projector();
  return out;
}

}  // namespace detail

struct StateExtraction {
  double residual = 0.0;  // ‖(V_A⊗V_B)ρ(V_A⊗V_B)† − φ⁺⟨φ⁺| ⊗ σ‖_F
  ComplexMatrix sigma;    // σ_{A'B'}, trace-normalized
  double sigma_trace = 0.0;
  std::size_t sigma_rank = 0;  // eigenvalues above 1e-9
};

/// Fits (V_A⊗V_B)ρ(V_A⊗V_B)† by |φ⁺_d⟩⟨φ⁺_d| ⊗ σ_{A'B'}, with σ obtained by
/// the partial inner product against φ⁺_d, and reports the Frobenius residual.
inline StateExtraction verify_state_extraction(const IsometryPair& iso, const ComplexMatrix& rho, std::size_t d) {
  if (d != iso.d) throw Error(ErrorKind::DimensionMismatch, "target dimension differs from the isometries'");
  const auto ts = detail::transform_state(iso, rho);
  std::vector<std::pair<StateVector, StateVector>> terms;
  for (std::size_t i = 0; i < ts.factors.size(); ++i) {
    const StateVector r = ts.transformed[i] - ts.aligned[i];
    // t t† − z z† = z r† + r t†  with r = t − z
    terms.emplace_back(ts.aligned[i], r);
    terms.emplace_back(r, ts.transformed[i]);
  }
  StateExtraction out;
  out.residual = detail::outer_sum_frobenius(terms);
  ComplexMatrix sigma = detail::gram_sum(ts.junk, ts.junk_dim);
  out.sigma_trace = sigma.trace().real();
  if (out.sigma_trace > 0.0) sigma *= 1.0 / out.sigma_trace;
  for (double lam : hermitian_eigen(sigma).eigenvalues)
    if (lam > 1e-9) ++out.sigma_rank;
  out.sigma = std::move(sigma);
  return out;
}

struct MatrixSelfTest {
  double residual = 0.0;           // max_a Frobenius residual of the matrix-form identity
  double junk_state_defect = 0.0;  // distance of (Ã⊗B̃)σ from being PSD with unit trace
  std::vector<double> marginals;   // tr of the left side for each a
  ComplexMatrix junk_state;        // (Ã⊗B̃)σ_{A'B'}
};

/// Checks, for every outcome a of Alice's key setting,
///   (V_A⊗V_B)(A_a⊗I)ρ(V_A⊗V_B)† = (|a⟩⟨a|⊗I)|φ⁺⟩⟨φ⁺| ⊗ (Ã⊗B̃)σ_{A'B'}
/// and that (Ã⊗B̃)σ_{A'B'} is itself a density matrix.
inline MatrixSelfTest verify_matrix_selftest(const Realization& real, const IsometryPair& iso) {
  const std::size_t d = iso.d;
  const std::size_t na = iso.dim_a();
  const std::size_t nb = iso.dim_b();
  if (real.dim_a != na || real.dim_b != nb) throw Error(ErrorKind::DimensionMismatch, "realization vs isometries");
  if (real.key_alice >= real.alice.size()) throw Error(ErrorKind::InvalidArgument, "no key setting");
  const Povm& key = real.alice[real.key_alice];
  if (key.outcomes() != d) throw Error(ErrorKind::DimensionMismatch, "key setting must have d outcomes");

  const ComplexMatrix a_tilde = verify_measurement_extraction(iso, key).a_tilde;
  const ComplexMatrix b_tilde = verify_bob_projection(iso).b_tilde;
  const ComplexMatrix tilde = kron(a_tilde, b_tilde);
  const auto ts = detail::transform_state(iso, real.state);

  MatrixSelfTest out;
  out.junk_state = tilde * detail::gram_sum(ts.junk, ts.junk_dim);

  std::vector<StateVector> tilde_junk;
  for (const auto& s : ts.junk) tilde_junk.push_back(tilde * s);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t a = 0; a < d; ++a) {
    StateVector aa = StateVector::basis(d * d, a * d + a);
    aa *= inv_sqrt_d;
    const ComplexMatrix va_a = iso.v_a * key[a];
    std::vector<std::pair<StateVector, StateVector>> terms;
    cplx trace{0.0, 0.0};
    for (std::size_t i = 0; i < ts.factors.size(); ++i) {
      const StateVector x = detail::reorder_output(detail::apply_local(va_a, iso.v_b, ts.factors[i]), d, na, nb);
      const StateVector y = kron(aa, tilde_junk[i]);
      trace += inner(ts.transformed[i], x);
      // x t† − y z† = (x − y) t† + y (t − z)†
      terms.emplace_back(x - y, ts.transformed[i]);
      terms.emplace_back(y, ts.transformed[i] - ts.aligned[i]);
    }
    out.residual = std::max(out.residual, detail::outer_sum_frobenius(terms));
    out.marginals.push_back(trace.real());
  }

  const ComplexMatrix& m = out.junk_state;
  ComplexMatrix herm = m + m.adjoint();
  herm *= 0.5;
  out.junk_state_defect = std::max({std::abs(m.trace() - cplx{1.0, 0.0}), hermiticity_residual(m),
                                    std::max(0.0, -min_eigenvalue(herm))});
  return out;
}

}  // namespace dikey
