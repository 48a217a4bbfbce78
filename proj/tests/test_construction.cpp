#include <cmath>
#include <numbers>
#include <random>

#include "dikey/construction.hpp"
#include "dikey/keyrate.hpp"
#include "dikey/spectral.hpp"
#include "test_util.hpp"

using namespace dikey;
using testutil::Dims;
using testutil::max_diff;

namespace {

constexpr double kPi = std::numbers::pi;

// exp(M) by scaling and squaring of a truncated Taylor series.
ComplexMatrix expm(ComplexMatrix m) {
  int squarings = 0;
  while (max_abs(m) > 0.05) {
    m *= 0.5;
    ++squarings;
  }
  const std::size_t n = m.rows();
  ComplexMatrix out = ComplexMatrix::identity(n);
  ComplexMatrix term = ComplexMatrix::identity(n);
  for (int k = 1; k <= 20; ++k) {
    term = term * m;
    term *= 1.0 / k;
    out += term;
  }
  for (int s = 0; s < squarings; ++s) out = out * out;
  return out;
}

// ⟨m|U_ε|n⟩ = (1/d) Σ_j e^{2πi j(ε + m − n)/d}, summed directly.
ComplexMatrix u_epsilon_oracle(std::size_t d, double eps) {
  ComplexMatrix u(d, d);
  for (std::size_t m = 0; m < d; ++m)
    for (std::size_t n = 0; n < d; ++n) {
      cplx s{0.0, 0.0};
      for (std::size_t j = 0; j < d; ++j) {
        const double arg = 2.0 * kPi * static_cast<double>(j) * (eps + static_cast<double>(m) - static_cast<double>(n)) / d;
        s += cplx{std::cos(arg), std::sin(arg)};
      }
      u(m, n) = s / static_cast<double>(d);
    }
  return u;
}

double u_minus_identity_norm(std::size_t d, double eps) {
  double m = 0.0;
  for (std::size_t j = 0; j < d; ++j) m = std::max(m, std::abs(std::sin(kPi * eps * j / d)));
  return 2.0 * m;
}

}  // namespace

TEST(FourierBasis, QubitSecondVectorIsMinus) {
  const auto chi = fourier_basis(2);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_LT(std::abs(chi[1][0] - cplx(s, 0)), 1e-15);
  EXPECT_LT(std::abs(chi[1][1] - cplx(-s, 0)), 1e-15);
}

TEST(FourierBasis, Orthonormal) {
  for (std::size_t d : {3u, 5u, 8u}) {
    const auto chi = fourier_basis(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) EXPECT_LT(std::abs(inner(chi[i], chi[j]) - (i == j ? 1.0 : 0.0)), 1e-12);
  }
}

TEST(FourierBasis, FlatAmplitudesInDimensionFour) {
  const auto chi = fourier_basis(4);
  for (const auto& v : chi)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(v[k]), 0.5, 1e-15);
}

TEST(FourierBasis, RejectsSmallD) {
  EXPECT_THROW_KIND(fourier_basis(1), ErrorKind::InvalidArgument);
  EXPECT_THROW_KIND(pauli_x(0), ErrorKind::InvalidArgument);
}

TEST(PauliX, QubitIsStandardX) {
  EXPECT_EQ(max_diff(pauli_x(2), ComplexMatrix(2, 2, {0.0, 1.0, 1.0, 0.0})), 0.0);
}

TEST(PauliX, CubeIsIdentityForQutrit) {
  const auto x = pauli_x(3);
  EXPECT_LT(max_diff(x * x * x, ComplexMatrix::identity(3)), 1e-12);
}

// The Fourier vectors are eigenvectors of the shift: X|χ_j⟩ = ω^{-j}|χ_j⟩.
TEST(PauliX, SpectralFormEqualsShift) {
  for (std::size_t d = 2; d <= 8; ++d) {
    const auto chi = fourier_basis(d);
    const auto x = pauli_x(d);
    ComplexMatrix minus(d, d);
    ComplexMatrix plus(d, d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto xv = x * chi[j];
      for (std::size_t k = 0; k < d; ++k) EXPECT_LT(std::abs(xv[k] - std::polar(1.0, -2.0 * kPi * j / d) * chi[j][k]), 1e-12);
      auto p = chi[j].projector();
      minus += std::polar(1.0, -2.0 * kPi * j / d) * p;
      plus += std::polar(1.0, 2.0 * kPi * j / d) * p;
    }
    EXPECT_LT(max_diff(minus, x), 1e-12) << "d=" << d;
    EXPECT_LT(max_diff(plus, x.adjoint()), 1e-12) << "d=" << d;
  }
}

TEST(PauliX, ExponentialOfGeneratorIsInverseShift) {
  for (std::size_t d = 2; d <= 6; ++d) {
    EXPECT_LT(max_diff(expm(shift_generator(d)), pauli_x(d).adjoint()), 1e-10) << "d=" << d;
  }
}

TEST(UEpsilon, EndpointsAreIdentityAndInverseShift) {
  for (std::size_t d = 2; d <= 8; ++d) {
    EXPECT_LT(max_diff(u_epsilon(d, 0.0), ComplexMatrix::identity(d)), 1e-12);
    EXPECT_LT(max_diff(u_epsilon(d, 1.0), pauli_x(d).adjoint()), 1e-12);
  }
  EXPECT_LT(max_diff(u_epsilon(2, 1.0), pauli_x(2)), 1e-12);
}

TEST(UEpsilon, QubitHalfIsUnbiased) {
  const auto u = u_epsilon(2, 0.5);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(std::norm(u(j, k)), 0.5, 1e-12);
}

TEST(UEpsilon, MatchesDirectSumAndMatrixExponential) {
  Rng rng(51);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const std::size_t d = 2 + t % 7;
    const double eps = unit(rng);
    const auto u = u_epsilon(d, eps);
    EXPECT_LT(max_diff(u, u_epsilon_oracle(d, eps)), 1e-12);
    ComplexMatrix g = shift_generator(d);
    g *= eps;
    EXPECT_LT(max_diff(u, expm(g)), 1e-10);
  }
}

TEST(UEpsilon, UnitaryOnRandomSamples) {
  Rng rng(52);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + t % 7;
    const auto u = u_epsilon(d, unit(rng));
    EXPECT_LE(max_diff(u * u.adjoint(), ComplexMatrix::identity(d)), 1e-12);
  }
}

TEST(UEpsilon, GroupLawAndSquareRootOfShift) {
  const auto a = u_epsilon(5, 0.3);
  const auto b = u_epsilon(5, 0.45);
  EXPECT_LT(max_diff(a * b, u_epsilon(5, 0.75)), 1e-12);
  const auto h = u_epsilon(4, 0.5);
  EXPECT_LT(max_diff(h * h, pauli_x(4).adjoint()), 1e-12);
}

TEST(UEpsilon, ContinuityInSpectralNorm) {
  for (std::size_t d : {2u, 3u, 6u}) {
    double prev = INFINITY;
    for (double eps : {1.0, 0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-6}) {
      const auto diff = u_epsilon(d, eps) - ComplexMatrix::identity(d);
      const double n = spectral_norm(diff);
      EXPECT_NEAR(n, u_minus_identity_norm(d, eps), 1e-10) << "d=" << d << " eps=" << eps;
      EXPECT_LT(n, prev);
      prev = n;
    }
    EXPECT_LT(prev, 1e-5);
  }
}

TEST(UEpsilon, RejectsOutOfRange) {
  EXPECT_THROW_KIND(u_epsilon(3, -0.1), ErrorKind::InvalidArgument);
  EXPECT_THROW_KIND(u_epsilon(3, 1.5), ErrorKind::InvalidArgument);
  EXPECT_THROW_KIND(u_epsilon(3, std::nan("")), ErrorKind::InvalidArgument);
}

TEST(Overlap, EpsilonZeroIsIdentity) {
  const auto o = overlap_direct(4, 0.0);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(o(j, k), j == k ? 1.0 : 0.0, 1e-12);
}

TEST(Overlap, QubitHalfClosedFormByHand) {
  // (1/4)(1 − cos π)/(1 − cos π/2) = 1/2
  const auto o = overlap_closed_form(2, 0.5);
  EXPECT_NEAR(o(0, 0) * o(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(o(1, 1) * o(1, 1), 0.5, 1e-15);
}

TEST(Overlap, QutritHalfDirectEqualsClosedForm) {
  const auto a = overlap_direct(3, 0.5);
  const auto b = overlap_closed_form(3, 0.5);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(a.entries()[i], b.entries()[i], 1e-10);
}

TEST(Overlap, DirectAndClosedFormAgreeAndArePositive) {
  Rng rng(53);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 2 + t % 7;
    double eps = unit(rng);
    if (eps == 0.0) eps = 0.5;
    const auto a = overlap_direct(d, eps);
    const auto b = overlap_closed_form(d, eps);
    for (std::size_t i = 0; i < d * d; ++i) EXPECT_NEAR(a.entries()[i], b.entries()[i], 1e-10);
    EXPECT_GT(a.min_entry(), 0.0);
    EXPECT_GT(b.min_entry(), 0.0);
    EXPECT_LE(a.stochasticity_residual(), 1e-9);
  }
}

TEST(Overlap, ClosedFormRejectsEndpoints) {
  EXPECT_THROW_KIND(overlap_closed_form(3, 0.0), ErrorKind::InvalidArgument);
  EXPECT_THROW_KIND(overlap_closed_form(3, 1.0), ErrorKind::InvalidArgument);
}

TEST(MaxEntangled, QubitAmplitudes) {
  const auto phi = max_entangled(2);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(phi[0].real(), s, 1e-15);
  EXPECT_NEAR(phi[3].real(), s, 1e-15);
  EXPECT_EQ(phi[1], cplx(0.0, 0.0));
  EXPECT_EQ(phi[2], cplx(0.0, 0.0));
}

TEST(MaxEntangled, TransposeTrick) {
  Rng rng(54);
  for (std::size_t d : {2u, 3u, 5u}) {
    const auto m = testutil::random_matrix(d, d, rng);
    const auto phi = max_entangled(d);
    const auto id = ComplexMatrix::identity(d);
    const auto lhs = kron(m, id) * phi;
    const auto rhs = kron(id, m.transpose()) * phi;
    for (std::size_t i = 0; i < d * d; ++i) EXPECT_LT(std::abs(lhs[i] - rhs[i]), 1e-12);
  }
}

TEST(IdealRealization, PovmsAreValidAndProjective) {
  for (std::size_t d = 2; d <= 6; ++d) {
    const auto r = ideal_realization(d, 0.37);
    EXPECT_NO_THROW(r.validate());
    for (const auto& p : r.alice) EXPECT_TRUE(p.is_projective(1e-12));
    for (const auto& p : r.bob) EXPECT_TRUE(p.is_projective(1e-12));
    for (const auto& p : r.bob_hats) EXPECT_TRUE(p.is_projective(1e-12));
    EXPECT_EQ(r.key_alice, 0u);
    EXPECT_EQ(r.key_bob, r.bob.size() - 1);
  }
}

TEST(IdealRealization, EpsilonZeroMakesAliceCompatible) {
  const auto r = ideal_realization(3, 0.0);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_LT(max_diff(r.alice[0][a], r.alice[1][a]), 1e-12);
}

TEST(IdealRealization, SecondSettingProjectsOntoRotatedBasis) {
  const double eps = 0.6;
  const auto u = u_epsilon_oracle(4, eps);
  const auto r = ideal_realization(4, eps);
  for (std::size_t k = 0; k < 4; ++k) {
    StateVector e(4);
    for (std::size_t i = 0; i < 4; ++i) e[i] = u(i, k);
    EXPECT_LT(max_diff(r.alice[1][k], e.projector()), 1e-12);
  }
}

TEST(IdealRealization, HatsAreConjugatesOfAlice) {
  const auto r = ideal_realization(3, 0.4);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(max_diff(r.bob_hats[x][a], r.alice[x][a].conj()), 0.0);
}

TEST(IdealRealization, KeyPairIsPerfectlyCorrelated) {
  const auto r = ideal_realization(2, 0.3);
  const auto p = born_correlation(r);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) EXPECT_NEAR(p(a, b, 0, r.key_bob), a == b ? 0.5 : 0.0, 1e-12);
}

TEST(IdealRealization, PluginSettingsComeFirst) {
  const auto extra = Povm::from_basis(fourier_basis(2));
  const auto r = ideal_realization(2, 0.5, {extra});
  ASSERT_EQ(r.bob.size(), 2u);
  EXPECT_EQ(r.key_bob, 1u);
  EXPECT_LT(max_diff(r.bob[0][1], extra[1]), 1e-15);
  EXPECT_THROW_KIND(ideal_realization(3, 0.5, {extra}), ErrorKind::DimensionMismatch);
  const Povm incomplete({testutil::projector(2, 0)});
  EXPECT_THROW_KIND(ideal_realization(2, 0.5, {incomplete}), ErrorKind::InvariantViolation);
}

TEST(Povm, ValidationCatchesBadEffects) {
  const Povm ok({testutil::projector(2, 0), testutil::projector(2, 1)});
  EXPECT_NO_THROW(ok.validate());
  const double neg[2] = {1.5, -0.5};
  const double rest[2] = {-0.5, 1.5};
  const Povm not_psd({ComplexMatrix::diagonal(neg), ComplexMatrix::diagonal(rest)});
  EXPECT_LT(not_psd.completeness_residual(), 1e-15);
  EXPECT_THROW_KIND(not_psd.validate(), ErrorKind::InvariantViolation);
  EXPECT_THROW_KIND(Povm({ComplexMatrix::identity(2), ComplexMatrix::identity(3)}), ErrorKind::DimensionMismatch);
  EXPECT_THROW_KIND(Povm(std::vector<ComplexMatrix>{}), ErrorKind::InvalidArgument);
}

TEST(Povm, NoisyKeyIsCompleteButNotProjective) {
  const auto r = with_bob_key_noise(ideal_realization(3, 0.5), 0.2);
  const auto& key = r.bob[r.key_bob];
  EXPECT_LT(key.completeness_residual(), 1e-15);
  EXPECT_FALSE(key.is_projective());
  EXPECT_THROW_KIND(with_bob_key_noise(ideal_realization(2, 0.5), 0.6), ErrorKind::InvalidArgument);
}

TEST(Dilate, TrivialJunkKeepsCorrelation) {
  const auto r = ideal_realization(3, 0.4);
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto p = born_correlation(dilate(r, 1, 1, seed));
    const auto q = born_correlation(r);
    for (std::size_t i = 0; i < p.entries(); ++i) EXPECT_NEAR(p.values()[i], q.values()[i], 1e-10);
  }
}

TEST(Dilate, QubitJunkTwoByTwoSeed42) {
  const auto r = ideal_realization(2, 0.5);
  const auto dil = dilate(r, 2, 2, 42);
  EXPECT_EQ(dil.dim_a, 4u);
  EXPECT_EQ(dil.dim_b, 4u);
  EXPECT_NO_THROW(dil.validate());
  const auto p = born_correlation(dil);
  const auto q = born_correlation(r);
  for (std::size_t i = 0; i < p.entries(); ++i) EXPECT_NEAR(p.values()[i], q.values()[i], 1e-10);
}

TEST(Dilate, StateMatchesIndependentConstruction) {
  const auto r = ideal_realization(2, 0.3);
  const auto w = dilate_with_witness(r, 2, 3, 5);
  // (A B JA JB) → (A JA B JB) by explicit index shuffling
  const std::size_t d = 2, ja = 2, jb = 3;
  const auto big = kron(r.state, w.junk);
  ComplexMatrix shuffled(big.rows(), big.cols());
  auto idx = [&](std::size_t a, std::size_t b, std::size_t x, std::size_t y) { return ((a * ja + x) * d + b) * jb + y; };
  auto old = [&](std::size_t a, std::size_t b, std::size_t x, std::size_t y) { return ((a * d + b) * ja + x) * jb + y; };
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t x = 0; x < ja; ++x)
        for (std::size_t y = 0; y < jb; ++y)
          for (std::size_t a2 = 0; a2 < d; ++a2)
            for (std::size_t b2 = 0; b2 < d; ++b2)
              for (std::size_t x2 = 0; x2 < ja; ++x2)
                for (std::size_t y2 = 0; y2 < jb; ++y2)
                  shuffled(idx(a, b, x, y), idx(a2, b2, x2, y2)) = big(old(a, b, x, y), old(a2, b2, x2, y2));
  const auto wab = kron(w.w_a, w.w_b);
  EXPECT_LT(max_diff(w.realization.state, testutil::naive_product(wab, testutil::naive_product(shuffled, wab.adjoint()))),
            1e-12);
}

TEST(Dilate, SeedDeterminesInstance) {
  const auto r = ideal_realization(2, 0.5);
  EXPECT_EQ(max_diff(dilate(r, 2, 2, 7).state, dilate(r, 2, 2, 7).state), 0.0);
  EXPECT_GT(max_diff(dilate(r, 2, 2, 7).state, dilate(r, 2, 2, 8).state), 1e-3);
}

TEST(Dilate, ReproducesIdealCorrelationForManySeeds) {
  for (std::size_t d = 2; d <= 4; ++d) {
    const auto r = ideal_realization(d, 0.25);
    const auto q = born_correlation(r);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto dil = dilate(r, 2, 2, seed);
      EXPECT_NEAR(dil.state.trace().real(), 1.0, 1e-12);
      EXPECT_GT(min_eigenvalue(dil.state), -1e-12);
      const auto p = born_correlation(dil);
      for (std::size_t i = 0; i < p.entries(); ++i) EXPECT_NEAR(p.values()[i], q.values()[i], 1e-10);
    }
  }
}

TEST(Scenario, TensorLayoutIsBlockMajor) {
  const Scenario s{{2, 3}, {4}};
  OutcomeTensor t(s);
  EXPECT_EQ(t.entries(), 2u * 4 + 3u * 4);
  EXPECT_EQ(t.index(0, 0, 1, 0), 8u);
  EXPECT_EQ(t.index(2, 3, 1, 0), 8u + 2 * 4 + 3);
  EXPECT_THROW_KIND(OutcomeTensor(Scenario{{2}, {}}), ErrorKind::InvalidArgument);
  EXPECT_THROW_KIND(OutcomeTensor(Scenario{{2, 0}, {2}}), ErrorKind::InvalidArgument);
}
