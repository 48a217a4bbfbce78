// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dikey/dikey.hpp"

using namespace dikey;

namespace {

const std::vector<std::size_t> kDims = {2, 3, 4, 5, 6};
const std::vector<double> kEps = {0.1, 0.3, 0.5, 0.7, 0.9};

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Tracks the worst value seen for a quantity that must stay below a bound.
struct Worst {
  double value = 0.0;
  std::string where;

  void see(double v, const std::string& at) {
    if (!(v <= value)) {
      value = v;
      where = at;
    }
  }
};

std::string at(std::size_t d, double eps, std::uint64_t seed = 0) {
  std::ostringstream s;
  s << "d=" << d << " eps=" << eps;
  if (seed != 0) s << " seed=" << seed;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Verdict key_rate_reproduction() {
  Worst dev;
  int failures = 0;
  for (auto d : kDims)
    for (double eps : kEps) {
      cli::CertifyOptions opt;
      opt.d = d;
      opt.epsilon = eps;
      std::ostringstream out, err;
      if (cli::cmd_certify(opt, "", cli::Format::Json, out, err) != cli::kOk) ++failures;
      const double rate = json::parse(out.str()).at("key_rate").at("dw_rate").get<double>();
      dev.see(std::abs(rate - std::log2(static_cast<double>(d))), at(d, eps));
    }
  return {failures == 0 && dev.value <= 1e-8,
          "max |dw_rate - log2 d| = " + sci(dev.value) + " (" + dev.where + "), certify failures = " + std::to_string(failures)};
}

Verdict privacy_pinning() {
  Worst dev;
  Worst product;
  for (auto d : kDims)
    for (double eps : kEps)
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto rep = devetak_winter(dilate(ideal_realization(d, eps), 2, 2, seed));
        dev.see(std::abs(rep.h_a_given_e - std::log2(static_cast<double>(d))), at(d, eps, seed));
        product.see(rep.product_form_residual, at(d, eps, seed));
      }
  return {dev.value <= 1e-8 && product.value <= 1e-8,
          "125 instances, max |H(A|E) - log2 d| = " + sci(dev.value) + ", max product-form residual = " + sci(product.value) +
              " (" + product.where + ")"};
}

Verdict selftest_identities() {
  Worst worst;
  for (auto d : kDims)
    for (double eps : kEps)
      for (bool dilated : {false, true}) {
        const auto ideal = ideal_realization(d, eps);
        const auto r = dilated ? dilate(ideal, 2, 2, 17) : ideal;
        const auto o = overlap_direct(d, eps);
        const auto iso = build_isometries(r, o, 0);
        const auto me = verify_measurement_extraction(iso, r.alice[0]);
        const auto bp = verify_bob_projection(iso);
        const std::string where = at(d, eps) + (dilated ? " dilated" : "");
        worst.see(check_relations(r.alice[0], r.alice[1], o).max_residual(), where + " relations");
        worst.see(me.residual, where + " measurement");
        worst.see(me.anchor_projector_deviation, where + " A~");
        worst.see(bp.residual, where + " bob projection");
        worst.see(max_abs_diff(bp.b_tilde, r.bob_hats[0][d - 1]), where + " B~");
        worst.see(verify_state_extraction(iso, r.state, d).residual, where + " state");
        worst.see(verify_matrix_selftest(r, iso).residual, where + " matrix form");
      }

  // negative controls
  const auto r = ideal_realization(3, 0.3);
  ComplexMatrix rot = ComplexMatrix::identity(3);
  rot(0, 0) = std::cos(0.1);
  rot(0, 1) = -std::sin(0.1);
  rot(1, 0) = std::sin(0.1);
  rot(1, 1) = std::cos(0.1);
  const double perturbed = check_relations(r.alice[0], r.alice[1].conjugated_by(rot), overlap_direct(3, 0.3)).max_residual();

  const auto q2 = ideal_realization(2, 0.5);
  auto smear = [](const Povm& p) {
    std::vector<ComplexMatrix> e;
    for (std::size_t a = 0; a < p.outcomes(); ++a) e.push_back(0.8 * p[a] + 0.1 * ComplexMatrix::identity(p.dim()));
    return Povm(std::move(e));
  };
  const auto iso_bad = build_isometries(q2.alice[0], q2.alice[1], smear(q2.bob_hats[0]), smear(q2.bob_hats[1]),
                                        overlap_direct(2, 0.5), 0);
  const double non_projective = verify_bob_projection(iso_bad).residual;

  return {worst.value <= 1e-8 && perturbed > 1e-3 && non_projective > 1e-3,
          "worst residual " + sci(worst.value) + " (" + worst.where + "); perturbed Q " + sci(perturbed) +
              ", non-projective hats " + sci(non_projective)};
}

Verdict overlap_agreement() {
  Rng rng(2024);
  std::uniform_int_distribution<std::size_t> dim(2, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Worst diff;
  double min_entry = INFINITY;
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = dim(rng);
    double eps = unit(rng);
    while (eps == 0.0) eps = unit(rng);
    const auto direct = overlap_direct(d, eps);
    const auto closed = overlap_closed_form(d, eps);
    for (std::size_t i = 0; i < d * d; ++i) diff.see(std::abs(direct.entries()[i] - closed.entries()[i]), at(d, eps));
    min_entry = std::min(min_entry, direct.min_entry());
  }
  return {diff.value <= 1e-10 && min_entry > 0.0,
          "200 samples, max |direct - closed| = " + sci(diff.value) + ", smallest entry " + sci(min_entry)};
}

Verdict vanishing_nonlocality() {
  const auto plugin = load_measurements(std::string(DIKEY_SAMPLES_DIR) + "/bob_plugin_d2.json");
  bool ok = true;
  std::string detail;
  for (bool with_plugin : {false, true}) {
    const std::vector<Povm> extra = with_plugin ? plugin : std::vector<Povm>{};
    const auto p0 = born_correlation(ideal_realization(2, 0.0, extra));
    const double d0 = l1_distance_to_local(p0).distance;
    ok = ok && d0 <= 1e-9;
    double previous = INFINITY;
    Worst slack;  // distance − l1, must stay ≤ 0
    slack.value = -INFINITY;
    for (int k = 1; k <= 6; ++k) {
      const double eps = std::pow(10.0, -k);
      const auto p = born_correlation(ideal_realization(2, eps, extra));
      const double l1 = l1_between(p, p0);
      const double dist = l1_distance_to_local(p).distance;
      ok = ok && l1 < previous && l1 < 10.0 * eps && dist <= l1 + 1e-9;  // LP accuracy, as for p_0
      slack.see(dist - l1, at(2, eps));
      previous = l1;
    }
    detail += std::string(with_plugin ? "plugin" : "key-only") + ": d(p_0) = " + sci(d0) + ", l1 at 1e-6 = " + sci(previous) +
              ", max(distance - l1) = " + sci(slack.value) + (with_plugin ? "" : "; ");
  }
  return {ok, detail};
}

Verdict lp_sanity() {
  const auto chsh = local_bound(chsh_functional());
  Correlation pr(uniform_scenario(2, 2, 2, 2));
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) pr(a, b, x, y) = ((a ^ b) == x * y) ? 0.5 : 0.0;
  const double pr_distance = l1_distance_to_local(pr).distance;
  double worst_vertex = 0.0;
  const Scenario s = uniform_scenario(2, 2, 2, 2);
  for (const auto& v : enumerate_vertices(s)) worst_vertex = std::max(worst_vertex, l1_distance_to_local(vertex_correlation(s, v)).distance);
  return {chsh.value == 2.0 && pr_distance > 0.4 && worst_vertex <= 1e-9,
          "CHSH local bound " + sci(chsh.value) + ", PR distance " + sci(pr_distance) + ", worst vertex distance " + sci(worst_vertex)};
}

Povm random_basis(std::size_t d, Rng& rng) {
  const ComplexMatrix u = random_unitary(d, rng);
  std::vector<StateVector> cols;
  for (std::size_t c = 0; c < d; ++c) {
    StateVector v(d);
    for (std::size_t r = 0; r < d; ++r) v[r] = u(r, c);
    cols.push_back(v);
  }
  return Povm::from_basis(cols);
}

Verdict entropy_properties() {
  Rng rng(7);
  Worst additivity;
  Worst independence;
  double lowest = INFINITY;
  double above_max = -INFINITY;
  for (int t = 0; t < 100; ++t) {
    const std::size_t da = 2 + static_cast<std::size_t>(t % 3);
    const std::size_t db = 2 + static_cast<std::size_t>((t / 3) % 2);
    const auto rho = random_density_matrix(da, rng);
    const auto sigma = random_density_matrix(db, rng);
    additivity.see(std::abs(von_neumann_entropy(kron(rho, sigma)) - von_neumann_entropy(rho) - von_neumann_entropy(sigma)),
                   std::to_string(t));

    Realization r;
    r.dim_a = da;
    r.dim_b = db;
    r.state = random_density_matrix(da * db, rng, 1 + static_cast<std::size_t>(t % 4));
    r.alice = {random_basis(da, rng)};
    r.bob = {random_basis(db, rng)};
    const auto psi = purify(r.state);
    const std::size_t env = environment_dim(psi, da * db);
    const auto wide = kron(ComplexMatrix::identity(da * db), random_isometry(env + 2, env, rng)) * psi;
    const double h = h_a_given_e(sigma_ae(r, psi));
    independence.see(std::abs(h - h_a_given_e(sigma_ae(r, wide))), std::to_string(t));
    lowest = std::min(lowest, h);
    above_max = std::max(above_max, h - std::log2(static_cast<double>(da)));
  }
  return {additivity.value <= 1e-9 && independence.value <= 1e-8 && lowest >= -1e-9 && above_max <= 1e-9,
          "100 instances, additivity " + sci(additivity.value) + ", purification spread " + sci(independence.value) +
              ", min H(A|E) " + sci(lowest) + ", max H(A|E) - log2 k " + sci(above_max)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "key-rate reproduction", 5, key_rate_reproduction},
      {2, "privacy pinning", 60, privacy_pinning},
      {3, "self-test identity suite", 60, selftest_identities},
      {4, "overlap closed form", 5, overlap_agreement},
      {5, "vanishing non-locality", 120, vanishing_nonlocality},
      {6, "LP oracle sanity", 5, lp_sanity},
      {7, "entropy property suite", 60, entropy_properties},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s criterion %d (%s): %s; %.2f s of %.0f s budget%s\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                secs, c.budget_s, in_time ? "" : " EXCEEDED");
  }
  return failed == 0 ? 0 : 1;
}
