#pragma once

// Local (hidden-variable) correlations: deterministic strategies as the
// vertices of the local polytope, local bounds of Bell functionals, and the
// ℓ₁ distance from a correlation to the polytope by linear programming.
//
// ℓ₁ is the unnormalized entrywise sum over the whole (a,b,x,y) tensor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "dikey/construction.hpp"
#include "dikey/error.hpp"
#include "dikey/keyrate.hpp"
#include "dikey/simplex.hpp"

namespace dikey {

inline constexpr std::uint64_t kDefaultVertexCap = 1'000'000;

struct DeterministicStrategy {
  std::vector<std::size_t> alice_assignment;  // outcome per Alice setting
  std::vector<std::size_t> bob_assignment;    // outcome per Bob setting

  bool operator==(const DeterministicStrategy&) const = default;
};

/// Π_x k_A(x) · Π_y k_B(y), saturating at uint64 max.
inline std::uint64_t vertex_count(const Scenario& s) {
  std::uint64_t n = 1;
  auto mul = [&](std::size_t k) {
    if (n > std::numeric_limits<std::uint64_t>::max() / k) {
      n = std::numeric_limits<std::uint64_t>::max();
    } else {
      n *= k;
    }
  };
  for (auto k : s.alice_outcomes) mul(k);
  for (auto k : s.bob_outcomes) mul(k);
  return n;
}

inline void require_vertex_cap(const Scenario& s, std::uint64_t cap) {
  const std::uint64_t n = vertex_count(s);
  if (n > cap) {
    const std::string count = n == std::numeric_limits<std::uint64_t>::max() ? "more than 2^64" : std::to_string(n);
    throw Error(ErrorKind::VertexCapExceeded, "scenario has " + count + " deterministic strategies, cap is " + std::to_string(cap));
  }
}

/// Decodes vertex `index` as a mixed-radix number; the last Bob setting is
/// the fastest-varying digit.
inline DeterministicStrategy vertex_at(const Scenario& s, std::uint64_t index) {
  DeterministicStrategy v;
  v.alice_assignment.resize(s.alice_settings());
  v.bob_assignment.resize(s.bob_settings());
  for (std::size_t y = s.bob_settings(); y-- > 0;) {
    v.bob_assignment[y] = index % s.bob_outcomes[y];
    index /= s.bob_outcomes[y];
  }
  for (std::size_t x = s.alice_settings(); x-- > 0;) {
    v.alice_assignment[x] = index % s.alice_outcomes[x];
    index /= s.alice_outcomes[x];
  }
  return v;
}

/// Lazy range over every deterministic strategy of a scenario, in index order.
class VertexRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = DeterministicStrategy;
    using difference_type = std::ptrdiff_t;
    using pointer = const DeterministicStrategy*;
    using reference = const DeterministicStrategy&;

    iterator() = default;
    iterator(std::shared_ptr<const Scenario> s, std::uint64_t index, std::uint64_t end)
        : s_(std::move(s)), index_(index) {
      if (index_ < end) current_ = vertex_at(*s_, index_);
    }

    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    std::uint64_t index() const noexcept { return index_; }

    iterator& operator++() {
      ++index_;
      // odometer increment from the fastest digit
      for (std::size_t y = current_.bob_assignment.size(); y-- > 0;) {
        if (++current_.bob_assignment[y] < s_->bob_outcomes[y]) return *this;
        current_.bob_assignment[y] = 0;
      }
      for (std::size_t x = current_.alice_assignment.size(); x-- > 0;) {
        if (++current_.alice_assignment[x] < s_->alice_outcomes[x]) return *this;
        current_.alice_assignment[x] = 0;
      }
      return *this;
    }
    void operator++(int) { ++*this; }

    bool operator==(const iterator& o) const noexcept { return index_ == o.index_; }

   private:
    std::shared_ptr<const Scenario> s_;  // keeps the scenario alive past the range
    std::uint64_t index_ = 0;
    DeterministicStrategy current_;
  };

  VertexRange(Scenario s, std::uint64_t cap) : s_(std::make_shared<const Scenario>(std::move(s))) {
    s_->validate();
    require_vertex_cap(*s_, cap);
    count_ = vertex_count(*s_);
  }

  std::uint64_t size() const noexcept { return count_; }
  const Scenario& scenario() const noexcept { return *s_; }
  iterator begin() const { return iterator(s_, 0, count_); }
  iterator end() const { return iterator(s_, count_, count_); }

 private:
  std::shared_ptr<const Scenario> s_;
  std::uint64_t count_ = 0;
};

inline VertexRange enumerate_vertices(const Scenario& s, std::uint64_t cap = kDefaultVertexCap) {
  return VertexRange(s, cap);
}

/// The deterministic correlation p(a,b|x,y) = [a = λ_A(x)]·[b = λ_B(y)].
inline Correlation vertex_correlation(const Scenario& s, const DeterministicStrategy& v) {
  Correlation c(s);
  for (std::size_t x = 0; x < s.alice_settings(); ++x)
    for (std::size_t y = 0; y < s.bob_settings(); ++y) c(v.alice_assignment[x], v.bob_assignment[y], x, y) = 1.0;
  return c;
}

/// Coefficients c(a,b,x,y) of a linear functional on correlations.
class BellFunctional : public OutcomeTensor {
 public:
  BellFunctional() = default;
  explicit BellFunctional(Scenario s) : OutcomeTensor(std::move(s)) {}

  double evaluate(const OutcomeTensor& p) const {
    if (!(p.scenario() == scenario())) throw Error(ErrorKind::DimensionMismatch, "functional and correlation scenarios differ");
    double s = 0.0;
    for (std::size_t i = 0; i < entries(); ++i) s += values()[i] * p.values()[i];
    return s;
  }

  double evaluate(const DeterministicStrategy& v) const {
    const auto& s = scenario();
    double total = 0.0;
    for (std::size_t x = 0; x < s.alice_settings(); ++x)
      for (std::size_t y = 0; y < s.bob_settings(); ++y) total += (*this)(v.alice_assignment[x], v.bob_assignment[y], x, y);
    return total;
  }
};

/// CHSH in probability form: c(a,b,x,y) = (−1)^{a+b+xy}; local bound 2.
inline BellFunctional chsh_functional() {
  BellFunctional f(uniform_scenario(2, 2, 2, 2));
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) f(a, b, x, y) = ((a + b + x * y) % 2 == 0) ? 1.0 : -1.0;
  return f;
}

struct LocalBound {
  double value = 0.0;
  DeterministicStrategy argmax;
  std::uint64_t vertices = 0;
};

/// Maximum of the functional over deterministic strategies (and hence over
/// the whole local polytope).
inline LocalBound local_bound(const BellFunctional& f, std::uint64_t cap = kDefaultVertexCap) {
  LocalBound out;
  out.value = -std::numeric_limits<double>::infinity();
  const auto range = enumerate_vertices(f.scenario(), cap);
  for (const auto& v : range) {
    const double val = f.evaluate(v);
    if (val > out.value) {
      out.value = val;
      out.argmax = v;
    }
  }
  out.vertices = range.size();
  return out;
}

/// Σ_{a,b,x,y} |p − q|
inline double l1_between(const OutcomeTensor& p, const OutcomeTensor& q) {
  if (!(p.scenario() == q.scenario())) throw Error(ErrorKind::DimensionMismatch, "l1 distance between different scenarios");
  double s = 0.0;
  for (std::size_t i = 0; i < p.entries(); ++i) s += std::abs(p.values()[i] - q.values()[i]);
  return s;
}

struct DistanceReport {
  double distance = 0.0;             // ℓ₁ between p and the witness local model
  double normalized_distance = 0.0;  // distance / (n_A · n_B)
  double lp_objective = 0.0;         // simplex objective (agrees with distance up to round-off)
  std::vector<std::pair<std::uint64_t, double>> weights;  // vertex index, weight
  Correlation local_model;
  std::size_t iterations = 0;
  LpStatus status = LpStatus::Optimal;
};

namespace detail {

// Columns: vertices [0, V), then s⁺_e [V, V+E), then s⁻_e [V+E, V+2E).
// Rows: one per tensor entry, plus the normalization Σ w = 1.
class LocalDistanceColumns {
 public:
  explicit LocalDistanceColumns(const Scenario& s)
      : s_(s), layout_(s), vertices_(vertex_count(s)), entries_(layout_.entries()) {}

  std::size_t rows() const { return entries_ + 1; }
  std::size_t columns() const { return vertices_ + 2 * entries_; }
  double cost(std::size_t j) const { return j < vertices_ ? 0.0 : 1.0; }

  void column(std::size_t j, SparseColumn& col) const {
    col.clear();
    if (j < vertices_) {
      const auto v = vertex_at(s_, j);
      for (std::size_t x = 0; x < s_.alice_settings(); ++x)
        for (std::size_t y = 0; y < s_.bob_settings(); ++y)
          col.emplace_back(layout_.index(v.alice_assignment[x], v.bob_assignment[y], x, y), 1.0);
      col.emplace_back(entries_, 1.0);
    } else if (j < vertices_ + entries_) {
      col.emplace_back(j - vertices_, 1.0);
    } else {
      col.emplace_back(j - vertices_ - entries_, -1.0);
    }
  }

  std::size_t vertices() const { return vertices_; }
  std::size_t entries() const { return entries_; }

 private:
  Scenario s_;
  OutcomeTensor layout_;
  std::size_t vertices_;
  std::size_t entries_;
};

}  // namespace detail

/// min_{q ∈ L} Σ |p − q| as an LP over vertex weights with a slack pair per
/// tensor entry. Starts from vertex 0 with the slacks that absorb p − p_0,
/// which is always feasible.
inline DistanceReport l1_distance_to_local(const Correlation& corr, std::uint64_t cap = kDefaultVertexCap,
                                           const SimplexOptions& opts = {}) {
  const Scenario& s = corr.scenario();
  s.validate();
  require_vertex_cap(s, cap);
  corr.validate();

  const detail::LocalDistanceColumns cols(s);
  const std::size_t e = cols.entries();
  const std::size_t nv = cols.vertices();

  std::vector<double> rhs(corr.values().begin(), corr.values().end());
  rhs.push_back(1.0);

  const Correlation start = vertex_correlation(s, vertex_at(s, 0));
  std::vector<std::size_t> basis;
  basis.reserve(e + 1);
  for (std::size_t i = 0; i < e; ++i) {
    const double diff = corr.values()[i] - start.values()[i];
    basis.push_back(diff >= 0.0 ? nv + i : nv + e + i);
  }
  basis.push_back(0);

  const LpSolution sol = revised_simplex(cols, rhs, basis, opts);
  if (sol.status == LpStatus::Unbounded) {
    throw Error(ErrorKind::InvariantViolation, "distance LP reported unbounded");
  }

  DistanceReport rep;
  rep.status = sol.status;
  rep.iterations = sol.iterations;
  rep.lp_objective = sol.objective;
  rep.local_model = Correlation(s);
  double total = 0.0;
  for (std::size_t r = 0; r < sol.basis.size(); ++r) {
    if (sol.basis[r] < nv && sol.basic_values[r] > 0.0) {
      rep.weights.emplace_back(sol.basis[r], sol.basic_values[r]);
      total += sol.basic_values[r];
    }
  }
  std::sort(rep.weights.begin(), rep.weights.end());
  for (auto& [idx, w] : rep.weights) {
    w /= total;
    const auto v = vertex_at(s, idx);
    for (std::size_t x = 0; x < s.alice_settings(); ++x)
      for (std::size_t y = 0; y < s.bob_settings(); ++y) rep.local_model(v.alice_assignment[x], v.bob_assignment[y], x, y) += w;
  }
  rep.distance = l1_between(corr, rep.local_model);
  rep.normalized_distance = rep.distance / static_cast<double>(s.alice_settings() * s.bob_settings());
  return rep;
}

}  // namespace dikey
