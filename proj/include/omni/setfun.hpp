#pragma once

// Set functions over a ground set {0..m-1} encoded as bitmasks, and the
// polyhedral machinery built on them: submodularity tests, duality, the
// greedy algorithm, constrained minimization and Dilworth truncation.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "omni/error.hpp"
#include "omni/value.hpp"

namespace omni::setfun {

using Mask = std::uint64_t;

inline int popcount(Mask s) { return std::popcount(s); }
inline bool contains(Mask s, int i) { return (s >> i) & 1U; }
inline Mask bit(int i) { return Mask{1} << i; }

class GroundSet {
 public:
  static constexpr int max_users = 62;

  explicit GroundSet(int m) : m_(m) {
    if (m < 1 || m > max_users) {
      throw Error(Errc::invalid_input, "ground set size must be in [1, 62], got " + std::to_string(m));
    }
  }

  int size() const noexcept { return m_; }
  Mask full() const noexcept { return (Mask{1} << m_) - 1; }
  bool valid(Mask s) const noexcept { return (s & ~full()) == 0; }
  Mask complement(Mask s) const noexcept { return full() & ~s; }

  friend bool operator==(const GroundSet&, const GroundSet&) = default;

 private:
  int m_;
};

inline std::vector<int> members(Mask s) {
  std::vector<int> out;
  while (s) {
    out.push_back(std::countr_zero(s));
    s &= s - 1;
  }
  return out;
}

/// A set function f: 2^M -> V with f(empty) = 0. Evaluation is counted so
/// solvers can report how many oracle queries they issued.
template <class V>
class SetFunction {
 public:
  using value_type = V;

  SetFunction(GroundSet ground, std::function<V(Mask)> eval)
      : ground_(ground), eval_(std::move(eval)), calls_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    if (!ValueTraits<V>::equal(eval_(0), ValueTraits<V>::zero())) {
      throw Error(Errc::invalid_input, "set function must vanish on the empty set");
    }
  }

  V operator()(Mask s) const {
    calls_->fetch_add(1, std::memory_order_relaxed);
    return eval_(s);
  }

  const GroundSet& ground() const noexcept { return ground_; }
  int size() const noexcept { return ground_.size(); }
  std::uint64_t calls() const noexcept { return calls_->load(std::memory_order_relaxed); }

 private:
  GroundSet ground_;
  std::function<V(Mask)> eval_;
  std::shared_ptr<std::atomic<std::uint64_t>> calls_;
};

/// Wraps a table indexed by subset mask (size 2^m).
template <class V>
SetFunction<V> tabulate(GroundSet ground, std::vector<V> table) {
  if (table.size() != (std::size_t{1} << ground.size())) {
    throw Error(Errc::dimension_mismatch, "table must have 2^m entries");
  }
  auto shared = std::make_shared<const std::vector<V>>(std::move(table));
  return SetFunction<V>(ground, [shared](Mask s) { return (*shared)[s]; });
}

template <class V>
V sum_over(std::span<const V> z, Mask s) {
  V acc = ValueTraits<V>::zero();
  while (s) {
    acc += z[std::countr_zero(s)];
    s &= s - 1;
  }
  return acc;
}

namespace detail {

inline void require_exhaustive(int m, int cap, const char* what) {
  if (m > cap) {
    throw Error(Errc::too_large, std::string(what) + " is exhaustive and capped at m = " + std::to_string(cap));
  }
}

// Local exchange form of the submodular inequality: for all S and distinct
// i, j outside S, f(S+i) + f(S+j) >= f(S+i+j) + f(S). Equivalent to the
// pairwise definition on the lattice being checked; nonempty_only restricts
// S to nonempty sets, which is the intersecting variant (sets sharing an
// element k form the lattice of supersets of {k}).
template <class V>
bool local_exchange_holds(const SetFunction<V>& f, bool nonempty_only) {
  using T = ValueTraits<V>;
  const int m = f.size();
  const Mask full = f.ground().full();
  std::vector<V> val(std::size_t{1} << m);
  for (Mask s = 0; s <= full; ++s) val[s] = f(s);
  for (Mask s = 0; s <= full; ++s) {
    if (nonempty_only && s == 0) continue;
    for (int i = 0; i < m; ++i) {
      if (contains(s, i)) continue;
      for (int j = i + 1; j < m; ++j) {
        if (contains(s, j)) continue;
        V lhs = val[s | bit(i)] + val[s | bit(j)];
        V rhs = val[s | bit(i) | bit(j)] + val[s];
        if (T::less(lhs, rhs)) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

template <class V>
bool is_submodular(const SetFunction<V>& f) {
  detail::require_exhaustive(f.size(), 16, "submodularity check");
  return detail::local_exchange_holds(f, false);
}

template <class V>
bool is_intersecting_submodular(const SetFunction<V>& f) {
  detail::require_exhaustive(f.size(), 16, "intersecting submodularity check");
  return detail::local_exchange_holds(f, true);
}

/// f*(S^c) = f(M) - f(S).
template <class V>
SetFunction<V> dual(const SetFunction<V>& f) {
  const GroundSet g = f.ground();
  return SetFunction<V>(g, [f, g](Mask t) { return f(g.full()) - f(g.complement(t)); });
}

enum class Order { descending, ascending };

/// Ordering of users by weight; ties go to the lower index.
template <class W>
std::vector<int> weight_order(std::span<const W> alpha, Order order) {
  std::vector<int> idx(alpha.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return order == Order::descending ? alpha[b] < alpha[a] : alpha[a] < alpha[b];
  });
  return idx;
}

template <class W>
void require_nonnegative(std::span<const W> alpha) {
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] < W(0)) {
      throw Error(Errc::negative_weight, "weight of user " + std::to_string(i + 1) + " is negative");
    }
  }
}

/// Greedy vertex of P(f) maximizing sum alpha_i Z_i for submodular f.
template <class V, class W>
std::vector<V> edmond_greedy(const SetFunction<V>& f, std::span<const W> alpha) {
  if (alpha.size() != static_cast<std::size_t>(f.size())) {
    throw Error(Errc::dimension_mismatch, "weight vector length differs from ground set size");
  }
  require_nonnegative(alpha);
#ifndef NDEBUG
  if (f.size() <= 16 && !is_submodular(f)) {
    throw Error(Errc::constraint_violation, "greedy algorithm requires a submodular function");
  }
#endif
  std::vector<V> z(f.size(), ValueTraits<V>::zero());
  Mask prefix = 0;
  V prev = ValueTraits<V>::zero();
  for (int j : weight_order(alpha, Order::descending)) {
    prefix |= bit(j);
    V cur = f(prefix);
    z[j] = cur - prev;
    prev = cur;
  }
  return z;
}

template <class V>
struct SfmResult {
  V value;
  Mask minimizer = 0;
  std::uint64_t evaluations = 0;
};

/// min { f(S) - Z(S) : j in S, S subset of A } by enumeration, returning the
/// union of all minimizers (itself a minimizer, since minimizers of a
/// submodular function on the sets containing j are closed under union).
template <class V>
SfmResult<V> sfm_constrained(const SetFunction<V>& f, std::span<const V> z, int j, Mask a) {
  using T = ValueTraits<V>;
  if (j < 0 || j >= f.size() || !contains(a, j)) {
    throw Error(Errc::constraint_violation, "user " + std::to_string(j + 1) + " is not in the constraint set");
  }
  if (!f.ground().valid(a)) throw Error(Errc::constraint_violation, "constraint set exceeds the ground set");
  detail::require_exhaustive(popcount(a), 23, "constrained minimization");
  const Mask rest = a & ~bit(j);
  SfmResult<V> best{T::zero(), 0, 0};
  bool have = false;
  Mask sub = rest;
  while (true) {
    const Mask s = sub | bit(j);
    V v = f(s) - sum_over(z, s);
    ++best.evaluations;
    if (!have || T::less(v, best.value)) {
      best.value = v;
      best.minimizer = s;
      have = true;
    } else if (T::equal(v, best.value)) {
      best.minimizer |= s;
    }
    if (sub == 0) break;
    sub = (sub - 1) & rest;
  }
  return best;
}

template <class V>
struct EdmondResult {
  std::vector<V> z;
  std::vector<int> order;
  std::vector<Mask> tight_sets;  // minimizer chosen at each step, in order
  std::uint64_t evaluations = 0;
};

/// Greedy maximization over P(f) for intersecting submodular f: each
/// coordinate is pushed to the boundary through a constrained minimization.
template <class V>
EdmondResult<V> modified_edmond(const SetFunction<V>& f, std::span<const int> order) {
  using T = ValueTraits<V>;
  EdmondResult<V> out;
  out.z.assign(f.size(), T::zero());
  out.order.assign(order.begin(), order.end());
  Mask prefix = 0;
  for (int j : order) {
    prefix |= bit(j);
    SfmResult<V> r = sfm_constrained<V>(f, out.z, j, prefix);
    out.z[j] = r.value;
    out.tight_sets.push_back(r.minimizer);
    out.evaluations += r.evaluations;
  }
  return out;
}

template <class V, class W>
EdmondResult<V> modified_edmond(const SetFunction<V>& f, std::span<const W> alpha, Order order) {
  if (alpha.size() != static_cast<std::size_t>(f.size())) {
    throw Error(Errc::dimension_mismatch, "weight vector length differs from ground set size");
  }
  require_nonnegative(alpha);
  const std::vector<int> ord = weight_order(alpha, order);
  return modified_edmond(f, std::span<const int>(ord));
}

using Partition = std::vector<Mask>;

/// Blocks ordered by their smallest element.
inline Partition normalized(Partition p) {
  std::sort(p.begin(), p.end(), [](Mask a, Mask b) { return std::countr_zero(a) < std::countr_zero(b); });
  return p;
}

/// Visits every set partition of the members of s, in lexicographic order
/// of restricted growth strings (the single block {s} comes first).
template <class Fn>
void for_each_partition(Mask s, Fn&& visit) {
  const std::vector<int> elems = members(s);
  const std::size_t k = elems.size();
  if (k == 0) {
    visit(Partition{});
    return;
  }
  std::vector<int> rgs(k, 0);
  std::vector<int> prefix_max(k, 0);
  while (true) {
    int blocks = prefix_max[k - 1] + 1;
    Partition p(blocks, 0);
    for (std::size_t i = 0; i < k; ++i) p[rgs[i]] |= bit(elems[i]);
    visit(p);
    // Advance to the next restricted growth string.
    std::size_t i = k - 1;
    while (i > 0 && rgs[i] == prefix_max[i - 1] + 1) --i;
    if (i == 0) return;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t t = i + 1; t < k; ++t) {
      rgs[t] = 0;
      prefix_max[t] = prefix_max[i];
    }
  }
}

template <class V>
struct DilworthResult {
  V value;
  Partition partition;
};

/// g(S) = min over partitions P of S of sum_{V in P} f(V), by enumeration.
/// Among minimizing partitions the first in restricted-growth order wins.
template <class V>
DilworthResult<V> dilworth_bruteforce(const SetFunction<V>& f, Mask s) {
  using T = ValueTraits<V>;
  detail::require_exhaustive(popcount(s), 12, "Dilworth truncation by enumeration");
  if (!f.ground().valid(s)) throw Error(Errc::constraint_violation, "subset exceeds the ground set");
  std::vector<V> memo(std::size_t{1} << f.size());
  std::vector<bool> known(memo.size(), false);
  auto value = [&](Mask b) -> const V& {
    if (!known[b]) {
      memo[b] = f(b);
      known[b] = true;
    }
    return memo[b];
  };
  DilworthResult<V> best{T::zero(), {}};
  bool have = false;
  for_each_partition(s, [&](const Partition& p) {
    V total = T::zero();
    for (Mask b : p) total += value(b);
    if (!have || T::less(total, best.value)) {
      best.value = total;
      best.partition = p;
      have = true;
    }
  });
  best.partition = normalized(best.partition);
  return best;
}

/// Z(S) <= f(S) for every nonempty S.
template <class V>
bool in_polyhedron(const SetFunction<V>& f, std::span<const V> z) {
  detail::require_exhaustive(f.size(), 20, "polyhedron membership");
  if (z.size() != static_cast<std::size_t>(f.size())) throw Error(Errc::dimension_mismatch, "vector length");
  const Mask full = f.ground().full();
  for (Mask s = 1; s <= full; ++s) {
    if (ValueTraits<V>::less(f(s), sum_over(z, s))) return false;
  }
  return true;
}

}  // namespace omni::setfun
