#pragma once

// Rate allocation for communication for omniscience: the modified greedy
// algorithm on f(S, beta) with symbolic beta tracking, optimal partitions,
// the minimum sum rate, the weighted objective h(beta) and its minimization,
// and rounding to block length n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "omni/error.hpp"
#include "omni/setfun.hpp"
#include "omni/sources.hpp"
#include "omni/value.hpp"

namespace omni::rates {

using setfun::Mask;
using setfun::Order;
using setfun::Partition;
using sources::EntropyOracle;

template <class V>
using CostVector = std::vector<V>;

template <class V>
CostVector<V> uniform_cost(int m) {
  return CostVector<V>(m, ValueTraits<V>::from_int(1));
}

template <class V>
struct RateVector {
  std::vector<V> values;
  std::uint64_t denominator = 1;  // 1 means unconstrained

  std::size_t size() const { return values.size(); }
  const V& operator[](std::size_t i) const { return values[i]; }
  V sum() const {
    V acc = ValueTraits<V>::zero();
    for (const V& v : values) acc += v;
    return acc;
  }
};

/// R_i = b_i * beta + c_i on one linear piece of the optimal-rate map.
template <class V>
struct LinearSegment {
  std::vector<std::int64_t> b;
  std::vector<V> c;

  std::int64_t b_sum() const { return std::accumulate(b.begin(), b.end(), std::int64_t{0}); }

  V slope(std::span<const V> alpha) const {
    V s = ValueTraits<V>::zero();
    for (std::size_t i = 0; i < b.size(); ++i) s += alpha[i] * ValueTraits<V>::from_int(b[i]);
    return s;
  }

  V rate(std::size_t i, const V& beta) const { return ValueTraits<V>::from_int(b[i]) * beta + c[i]; }
};

template <class V>
struct PartitionResult {
  Partition partition;
  V g_value;
};

/// A beta value carrying the unit it was measured in.
template <class V>
struct Quantity {
  V value;
  Unit unit;
};

enum class Side { right, left };

template <class V>
struct EdmondOutcome {
  std::vector<V> z;
  LinearSegment<V> segment;
  std::vector<Mask> tight_sets;  // one per step, in processing order
  std::vector<int> order;
  std::uint64_t evaluations = 0;

  V sum() const {
    V acc = ValueTraits<V>::zero();
    for (const V& v : z) acc += v;
    return acc;
  }
};

namespace detail {

template <class V>
void check_cost(const EntropyOracle<V>& o, std::span<const V> alpha) {
  if (alpha.size() != static_cast<std::size_t>(o.users())) {
    throw Error(Errc::dimension_mismatch, "weight vector has " + std::to_string(alpha.size()) + " entries for " +
                                              std::to_string(o.users()) + " users");
  }
  for (const V& a : alpha) {
    if constexpr (!ValueTraits<V>::exact) {
      if (!std::isfinite(a)) throw Error(Errc::invalid_input, "weights must be finite");
    }
  }
  setfun::require_nonnegative(alpha);
}

template <class V>
void check_beta(const V& beta) {
  if (ValueTraits<V>::less(beta, ValueTraits<V>::zero())) {
    throw Error(Errc::invalid_input, "beta must be nonnegative");
  }
}

// f(S, beta + d) with d an infinitesimal of sign Dir: every nonempty S
// contributes beta exactly once, so its slope in beta is 1.
template <int Dir, class V>
setfun::SetFunction<Perturbed<V, Dir>> perturbed_f(const EntropyOracle<V>& o, const V& beta) {
  using P = Perturbed<V, Dir>;
  const V shift = beta - o.total();
  return setfun::SetFunction<P>(o.ground(), [o, shift](Mask s) {
    if (s == 0) return ValueTraits<P>::zero();
    return P{shift + o.entropy(s), 1};
  });
}

template <int Dir, class V>
EdmondOutcome<V> run(const EntropyOracle<V>& o, const V& beta, std::span<const int> order) {
  auto f = perturbed_f<Dir>(o, beta);
  auto r = setfun::modified_edmond(f, order);
  EdmondOutcome<V> out;
  out.order = std::move(r.order);
  out.tight_sets = std::move(r.tight_sets);
  out.evaluations = r.evaluations;
  for (const auto& zi : r.z) {
    out.z.push_back(zi.value);
    out.segment.b.push_back(zi.slope);
    out.segment.c.push_back(zi.value - ValueTraits<V>::from_int(zi.slope) * beta);
  }
  return out;
}

template <class V>
EdmondOutcome<V> run(const EntropyOracle<V>& o, const V& beta, std::span<const int> order, Side side) {
  return side == Side::right ? run<1>(o, beta, order) : run<-1>(o, beta, order);
}

template <class V>
std::vector<int> identity_order(int m) {
  std::vector<int> ord(m);
  std::iota(ord.begin(), ord.end(), 0);
  return ord;
}

template <class V>
V dot(std::span<const V> a, std::span<const V> b) {
  V acc = ValueTraits<V>::zero();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace detail

/// Greedy optimum over P(f(., beta)) with Z computed by constrained
/// minimization at each step. The segment records how each Z_i moves with
/// beta on the chosen side of the given point.
template <class V>
EdmondOutcome<V> modified_edmond(const EntropyOracle<V>& o, const V& beta, std::span<const V> alpha, Order ordering,
                                 Side side = Side::right) {
  detail::check_cost(o, alpha);
  detail::check_beta(beta);
  const std::vector<int> ord = setfun::weight_order(alpha, ordering);
  return detail::run(o, beta, std::span<const int>(ord), side);
}

template <class V>
EdmondOutcome<V> modified_edmond(const EntropyOracle<V>& o, const Quantity<V>& beta, std::span<const V> alpha,
                                 Order ordering, Side side = Side::right) {
  if (beta.unit != o.unit()) {
    throw Error(Errc::unit_mismatch, "beta is in " + beta.unit.label + " but the source is measured in " + o.unit().label);
  }
  return modified_edmond(o, beta.value, alpha, ordering, side);
}

template <class V>
struct PartitionRun {
  PartitionResult<V> result;
  EdmondOutcome<V> edmond;  // the underlying run with alpha = 1
};

namespace detail {

template <class V>
PartitionRun<V> partition_run(const EntropyOracle<V>& o, const V& beta) {
  check_beta(beta);
  const auto ord = identity_order<V>(o.users());
  PartitionRun<V> out{{}, run<1>(o, beta, std::span<const int>(ord))};
  Partition blocks;
  for (Mask s : out.edmond.tight_sets) {
    Mask merged = s;
    Partition keep;
    for (Mask b : blocks) {
      if (b & s) merged |= b;
      else keep.push_back(b);
    }
    keep.push_back(merged);
    blocks = std::move(keep);
  }
  out.result.partition = setfun::normalized(std::move(blocks));
  const V shift = beta - o.total();
  V g = ValueTraits<V>::zero();
  for (Mask b : out.result.partition) g += shift + o.entropy(b);
  out.result.g_value = g;
  return out;
}

}  // namespace detail

/// P(beta), an optimal partition of M for sum_{V in P} f(V, beta). Ties are
/// resolved toward the partition that stays optimal just above beta, so
/// P(beta) = {M} exactly when beta >= R_CO(1).
template <class V>
PartitionResult<V> optimal_partition(const EntropyOracle<V>& o, const V& beta) {
  return detail::partition_run(o, beta).result;
}

template <class V>
PartitionResult<V> optimal_partition(const EntropyOracle<V>& o, const Quantity<V>& beta) {
  if (beta.unit != o.unit()) {
    throw Error(Errc::unit_mismatch, "beta is in " + beta.unit.label + " but the source is measured in " + o.unit().label);
  }
  return optimal_partition(o, beta.value);
}

template <class V>
struct RcoResult {
  V rco;
  RateVector<V> rates;
  LinearSegment<V> segment;
  Partition partition;  // last partition with two or more blocks; {M} when R_CO(1) = 0
  std::vector<V> betas;  // iterates, starting at 0
  int iterations = 0;
  std::uint64_t sfm_evaluations = 0;
};

/// Minimum sum rate by the line-intersection walk from beta = 0.
template <class V>
RcoResult<V> rco_sum_rate(const EntropyOracle<V>& o) {
  using T = ValueTraits<V>;
  const int m = o.users();
  const V total = o.total();
  RcoResult<V> out;
  V beta = T::zero();
  out.betas.push_back(beta);
  out.partition = Partition{o.ground().full()};
  PartitionRun<V> cur = detail::partition_run(o, beta);
  out.sfm_evaluations += cur.edmond.evaluations;
  while (cur.result.partition.size() > 1) {
    if (++out.iterations > m) {
      throw Error(Errc::non_termination, "sum-rate search exceeded " + std::to_string(m) + " iterations");
    }
    const Partition& p = cur.result.partition;
    V deficit = T::zero();
    for (Mask s : p) deficit += total - o.entropy(s);
    V next = deficit / T::from_int(static_cast<std::int64_t>(p.size()) - 1);
    if (!T::less(beta, next)) {
      throw Error(Errc::non_termination, "sum-rate iterate failed to increase; the oracle is not submodular");
    }
    out.partition = p;
    beta = next;
    out.betas.push_back(beta);
    cur = detail::partition_run(o, beta);
    out.sfm_evaluations += cur.edmond.evaluations;
  }
  out.rco = beta;
  out.rates.values = cur.edmond.z;
  out.segment = cur.edmond.segment;
  return out;
}

/// R_CO(1) = H(M) - min over partitions P with |P| >= 2 of
/// (sum_{S in P} H(S) - H(M)) / (|P| - 1), by enumeration.
template <class V>
V rco_partition_formula(const EntropyOracle<V>& o) {
  using T = ValueTraits<V>;
  if (o.users() > 12) throw Error(Errc::too_large, "partition enumeration is capped at m = 12");
  const V total = o.total();
  std::optional<V> best;
  setfun::for_each_partition(o.ground().full(), [&](const Partition& p) {
    if (p.size() < 2) return;
    V acc = T::zero();
    for (Mask s : p) acc += o.entropy(s);
    V q = (acc - total) / T::from_int(static_cast<std::int64_t>(p.size()) - 1);
    if (!best || T::less(q, *best)) best = q;
  });
  return best ? total - *best : T::zero();
}

template <class V>
struct HResult {
  V h;
  RateVector<V> rates;
  LinearSegment<V> segment;
  V slope;  // dh/dbeta on the chosen side
};

/// h(beta) = min sum alpha_i R_i over the base polyhedron of f(., beta).
template <class V>
HResult<V> h_eval(const EntropyOracle<V>& o, std::span<const V> alpha, const V& beta, Side side = Side::right) {
  EdmondOutcome<V> e = modified_edmond(o, beta, alpha, Order::ascending, side);
  if (!ValueTraits<V>::equal(e.sum(), beta)) {
    throw Error(Errc::infeasible_beta, "beta = " + ValueTraits<V>::to_string(beta) +
                                           " is below the minimum sum rate; the base polyhedron is empty");
  }
  HResult<V> out{detail::dot<V>(alpha, e.z), {}, std::move(e.segment), {}};
  out.rates.values = std::move(e.z);
  out.slope = out.segment.slope(alpha);
  return out;
}

template <class V>
struct WeightedResult {
  V beta_star;
  V rco;
  RateVector<V> rates;
  V cost;
  int iterations = 0;
};

/// Minimizes the convex piecewise-linear h over [R_CO(1), H(M)]. The bracket
/// [lo, hi] keeps a negative right slope at lo and a positive left slope at
/// hi; each step jumps to the intersection of the two supporting lines and
/// stops once that point has a zero subgradient.
template <class V>
WeightedResult<V> minimize_weighted(const EntropyOracle<V>& o, std::span<const V> alpha,
                                    double tolerance = float_tolerance) {
  using T = ValueTraits<V>;
  detail::check_cost(o, alpha);
  WeightedResult<V> out;
  out.rco = rco_sum_rate(o).rco;
  V lo = out.rco;
  V hi = o.total();

  auto finish = [&](const V& beta) {
    HResult<V> h = h_eval(o, alpha, beta);
    out.beta_star = beta;
    out.rates = std::move(h.rates);
    out.cost = h.h;
    return out;
  };

  if (!T::less(lo, hi)) return finish(lo);
  HResult<V> at_lo = h_eval(o, alpha, lo, Side::right);
  if (!T::less(at_lo.slope, T::zero())) return finish(lo);
  HResult<V> at_hi = h_eval(o, alpha, hi, Side::left);
  if (!T::less(T::zero(), at_hi.slope)) return finish(hi);

  V h_lo = at_lo.h, s_lo = at_lo.slope;
  V h_hi = at_hi.h, s_hi = at_hi.slope;
  constexpr int cap = 100000;
  while (true) {
    if (++out.iterations > cap) throw Error(Errc::non_convergence, "weighted minimization did not settle");
    if constexpr (!T::exact) {
      if (hi - lo <= tolerance) return finish(h_lo <= h_hi ? lo : hi);
    }
    V x = (h_hi - h_lo + s_lo * lo - s_hi * hi) / (s_lo - s_hi);
    if constexpr (!T::exact) x = std::clamp(x, lo, hi);
    HResult<V> right = h_eval(o, alpha, x, Side::right);
    HResult<V> left = h_eval(o, alpha, x, Side::left);
    const bool left_ok = !T::less(T::zero(), left.slope);
    const bool right_ok = !T::less(right.slope, T::zero());
    if (left_ok && right_ok) return finish(x);
    if (!right_ok) {
      if (!T::less(lo, x)) throw Error(Errc::non_convergence, "bracket failed to shrink");
      lo = x;
      h_lo = right.h;
      s_lo = right.slope;
    } else {
      if (!T::less(x, hi)) throw Error(Errc::non_convergence, "bracket failed to shrink");
      hi = x;
      h_hi = left.h;
      s_hi = left.slope;
    }
  }
}

namespace detail {

inline Rational grid_floor(const Rational& x, std::uint64_t n) {
  return Rational(floor_div(x * n), BigInt(n));
}
inline Rational grid_ceil(const Rational& x, std::uint64_t n) {
  return Rational(ceil_div(x * n), BigInt(n));
}
inline double grid_floor(double x, std::uint64_t n) {
  double y = x * static_cast<double>(n);
  double r = std::round(y);
  return (std::fabs(y - r) <= float_tolerance ? r : std::floor(y)) / static_cast<double>(n);
}
inline double grid_ceil(double x, std::uint64_t n) {
  double y = x * static_cast<double>(n);
  double r = std::round(y);
  return (std::fabs(y - r) <= float_tolerance ? r : std::ceil(y)) / static_cast<double>(n);
}

}  // namespace detail

template <class V>
struct IlpResult {
  RateVector<V> rates;
  V beta;       // sum rate of the rounded allocation
  V cost;
  V rco;        // R_CO(1)
  V rco_n;      // ceil(n R_CO(1)) / n
  V beta_star;  // unconstrained weighted optimum
  V gap_bound;  // max_i alpha_i / n
};

/// Optimum of the block-length-n problem: h restricted to beta in Z/n, at
/// the better of the two grid points around the unconstrained optimum.
template <class V>
IlpResult<V> ilp_rates(const EntropyOracle<V>& o, std::span<const V> alpha, std::uint64_t n) {
  using T = ValueTraits<V>;
  if (n == 0) throw Error(Errc::invalid_n, "block length n must be at least 1");
  WeightedResult<V> w = minimize_weighted(o, alpha);
  IlpResult<V> out;
  out.rco = w.rco;
  out.beta_star = w.beta_star;
  out.rco_n = detail::grid_ceil(w.rco, n);
  V lower = detail::grid_floor(w.beta_star, n);
  V upper = detail::grid_ceil(w.beta_star, n);
  if (T::less(lower, out.rco_n)) lower = out.rco_n;
  if (T::less(upper, out.rco_n)) upper = out.rco_n;
  HResult<V> best = h_eval(o, alpha, lower);
  out.beta = lower;
  if (T::less(lower, upper)) {
    HResult<V> alt = h_eval(o, alpha, upper);
    if (T::less(alt.h, best.h)) {
      best = std::move(alt);
      out.beta = upper;
    }
  }
  out.rates = std::move(best.rates);
  out.rates.denominator = n;
  out.cost = best.h;
  V top = T::zero();
  for (const V& a : alpha) top = std::max(top, a, [](const V& x, const V& y) { return x < y; });
  out.gap_bound = top / T::from_int(static_cast<std::int64_t>(n));
  return out;
}

/// R(S) >= H(S | S^c) for every proper nonempty S.
template <class V>
bool verify_feasible(const EntropyOracle<V>& o, const RateVector<V>& rates) {
  if (o.users() > 20) throw Error(Errc::too_large, "feasibility check is exhaustive and capped at m = 20");
  if (rates.size() != static_cast<std::size_t>(o.users())) {
    throw Error(Errc::dimension_mismatch, "rate vector length differs from the number of users");
  }
  const Mask full = o.ground().full();
  for (Mask s = 1; s < full; ++s) {
    if (ValueTraits<V>::less(setfun::sum_over<V>(rates.values, s), sources::cond_entropy(o, s))) return false;
  }
  return true;
}

/// Secret-key capacity H(M) - R_CO(1).
template <class V>
V key_capacity(const EntropyOracle<V>& o, const V& rco) {
  return o.total() - rco;
}

}  // namespace omni::rates
