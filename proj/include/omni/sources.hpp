#pragma once

// Entropy oracles for the two side-information models (explicit joint pmf,
// finite linear source) plus an explicit-table form used for diagnostics.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "omni/error.hpp"
#include "omni/field.hpp"
#include "omni/setfun.hpp"
#include "omni/value.hpp"

namespace omni::sources {

using field::FieldMatrix;
using setfun::GroundSet;
using setfun::Mask;
using setfun::SetFunction;

/// User i observes A_i W for W uniform over F_p^N.
struct LinearSource {
  std::uint64_t p = 0;
  std::size_t packets = 0;  // N
  std::vector<FieldMatrix> a;

  int users() const { return static_cast<int>(a.size()); }
  std::size_t observations(int i) const { return a.at(i).rows(); }  // l_i
};

/// Joint pmf over prod_i alphabet_i outcomes, row-major with user 1 as the
/// most significant coordinate.
struct DmmsSource {
  std::vector<std::size_t> alphabets;
  std::vector<double> pmf;

  int users() const { return static_cast<int>(alphabets.size()); }
};

/// Entropies given directly, one exact value per subset mask.
struct TableSource {
  int m = 0;
  Unit unit;
  std::vector<Rational> h;
};

inline std::vector<std::string> validate(const LinearSource& src) {
  std::vector<std::string> out;
  if (src.a.empty()) out.emplace_back("source has no users");
  if (src.a.size() > static_cast<std::size_t>(GroundSet::max_users)) out.emplace_back("more than 62 users");
  if (src.packets == 0) out.emplace_back("packet count N must be positive");
  try {
    field::require_prime_modulus(src.p, src.a.size());
  } catch (const Error& e) {
    out.emplace_back(e.what());
    return out;
  }
  bool coherent = true;
  for (std::size_t i = 0; i < src.a.size(); ++i) {
    if (src.a[i].cols() != src.packets) {
      out.push_back("user " + std::to_string(i + 1) + " matrix has " + std::to_string(src.a[i].cols()) +
                    " columns, expected N = " + std::to_string(src.packets));
      coherent = false;
    }
    if (src.a[i].modulus() != src.p) {
      out.push_back("user " + std::to_string(i + 1) + " matrix is over a different field");
      coherent = false;
    }
  }
  if (coherent && !src.a.empty() && src.packets > 0) {
    if (field::rank(field::stack(src.a, src.packets, src.p)) != src.packets) {
      out.emplace_back("collective observations do not determine W");
    }
  }
  return out;
}

inline std::vector<std::string> validate(const DmmsSource& src) {
  std::vector<std::string> out;
  if (src.alphabets.empty()) out.emplace_back("source has no users");
  if (src.alphabets.size() > static_cast<std::size_t>(GroundSet::max_users)) out.emplace_back("more than 62 users");
  std::size_t cells = 1;
  for (std::size_t i = 0; i < src.alphabets.size(); ++i) {
    if (src.alphabets[i] == 0) {
      out.push_back("user " + std::to_string(i + 1) + " has an empty alphabet");
      return out;
    }
    if (cells > (std::size_t{1} << 40) / src.alphabets[i]) {
      out.emplace_back("joint alphabet is too large for a dense table");
      return out;
    }
    cells *= src.alphabets[i];
  }
  if (src.pmf.size() != cells) {
    out.push_back("pmf table has " + std::to_string(src.pmf.size()) + " entries, expected " + std::to_string(cells));
    return out;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < src.pmf.size(); ++k) {
    if (!std::isfinite(src.pmf[k]) || src.pmf[k] < 0.0) {
      out.push_back("probability at outcome " + std::to_string(k) + " is negative or not finite");
    }
    total += src.pmf[k];
  }
  if (std::fabs(total - 1.0) > float_tolerance) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", total);
    out.push_back(std::string("probabilities sum to ") + buf + ", not 1");
  }
  return out;
}

inline std::vector<std::string> validate(const TableSource& src) {
  std::vector<std::string> out;
  if (src.m < 1 || src.m > 20) {
    out.emplace_back("table sources support 1 to 20 users");
    return out;
  }
  if (src.h.size() != (std::size_t{1} << src.m)) {
    out.push_back("entropy table must list all " + std::to_string(std::size_t{1} << src.m) + " subsets");
    return out;
  }
  if (src.h[0] != 0) out.emplace_back("entropy of the empty set must be 0");
  return out;
}

/// Uniform H(X_S) interface. Copies share one memo cache keyed by subset
/// mask; the cache is guarded so concurrent readers see consistent values.
template <class V>
class EntropyOracle {
 public:
  using value_type = V;

  EntropyOracle(int m, Unit unit, std::function<V(Mask)> compute)
      : ground_(m), unit_(std::move(unit)), state_(std::make_shared<State>()) {
    state_->compute = std::move(compute);
  }

  int users() const noexcept { return ground_.size(); }
  const GroundSet& ground() const noexcept { return ground_; }
  const Unit& unit() const noexcept { return unit_; }

  V entropy(Mask s) const {
    if (!ground_.valid(s)) throw Error(Errc::constraint_violation, "subset exceeds the ground set");
    state_->queries.fetch_add(1, std::memory_order_relaxed);
    if (s == 0) return ValueTraits<V>::zero();
    {
      std::shared_lock lock(state_->mutex);
      if (auto it = state_->memo.find(s); it != state_->memo.end()) return it->second;
    }
    V v = state_->compute(s);
    std::unique_lock lock(state_->mutex);
    return state_->memo.emplace(s, std::move(v)).first->second;
  }

  V total() const { return entropy(ground_.full()); }

  /// Entropy queries issued so far (cache hits included).
  std::uint64_t queries() const noexcept { return state_->queries.load(std::memory_order_relaxed); }

 private:
  struct State {
    std::function<V(Mask)> compute;
    std::shared_mutex mutex;
    std::unordered_map<Mask, V> memo;
    std::atomic<std::uint64_t> queries{0};
  };

  GroundSet ground_;
  Unit unit_;
  std::shared_ptr<State> state_;
};

inline FieldMatrix stacked(const LinearSource& src, Mask s) {
  std::vector<FieldMatrix> parts;
  for (int i : setfun::members(s)) parts.push_back(src.a[i]);
  return field::stack(parts, src.packets, src.p);
}

inline EntropyOracle<Rational> linear_oracle(const LinearSource& src) {
  auto problems = validate(src);
  if (!problems.empty()) throw Error(Errc::invalid_input, problems.front());
  auto shared = std::make_shared<const LinearSource>(src);
  return EntropyOracle<Rational>(src.users(), symbols_unit(src.p), [shared](Mask s) {
    return Rational(static_cast<std::int64_t>(field::rank(stacked(*shared, s))));
  });
}

inline EntropyOracle<double> pmf_oracle(const DmmsSource& src) {
  auto problems = validate(src);
  if (!problems.empty()) throw Error(Errc::invalid_input, problems.front());
  auto shared = std::make_shared<const DmmsSource>(src);
  return EntropyOracle<double>(src.users(), bits_unit(), [shared](Mask s) {
    const auto& alpha = shared->alphabets;
    const int m = static_cast<int>(alpha.size());
    // Marginal index of S's coordinates, accumulated while walking the
    // joint table in row-major order.
    std::size_t cells = 1;
    for (int i : setfun::members(s)) cells *= alpha[i];
    std::vector<double> marginal(cells, 0.0);
    std::vector<std::size_t> digit(m, 0);
    for (double prob : shared->pmf) {
      std::size_t idx = 0;
      for (int i = 0; i < m; ++i)
        if (setfun::contains(s, i)) idx = idx * alpha[i] + digit[i];
      marginal[idx] += prob;
      for (int i = m - 1; i >= 0; --i) {
        if (++digit[i] < alpha[i]) break;
        digit[i] = 0;
      }
    }
    double h = 0.0;
    for (double q : marginal)
      if (q > 0.0) h -= q * std::log2(q);
    return h;
  });
}

inline EntropyOracle<Rational> table_oracle(const TableSource& src) {
  auto problems = validate(src);
  if (!problems.empty()) throw Error(Errc::invalid_input, problems.front());
  auto shared = std::make_shared<const std::vector<Rational>>(src.h);
  return EntropyOracle<Rational>(src.m, src.unit, [shared](Mask s) { return (*shared)[s]; });
}

template <class V>
V entropy(const EntropyOracle<V>& o, Mask s) {
  return o.entropy(s);
}

/// H(X_S | X_{S^c}) = H(X_M) - H(X_{S^c}).
template <class V>
V cond_entropy(const EntropyOracle<V>& o, Mask s) {
  return o.total() - o.entropy(o.ground().complement(s));
}

/// f(S, beta) = beta - H(X_M) + H(X_S) for nonempty S, 0 on the empty set.
template <class V>
SetFunction<V> as_setfunction_f_beta(const EntropyOracle<V>& o, const V& beta) {
  const V shift = beta - o.total();
  return SetFunction<V>(o.ground(), [o, shift](Mask s) { return s == 0 ? ValueTraits<V>::zero() : shift + o.entropy(s); });
}

/// Plain entropy as a set function.
template <class V>
SetFunction<V> as_setfunction(const EntropyOracle<V>& o) {
  return SetFunction<V>(o.ground(), [o](Mask s) { return o.entropy(s); });
}

/// The joint pmf induced by pushing uniform W through every A_i. Each user's
/// outcome is its observation vector read as a base-p integer.
inline DmmsSource dmms_from_linear(const LinearSource& src) {
  auto problems = validate(src);
  if (!problems.empty()) throw Error(Errc::invalid_input, problems.front());
  const double cap = std::ldexp(1.0, 24);
  const double draws = std::pow(static_cast<double>(src.p), static_cast<double>(src.packets));
  if (draws > std::ldexp(1.0, 20)) throw Error(Errc::too_large, "p^N exceeds 2^20");
  DmmsSource out;
  double cells = 1.0;
  for (const auto& a : src.a) {
    double size = std::pow(static_cast<double>(src.p), static_cast<double>(a.rows()));
    cells *= size;
    out.alphabets.push_back(static_cast<std::size_t>(size));
  }
  if (cells > cap) throw Error(Errc::too_large, "joint observation alphabet exceeds 2^24 cells");
  out.pmf.assign(static_cast<std::size_t>(cells), 0.0);
  const double mass = 1.0 / draws;
  std::vector<std::uint64_t> w(src.packets, 0);
  for (std::size_t k = 0; k < static_cast<std::size_t>(draws); ++k) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < src.a.size(); ++i) {
      std::size_t local = 0;
      for (std::uint64_t x : field::apply(src.a[i], w)) local = local * src.p + x;
      idx = idx * out.alphabets[i] + local;
    }
    out.pmf[idx] += mass;
    for (std::size_t t = src.packets; t-- > 0;) {
      if (++w[t] < src.p) break;
      w[t] = 0;
    }
  }
  return out;
}

}  // namespace omni::sources
