#pragma once

// The five CLI commands as library functions returning a JSON report and an
// exit status, so tests can drive them without spawning processes.

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "omni/document.hpp"
#include "omni/error.hpp"
#include "omni/netcode.hpp"
#include "omni/rates.hpp"
#include "omni/setfun.hpp"
#include "omni/sources.hpp"
#include "omni/value.hpp"

namespace omni::commands {

using document::ordered_json;
using document::Problem;

enum ExitCode : int {
  ok = 0,
  property_failure = 1,
  invalid_input = 2,
  unit_mismatch = 3,
  field_too_small = 4,
  construction_failure = 5,
};

inline int exit_code_for(Errc e) {
  switch (e) {
    case Errc::unit_mismatch: return unit_mismatch;
    case Errc::field_too_small: return field_too_small;
    case Errc::construction_failed: return construction_failure;
    case Errc::infeasible_rates:
    case Errc::non_termination:
    case Errc::non_convergence:
    case Errc::infeasible_beta:
    case Errc::inconsistent_observations: return property_failure;
    default: return invalid_input;
  }
}

struct Options {
  std::optional<std::vector<Rational>> alpha;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> seed;
  int max_tries = 64;
  std::optional<double> tolerance;
};

struct Outcome {
  ordered_json report;
  int exit_code = ok;
  std::optional<ordered_json> scheme;  // cmd_code only
};

namespace detail {

template <class V>
V convert(const Rational& r) {
  if constexpr (std::is_same_v<V, Rational>) return r;
  else return r.convert_to<double>();
}

inline std::vector<Rational> weights(const Problem& prob, const Options& opt) {
  std::vector<Rational> alpha = opt.alpha ? *opt.alpha : prob.weights.value_or(std::vector<Rational>(prob.users(), Rational(1)));
  if (alpha.size() != static_cast<std::size_t>(prob.users())) {
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(prob.users()) + " weights, got " +
                                              std::to_string(alpha.size()));
  }
  for (const auto& a : alpha)
    if (a < 0) throw Error(Errc::negative_weight, "weights must be nonnegative");
  return alpha;
}

template <class V>
void check_unit(const Problem& prob, const sources::EntropyOracle<V>& o) {
  if (prob.declared_unit && *prob.declared_unit != o.unit().label) {
    throw Error(Errc::unit_mismatch, "document declares unit '" + *prob.declared_unit + "' but the source is measured in " +
                                         o.unit().label);
  }
}

/// Calls fn with the oracle matching the document's source kind.
template <class Fn>
auto with_oracle(const Problem& prob, Fn&& fn) {
  return std::visit(
      [&](const auto& src) {
        using S = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<S, sources::LinearSource>) {
          auto o = sources::linear_oracle(src);
          check_unit(prob, o);
          return fn(o);
        } else if constexpr (std::is_same_v<S, sources::DmmsSource>) {
          auto o = sources::pmf_oracle(src);
          check_unit(prob, o);
          return fn(o);
        } else {
          auto o = sources::table_oracle(src);
          return fn(o);
        }
      },
      prob.source);
}

template <class V>
ordered_json header(const char* command, const Problem& prob, const sources::EntropyOracle<V>& o) {
  ordered_json out;
  out["command"] = command;
  out["input_hash"] = prob.hash;
  out["unit"] = o.unit().label;
  out["users"] = std::to_string(o.users());
  out["entropy_total"] = document::num(o.total());
  return out;
}

template <class V>
void require_feasible(const sources::EntropyOracle<V>& o, const rates::RateVector<V>& r) {
  if (o.users() <= 20 && !rates::verify_feasible(o, r)) {
    throw Error(Errc::infeasible_rates, "computed rates violate a cut constraint");
  }
}

template <class V>
ordered_json segment_json(const rates::LinearSegment<V>& s) {
  ordered_json out;
  out["b"] = ordered_json::array();
  for (auto b : s.b) out["b"].push_back(std::to_string(b));
  out["c"] = document::numbers(s.c);
  return out;
}

}  // namespace detail

inline Outcome cmd_rates(const Problem& prob, const Options& opt = {}) {
  const std::vector<Rational> alpha_q = detail::weights(prob, opt);
  return detail::with_oracle(prob, [&](const auto& o) {
    using V = typename std::decay_t<decltype(o)>::value_type;
    std::vector<V> alpha;
    bool uniform = true;
    for (const auto& a : alpha_q) {
      alpha.push_back(detail::convert<V>(a));
      uniform = uniform && a == 1;
    }
    rates::RcoResult<V> rco = rates::rco_sum_rate(o);
    ordered_json out = detail::header("rates", prob, o);
    out["weights"] = document::numbers(alpha);
    V beta_star = rco.rco;
    rates::RateVector<V> r = rco.rates;
    rates::LinearSegment<V> seg = rco.segment;
    int weighted_iterations = 0;
    if (!uniform) {
      auto w = rates::minimize_weighted(o, std::span<const V>(alpha), opt.tolerance.value_or(float_tolerance));
      beta_star = w.beta_star;
      r = w.rates;
      weighted_iterations = w.iterations;
      seg = rates::h_eval(o, std::span<const V>(alpha), beta_star).segment;
    }
    detail::require_feasible(o, r);
    V cost = ValueTraits<V>::zero();
    for (std::size_t i = 0; i < alpha.size(); ++i) cost += alpha[i] * r[i];
    out["rates"] = document::numbers(r.values);
    out["sum_rate"] = document::num(r.sum());
    out["beta_star"] = document::num(beta_star);
    out["cost"] = document::num(cost);
    out["r_co"] = document::num(rco.rco);
    out["partition"] = document::partition_json(rco.partition);
    out["key_capacity"] = document::num(rates::key_capacity(o, rco.rco));
    out["segment"] = detail::segment_json(seg);
    ordered_json diag;
    diag["iterations"] = std::to_string(rco.iterations);
    diag["betas"] = document::numbers(rco.betas);
    diag["weighted_iterations"] = std::to_string(weighted_iterations);
    diag["sfm_evaluations"] = std::to_string(rco.sfm_evaluations);
    diag["oracle_queries"] = std::to_string(o.queries());
    out["diagnostics"] = diag;
    return Outcome{out, ok, std::nullopt};
  });
}

inline Outcome cmd_ilp(const Problem& prob, const Options& opt = {}) {
  const std::uint64_t n = opt.n.value_or(prob.n);
  if (n == 0) throw Error(Errc::invalid_n, "block length n must be at least 1");
  const std::vector<Rational> alpha_q = detail::weights(prob, opt);
  return detail::with_oracle(prob, [&](const auto& o) {
    using V = typename std::decay_t<decltype(o)>::value_type;
    std::vector<V> alpha;
    for (const auto& a : alpha_q) alpha.push_back(detail::convert<V>(a));
    auto res = rates::ilp_rates(o, std::span<const V>(alpha), n);
    detail::require_feasible(o, res.rates);
    auto rco = rates::rco_sum_rate(o);
    ordered_json out = detail::header("ilp", prob, o);
    out["weights"] = document::numbers(alpha);
    out["n"] = std::to_string(n);
    out["rates"] = document::numbers(res.rates.values);
    out["denominator"] = std::to_string(res.rates.denominator);
    out["sum_rate"] = document::num(res.beta);
    out["cost"] = document::num(res.cost);
    out["r_co"] = document::num(res.rco);
    out["r_co_n"] = document::num(res.rco_n);
    out["beta_star"] = document::num(res.beta_star);
    out["gap_bound"] = document::num(res.gap_bound);
    out["partition"] = document::partition_json(rco.partition);
    out["key_capacity"] = document::num(rates::key_capacity(o, res.rco));
    ordered_json diag;
    diag["iterations"] = std::to_string(rco.iterations);
    diag["sfm_evaluations"] = std::to_string(rco.sfm_evaluations);
    diag["oracle_queries"] = std::to_string(o.queries());
    out["diagnostics"] = diag;
    return Outcome{out, ok, std::nullopt};
  });
}

inline ordered_json receivers_json(const std::vector<netcode::ReceiverCheck>& checks) {
  ordered_json out = ordered_json::array();
  for (std::size_t j = 0; j < checks.size(); ++j) {
    ordered_json r;
    r["receiver"] = std::to_string(j + 1);
    r["achieved_rank"] = std::to_string(checks[j].achieved);
    r["required_rank"] = std::to_string(checks[j].required);
    r["pass"] = checks[j].ok();
    out.push_back(r);
  }
  return out;
}

inline const sources::LinearSource& require_linear(const Problem& prob, const char* what) {
  if (!prob.is_linear()) throw Error(Errc::invalid_input, std::string(what) + " requires a linear source");
  return std::get<sources::LinearSource>(prob.source);
}

inline Outcome cmd_code(const Problem& prob, const Options& opt = {}) {
  const auto& src = require_linear(prob, "code construction");
  const std::uint64_t n = opt.n.value_or(prob.n);
  if (n == 0) throw Error(Errc::invalid_n, "block length n must be at least 1");
  const std::uint64_t seed = opt.seed.value_or(prob.seed);
  if (src.p <= static_cast<std::uint64_t>(src.users())) {
    throw Error(Errc::field_too_small, "field size " + std::to_string(src.p) + " must exceed the number of users " +
                                           std::to_string(src.users()));
  }
  const std::vector<Rational> alpha = detail::weights(prob, opt);
  auto o = sources::linear_oracle(src);
  detail::check_unit(prob, o);
  auto res = rates::ilp_rates(o, std::span<const Rational>(alpha), n);
  detail::require_feasible(o, res.rates);
  auto built = netcode::construct_code(src, res.rates, n, seed, opt.max_tries);
  auto checks = netcode::receiver_ranks(src, built.scheme);

  ordered_json out = detail::header("code", prob, o);
  out["n"] = std::to_string(n);
  out["seed"] = std::to_string(seed);
  out["rates"] = document::numbers(res.rates.values);
  out["sum_rate"] = document::num(res.beta);
  std::uint64_t rows = 0;
  for (const auto& c : built.scheme.c) rows += c.rows();
  out["broadcast_rows"] = std::to_string(rows);
  out["tries"] = std::to_string(built.tries);
  out["exhaustive_fallback"] = built.exhaustive;
  out["reduced_n"] = std::to_string(built.reduced_n);
  out["receivers"] = receivers_json(checks);
  bool all = true;
  for (const auto& c : checks) all = all && c.ok();
  out["all_pass"] = all;
  ordered_json scheme = document::scheme_json(built.scheme);
  out["scheme"] = scheme;
  return Outcome{out, all ? ok : property_failure, scheme};
}

inline Outcome cmd_verify(const Problem& prob, std::string_view scheme_text, const std::string& scheme_name,
                          const Options& = {}) {
  const auto& src = require_linear(prob, "scheme verification");
  auto scheme = document::parse_scheme(scheme_text, scheme_name, src);
  auto checks = netcode::receiver_ranks(src, scheme);
  auto o = sources::linear_oracle(src);
  detail::check_unit(prob, o);
  ordered_json out = detail::header("verify", prob, o);
  out["scheme_hash"] = document::fnv1a64(scheme_text);
  out["n"] = std::to_string(scheme.n);
  ordered_json sent = ordered_json::array();
  for (const auto& c : scheme.c) sent.push_back(std::to_string(c.rows()));
  out["broadcast_rows"] = sent;
  out["receivers"] = receivers_json(checks);
  bool all = true;
  for (const auto& c : checks) all = all && c.ok();
  out["all_pass"] = all;
  return Outcome{out, all ? ok : property_failure, std::nullopt};
}

// --- selfcheck ---------------------------------------------------------------

namespace detail {

struct Check {
  std::string name;
  std::string status;  // pass | fail | skipped
  std::string detail;
};

template <class Fn>
Check guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, "fail", e.what()};
  }
}

inline Check verdict(const std::string& name, bool passed, std::string detail = {}) {
  return {name, passed ? "pass" : "fail", std::move(detail)};
}

template <class V>
std::vector<Check> run_checks(const sources::EntropyOracle<V>& o, std::uint64_t seed) {
  using T = ValueTraits<V>;
  using setfun::Mask;
  const int m = o.users();
  const Mask full = o.ground().full();
  const bool exhaustive = m <= 8;
  const std::string too_big = "skipped: exhaustive check needs m <= 8, source has m = " + std::to_string(m);
  std::vector<Check> out;
  std::mt19937_64 rng(seed);
  auto random_set = [&] { return static_cast<Mask>(rng()) & full; };
  constexpr int samples = 2000;

  out.push_back(guarded("entropy_submodular", [&] {
    if (exhaustive) return verdict("entropy_submodular", setfun::is_submodular(sources::as_setfunction(o)), "exhaustive");
    for (int k = 0; k < samples; ++k) {
      Mask s = random_set(), t = random_set();
      if (T::less(o.entropy(s) + o.entropy(t), o.entropy(s | t) + o.entropy(s & t))) {
        return verdict("entropy_submodular", false, "sampled pair violates the inequality");
      }
    }
    return verdict("entropy_submodular", true, "sampled " + std::to_string(samples) + " pairs");
  }));

  out.push_back(guarded("entropy_monotone", [&] {
    auto step_ok = [&](Mask s, int i) { return !T::less(o.entropy(s | setfun::bit(i)), o.entropy(s)); };
    if (exhaustive) {
      for (Mask s = 0; s <= full; ++s)
        for (int i = 0; i < m; ++i)
          if (!setfun::contains(s, i) && !step_ok(s, i)) return verdict("entropy_monotone", false, "exhaustive");
      return verdict("entropy_monotone", true, "exhaustive");
    }
    for (int k = 0; k < samples; ++k)
      if (!step_ok(random_set(), static_cast<int>(rng() % m))) return verdict("entropy_monotone", false, "sampled");
    return verdict("entropy_monotone", true, "sampled " + std::to_string(samples) + " steps");
  }));

  out.push_back(guarded("f_beta0_intersecting_submodular", [&] {
    if (!exhaustive) return Check{"f_beta0_intersecting_submodular", "skipped", too_big};
    return verdict("f_beta0_intersecting_submodular",
                   setfun::is_intersecting_submodular(sources::as_setfunction_f_beta(o, T::zero())), "exhaustive");
  }));

  out.push_back(guarded("f_beta_total_submodular", [&] {
    if (!exhaustive) return Check{"f_beta_total_submodular", "skipped", too_big};
    return verdict("f_beta_total_submodular", setfun::is_submodular(sources::as_setfunction_f_beta(o, o.total())),
                   "exhaustive");
  }));

  std::optional<rates::RcoResult<V>> rco;
  out.push_back(guarded("sum_rate_termination", [&] {
    rco = rates::rco_sum_rate(o);
    return verdict("sum_rate_termination", rco->iterations <= m,
                   std::to_string(rco->iterations) + " iterations for m = " + std::to_string(m));
  }));

  out.push_back(guarded("sum_rate_matches_partition_formula", [&] {
    if (!exhaustive) return Check{"sum_rate_matches_partition_formula", "skipped", too_big};
    if (!rco) return verdict("sum_rate_matches_partition_formula", false, "sum-rate search failed");
    V formula = rates::rco_partition_formula(o);
    return verdict("sum_rate_matches_partition_formula", T::equal(formula, rco->rco),
                   "search " + T::to_string(rco->rco) + ", formula " + T::to_string(formula));
  }));

  out.push_back(guarded("greedy_matches_dilworth", [&] {
    if (!exhaustive) return Check{"greedy_matches_dilworth", "skipped", too_big};
    if (!rco) return verdict("greedy_matches_dilworth", false, "sum-rate search failed");
    const std::vector<V> ones = rates::uniform_cost<V>(m);
    const V two = T::from_int(2);
    for (const V& beta : {T::zero(), rco->rco / two, rco->rco, o.total()}) {
      auto e = rates::modified_edmond(o, beta, std::span<const V>(ones), setfun::Order::descending);
      auto f = sources::as_setfunction_f_beta(o, beta);
      auto g = setfun::dilworth_bruteforce(f, full);
      if (!T::equal(e.sum(), g.value) || !setfun::in_polyhedron(f, std::span<const V>(e.z))) {
        return verdict("greedy_matches_dilworth", false, "mismatch at beta = " + T::to_string(beta));
      }
    }
    return verdict("greedy_matches_dilworth", true, "4 values of beta");
  }));

  out.push_back(guarded("rates_feasible", [&] {
    if (!rco) return verdict("rates_feasible", false, "sum-rate search failed");
    if (m > 20) return Check{"rates_feasible", "skipped", "skipped: feasibility check needs m <= 20"};
    return verdict("rates_feasible", rates::verify_feasible(o, rco->rates));
  }));

  out.push_back(guarded("segment_sum", [&] {
    if (!rco) return verdict("segment_sum", false, "sum-rate search failed");
    return verdict("segment_sum", rco->segment.b_sum() == 1, "sum of b = " + std::to_string(rco->segment.b_sum()));
  }));
  return out;
}

}  // namespace detail

inline Outcome cmd_selfcheck(const Problem& prob, const Options& opt = {}) {
  const std::uint64_t seed = opt.seed.value_or(prob.seed);
  return detail::with_oracle(prob, [&](const auto& o) {
    ordered_json out = detail::header("selfcheck", prob, o);
    auto checks = detail::run_checks(o, seed);
    ordered_json list = ordered_json::array();
    bool all = true;
    for (const auto& c : checks) {
      ordered_json item;
      item["name"] = c.name;
      item["status"] = c.status;
      item["detail"] = c.detail;
      list.push_back(item);
      all = all && c.status != "fail";
    }
    out["checks"] = list;
    out["all_pass"] = all;
    return Outcome{out, all ? ok : property_failure, std::nullopt};
  });
}

// --- rendering ----------------------------------------------------------------

namespace detail {

inline std::string scalar(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline std::string inline_value(const ordered_json& v) {
  if (!v.is_array()) return scalar(v);
  std::string out;
  for (const auto& e : v) {
    if (!out.empty()) out += e.is_array() ? " " : ", ";
    if (e.is_array()) {
      std::string block;
      for (const auto& x : e) block += (block.empty() ? "" : ",") + scalar(x);
      out += "{" + block + "}";
    } else {
      out += scalar(e);
    }
  }
  return out;
}

inline void flatten(const std::string& prefix, const ordered_json& v, std::vector<std::pair<std::string, std::string>>& rows) {
  if (v.is_object()) {
    for (const auto& [k, x] : v.items()) flatten(prefix.empty() ? k : prefix + "." + k, x, rows);
  } else if (v.is_array() && !v.empty() && v.front().is_object()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(prefix + "[" + std::to_string(i + 1) + "]", v[i], rows);
  } else {
    rows.emplace_back(prefix, inline_value(v));
  }
}

}  // namespace detail

/// Aligned two-column rendering of a report.
inline std::string render_table(const ordered_json& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  detail::flatten("", report, rows);
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream os;
  for (const auto& [k, v] : rows) os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  return os.str();
}

}  // namespace omni::commands
