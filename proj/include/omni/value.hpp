#pragma once

// Scalar value kinds shared by every solver: exact rationals (rank-valued
// oracles) and tolerance-compared doubles (pmf-valued oracles).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "omni/error.hpp"

namespace omni {

// Expression templates off: generic code stores intermediate results in
// auto variables.
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>, boost::multiprecision::et_off>;

/// Module-wide comparison tolerance for float-valued oracles.
inline constexpr double float_tolerance = 1e-9;

template <class V>
struct ValueTraits;

template <>
struct ValueTraits<Rational> {
  static constexpr bool exact = true;
  static Rational zero() { return Rational(0); }
  static Rational from_int(std::int64_t v) { return Rational(v); }
  static bool less(const Rational& a, const Rational& b) { return a < b; }
  static bool equal(const Rational& a, const Rational& b) { return a == b; }
  static double to_double(const Rational& a) { return a.convert_to<double>(); }
  static std::string to_string(const Rational& a) {
    return boost::multiprecision::numerator(a).str() + "/" + boost::multiprecision::denominator(a).str();
  }
};

template <>
struct ValueTraits<double> {
  static constexpr bool exact = false;
  static double zero() { return 0.0; }
  static double from_int(std::int64_t v) { return static_cast<double>(v); }
  static bool less(double a, double b) { return a < b - float_tolerance; }
  static bool equal(double a, double b) { return std::fabs(a - b) <= float_tolerance; }
  static double to_double(double a) { return a; }
  static std::string to_string(double a) {
    if (std::fabs(a) <= float_tolerance) a = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", a);
    return buf;
  }
};

template <class V>
bool less_equal(const V& a, const V& b) {
  return !ValueTraits<V>::less(b, a);
}

/// A value paired with its rate of change in a parameter beta, compared as
/// if beta were nudged by an infinitesimal in direction Dir (+1 right, -1
/// left). Ties in value are broken by slope, which makes minimizers the
/// ones that stay optimal on the chosen side of beta.
template <class V, int Dir>
struct Perturbed {
  static_assert(Dir == 1 || Dir == -1);
  V value{};
  std::int64_t slope = 0;

  friend Perturbed operator+(const Perturbed& a, const Perturbed& b) { return {a.value + b.value, a.slope + b.slope}; }
  friend Perturbed operator-(const Perturbed& a, const Perturbed& b) { return {a.value - b.value, a.slope - b.slope}; }
  Perturbed& operator+=(const Perturbed& o) {
    value += o.value;
    slope += o.slope;
    return *this;
  }
  Perturbed& operator-=(const Perturbed& o) {
    value -= o.value;
    slope -= o.slope;
    return *this;
  }
};

template <class V, int Dir>
struct ValueTraits<Perturbed<V, Dir>> {
  using P = Perturbed<V, Dir>;
  using Base = ValueTraits<V>;
  static constexpr bool exact = Base::exact;
  static P zero() { return {Base::zero(), 0}; }
  static P from_int(std::int64_t v) { return {Base::from_int(v), 0}; }
  static bool less(const P& a, const P& b) {
    if (Base::less(a.value, b.value)) return true;
    if (!Base::equal(a.value, b.value)) return false;
    return Dir * a.slope < Dir * b.slope;
  }
  static bool equal(const P& a, const P& b) { return Base::equal(a.value, b.value) && a.slope == b.slope; }
  static double to_double(const P& a) { return Base::to_double(a.value); }
  static std::string to_string(const P& a) {
    return Base::to_string(a.value) + (a.slope >= 0 ? " +" : " ") + std::to_string(a.slope) + "*d";
  }
};

/// Parses "num/den", an integer, or a finite decimal ("1.25") exactly.
inline Rational parse_rational(std::string_view text) {
  auto bad = [&] { return Error(Errc::invalid_input, "not a rational number: '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  auto parse_int = [&](std::string_view s) {
    if (s.empty()) throw bad();
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw bad();
    for (std::size_t k = i; k < s.size(); ++k)
      if (s[k] < '0' || s[k] > '9') throw bad();
    return BigInt(std::string(s[0] == '+' ? s.substr(1) : s));
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt num = parse_int(text.substr(0, slash));
    BigInt den = parse_int(text.substr(slash + 1));
    if (den == 0) throw bad();
    return Rational(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    std::string digits = std::string(whole) + std::string(frac);
    if (whole.empty() || whole == "-" || whole == "+") digits = std::string(whole) + "0" + std::string(frac);
    BigInt num = parse_int(digits);
    BigInt den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    return Rational(num, den);
  }
  return Rational(parse_int(text));
}

inline BigInt floor_div(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  BigInt q = num / den;
  if (num % den != 0 && num < 0) q -= 1;
  return q;
}

inline BigInt ceil_div(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  BigInt q = num / den;
  if (num % den != 0 && num > 0) q += 1;
  return q;
}

/// Label of the unit every entropy and rate is measured in. Two values may
/// only be combined when their units agree.
struct Unit {
  std::string label;
  friend bool operator==(const Unit&, const Unit&) = default;
};

inline Unit bits_unit() { return {"bits"}; }
inline Unit symbols_unit(std::uint64_t p) { return {"F_" + std::to_string(p) + "-symbols"}; }

}  // namespace omni
