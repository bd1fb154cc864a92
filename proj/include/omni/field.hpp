#pragma once

// Prime-field arithmetic and dense linear algebra over F_p.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "omni/error.hpp"

namespace omni::field {

inline constexpr std::uint64_t max_modulus = std::uint64_t{1} << 61;

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % p);
}

inline std::uint64_t add_mod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  std::uint64_t s = a + b;  // a, b < 2^61, no overflow
  return s >= p ? s - p : s;
}

inline std::uint64_t sub_mod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return a >= b ? a - b : a + p - b;
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t e, std::uint64_t p) {
  std::uint64_t result = 1 % p;
  base %= p;
  while (e > 0) {
    if (e & 1U) result = mul_mod(result, base, p);
    base = mul_mod(base, base, p);
    e >>= 1U;
  }
  return result;
}

/// Deterministic Miller-Rabin; the witness set is exact for all 64-bit inputs.
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t small : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % small == 0) return n == small;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1U) == 0) {
    d >>= 1U;
    ++s;
  }
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Rejects anything that is not a prime in [2, 2^61). Prime powers get a
/// hint, since only prime fields are supported.
inline void require_prime_modulus(std::uint64_t p, std::size_t users = 0) {
  if (p >= max_modulus) {
    throw Error(Errc::invalid_input, "modulus " + std::to_string(p) + " exceeds 2^61");
  }
  if (is_prime(p)) return;
  std::string msg = "modulus " + std::to_string(p) + " is not prime; only prime fields are supported";
  for (std::uint64_t q = 2; q * q <= p && p > 3; ++q) {
    std::uint64_t r = p;
    while (r % q == 0) r /= q;
    if (r == 1) {
      msg += " (" + std::to_string(p) + " is a prime power; use a prime p > " + std::to_string(users) + " instead)";
      break;
    }
    if (p % q == 0) break;
  }
  throw Error(Errc::invalid_input, msg);
}

class FieldElem {
 public:
  FieldElem(std::uint64_t value, std::uint64_t modulus) : value_(value % modulus), p_(modulus) {}

  std::uint64_t value() const noexcept { return value_; }
  std::uint64_t modulus() const noexcept { return p_; }
  bool is_zero() const noexcept { return value_ == 0; }

  friend FieldElem operator+(FieldElem a, FieldElem b) {
    same_field(a, b);
    return {add_mod(a.value_, b.value_, a.p_), a.p_};
  }
  friend FieldElem operator-(FieldElem a, FieldElem b) {
    same_field(a, b);
    return {sub_mod(a.value_, b.value_, a.p_), a.p_};
  }
  friend FieldElem operator*(FieldElem a, FieldElem b) {
    same_field(a, b);
    return {mul_mod(a.value_, b.value_, a.p_), a.p_};
  }
  FieldElem operator-() const { return {sub_mod(0, value_, p_), p_}; }

  friend bool operator==(const FieldElem&, const FieldElem&) = default;

 private:
  static void same_field(const FieldElem& a, const FieldElem& b) {
    if (a.p_ != b.p_) throw Error(Errc::dimension_mismatch, "field elements from different moduli");
  }

  std::uint64_t value_;
  std::uint64_t p_;
};

inline FieldElem ff_inv(FieldElem a) {
  if (a.is_zero()) throw Error(Errc::zero_inverse, "zero has no multiplicative inverse");
  // Fermat: a^(p-2) for prime p.
  return {pow_mod(a.value(), a.modulus() - 2, a.modulus()), a.modulus()};
}

inline std::uint64_t inv_mod(std::uint64_t a, std::uint64_t p) { return ff_inv(FieldElem(a, p)).value(); }

/// Dense row-major matrix over F_p. Entries are stored reduced to [0, p).
class FieldMatrix {
 public:
  FieldMatrix() = default;
  FieldMatrix(std::size_t rows, std::size_t cols, std::uint64_t p)
      : rows_(rows), cols_(cols), p_(p), data_(rows * cols, 0) {}

  static FieldMatrix identity(std::size_t n, std::uint64_t p) {
    FieldMatrix m(n, n, p);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1);
    return m;
  }

  static FieldMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows, std::size_t cols,
                               std::uint64_t p) {
    FieldMatrix m(rows.size(), cols, p);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        throw Error(Errc::dimension_mismatch, "row " + std::to_string(r) + " has " +
                                                  std::to_string(rows[r].size()) + " entries, expected " +
                                                  std::to_string(cols));
      }
      for (std::size_t c = 0; c < cols; ++c) m.set(r, c, rows[r][c]);
    }
    return m;
  }

  static FieldMatrix from_rows(std::initializer_list<std::initializer_list<std::uint64_t>> rows,
                               std::uint64_t p) {
    std::vector<std::vector<std::uint64_t>> v;
    for (const auto& r : rows) v.emplace_back(r);
    return from_rows(v, v.empty() ? 0 : v.front().size(), p);
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::uint64_t modulus() const noexcept { return p_; }

  std::uint64_t at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  FieldElem elem(std::size_t r, std::size_t c) const { return {at(r, c), p_}; }
  void set(std::size_t r, std::size_t c, std::uint64_t v) { data_[r * cols_ + c] = v % p_; }

  std::span<const std::uint64_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<std::uint64_t> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::vector<std::vector<std::uint64_t>> to_rows() const {
    std::vector<std::vector<std::uint64_t>> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
    return out;
  }

  friend bool operator==(const FieldMatrix&, const FieldMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::uint64_t p_ = 2;
  std::vector<std::uint64_t> data_;
};

struct Echelon {
  FieldMatrix reduced;               // reduced row echelon form
  std::vector<std::size_t> pivots;   // pivot column of each nonzero row
};

/// Gauss-Jordan elimination to reduced row echelon form.
inline Echelon row_reduce(FieldMatrix m) {
  const std::uint64_t p = m.modulus();
  std::vector<std::size_t> pivots;
  std::size_t lead = 0;
  for (std::size_t c = 0; c < m.cols() && lead < m.rows(); ++c) {
    std::size_t pr = lead;
    while (pr < m.rows() && m.at(pr, c) == 0) ++pr;
    if (pr == m.rows()) continue;
    if (pr != lead) {
      auto a = m.row(pr);
      auto b = m.row(lead);
      std::swap_ranges(a.begin(), a.end(), b.begin());
    }
    const std::uint64_t inv = inv_mod(m.at(lead, c), p);
    for (auto& x : m.row(lead)) x = mul_mod(x, inv, p);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (r == lead) continue;
      const std::uint64_t factor = m.at(r, c);
      if (factor == 0) continue;
      auto dst = m.row(r);
      auto src = m.row(lead);
      for (std::size_t k = c; k < m.cols(); ++k) dst[k] = sub_mod(dst[k], mul_mod(factor, src[k], p), p);
    }
    pivots.push_back(c);
    ++lead;
  }
  return {std::move(m), std::move(pivots)};
}

inline std::size_t rank(const FieldMatrix& m) {
  // Forward elimination only; cheaper than the full reduction.
  FieldMatrix w = m;
  const std::uint64_t p = w.modulus();
  std::size_t r = 0;
  for (std::size_t c = 0; c < w.cols() && r < w.rows(); ++c) {
    std::size_t pr = r;
    while (pr < w.rows() && w.at(pr, c) == 0) ++pr;
    if (pr == w.rows()) continue;
    if (pr != r) {
      auto a = w.row(pr);
      auto b = w.row(r);
      std::swap_ranges(a.begin(), a.end(), b.begin());
    }
    const std::uint64_t inv = inv_mod(w.at(r, c), p);
    for (std::size_t below = r + 1; below < w.rows(); ++below) {
      const std::uint64_t factor = mul_mod(w.at(below, c), inv, p);
      if (factor == 0) continue;
      auto dst = w.row(below);
      auto src = w.row(r);
      for (std::size_t k = c; k < w.cols(); ++k) dst[k] = sub_mod(dst[k], mul_mod(factor, src[k], p), p);
    }
    ++r;
  }
  return r;
}

inline FieldMatrix stack(std::span<const FieldMatrix> parts, std::size_t cols, std::uint64_t p) {
  std::size_t total = 0;
  for (const auto& part : parts) {
    if (part.cols() != cols || part.modulus() != p) {
      throw Error(Errc::dimension_mismatch, "stacked parts must share column count and modulus");
    }
    total += part.rows();
  }
  FieldMatrix out(total, cols, p);
  std::size_t r0 = 0;
  for (const auto& part : parts) {
    for (std::size_t r = 0; r < part.rows(); ++r) {
      auto src = part.row(r);
      std::copy(src.begin(), src.end(), out.row(r0 + r).begin());
    }
    r0 += part.rows();
  }
  return out;
}

inline FieldMatrix stack(std::span<const FieldMatrix> parts) {
  if (parts.empty()) throw Error(Errc::dimension_mismatch, "cannot infer shape of an empty stack");
  return stack(parts, parts.front().cols(), parts.front().modulus());
}

inline FieldMatrix stack(std::initializer_list<FieldMatrix> parts) {
  return stack(std::span<const FieldMatrix>(parts.begin(), parts.size()));
}

inline FieldMatrix multiply(const FieldMatrix& a, const FieldMatrix& b) {
  if (a.cols() != b.rows() || a.modulus() != b.modulus()) {
    throw Error(Errc::dimension_mismatch, "matrix product shape mismatch");
  }
  const std::uint64_t p = a.modulus();
  FieldMatrix out(a.rows(), b.cols(), p);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const std::uint64_t aik = a.at(i, k);
      if (aik == 0) continue;
      auto dst = out.row(i);
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] = add_mod(dst[j], mul_mod(aik, src[j], p), p);
    }
  }
  return out;
}

inline std::vector<std::uint64_t> apply(const FieldMatrix& a, std::span<const std::uint64_t> x) {
  if (x.size() != a.cols()) throw Error(Errc::dimension_mismatch, "vector length does not match columns");
  const std::uint64_t p = a.modulus();
  std::vector<std::uint64_t> y(a.rows(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::uint64_t acc = 0;
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) acc = add_mod(acc, mul_mod(r[j], x[j] % p, p), p);
    y[i] = acc;
  }
  return y;
}

inline FieldMatrix transpose(const FieldMatrix& a) {
  FieldMatrix t(a.cols(), a.rows(), a.modulus());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t.set(c, r, a.at(r, c));
  return t;
}

inline FieldMatrix select_rows(const FieldMatrix& a, std::span<const std::size_t> idx) {
  FieldMatrix out(idx.size(), a.cols(), a.modulus());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = a.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// Solves M x = y. Free variables are set to zero; returns nullopt when
/// the system is inconsistent.
inline std::optional<std::vector<std::uint64_t>> solve(const FieldMatrix& m, std::span<const std::uint64_t> y) {
  if (y.size() != m.rows()) throw Error(Errc::dimension_mismatch, "right-hand side length differs from rows");
  FieldMatrix aug(m.rows(), m.cols() + 1, m.modulus());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) aug.set(r, c, m.at(r, c));
    aug.set(r, m.cols(), y[r]);
  }
  Echelon e = row_reduce(std::move(aug));
  std::vector<std::uint64_t> x(m.cols(), 0);
  for (std::size_t i = 0; i < e.pivots.size(); ++i) {
    if (e.pivots[i] == m.cols()) return std::nullopt;
    x[e.pivots[i]] = e.reduced.at(i, m.cols());
  }
  return x;
}

inline std::uint64_t determinant(const FieldMatrix& m) {
  if (m.rows() != m.cols()) throw Error(Errc::dimension_mismatch, "determinant of a non-square matrix");
  FieldMatrix w = m;
  const std::uint64_t p = w.modulus();
  std::uint64_t det = 1 % p;
  const std::size_t n = w.rows();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pr = c;
    while (pr < n && w.at(pr, c) == 0) ++pr;
    if (pr == n) return 0;
    if (pr != c) {
      auto a = w.row(pr);
      auto b = w.row(c);
      std::swap_ranges(a.begin(), a.end(), b.begin());
      det = sub_mod(0, det, p);
    }
    det = mul_mod(det, w.at(c, c), p);
    const std::uint64_t inv = inv_mod(w.at(c, c), p);
    for (std::size_t r = c + 1; r < n; ++r) {
      const std::uint64_t factor = mul_mod(w.at(r, c), inv, p);
      if (factor == 0) continue;
      auto dst = w.row(r);
      auto src = w.row(c);
      for (std::size_t k = c; k < n; ++k) dst[k] = sub_mod(dst[k], mul_mod(factor, src[k], p), p);
    }
  }
  return det;
}

/// Block-diagonal repetition diag(A, ..., A) with n copies: the observation
/// map of n independent instances.
inline FieldMatrix kron_block(std::size_t n, const FieldMatrix& a) {
  if (n == 0) throw Error(Errc::invalid_n, "block count must be at least 1");
  FieldMatrix out(n * a.rows(), n * a.cols(), a.modulus());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c) out.set(b * a.rows() + r, b * a.cols() + c, a.at(r, c));
  return out;
}

}  // namespace omni::field
