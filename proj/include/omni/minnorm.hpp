#pragma once

// Unconstrained submodular minimization via the minimum-norm base
// (Fujishige-Wolfe). Runs in doubles; the returned set is re-evaluated
// exactly, so callers get the function's own value type back.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "omni/error.hpp"
#include "omni/setfun.hpp"
#include "omni/value.hpp"

namespace omni::setfun {

namespace minnorm_detail {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Solves the dense system a x = b in place by partial pivoting. Returns
// false when the matrix is numerically singular.
inline bool solve_dense(std::vector<Vec> a, Vec b, Vec& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    if (std::fabs(a[piv][c]) < 1e-14) return false;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      double k = a[r][c] / a[c][c];
      for (std::size_t t = c; t < n; ++t) a[r][t] -= k * a[c][t];
      b[r] -= k * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t t = c + 1; t < n; ++t) s -= a[c][t] * x[t];
    x[c] = s / a[c][c];
  }
  return true;
}

// Minimum-norm point of the affine hull of the corral: weights mu with
// sum 1 minimizing |sum mu_i q_i|.
inline bool affine_min(const std::vector<Vec>& pts, Vec& mu) {
  const std::size_t k = pts.size();
  std::vector<Vec> a(k + 1, Vec(k + 1, 0.0));
  Vec b(k + 1, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) a[i][j] = dot(pts[i], pts[j]);
    a[i][k] = 1.0;
    a[k][i] = 1.0;
  }
  b[k] = 1.0;
  Vec sol;
  if (!solve_dense(std::move(a), std::move(b), sol)) return false;
  mu.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(k));
  return true;
}

}  // namespace minnorm_detail

/// min over all S of g(S) for submodular g with g(empty) = 0.
template <class V>
SfmResult<V> sfm_minnorm(const SetFunction<V>& g, int max_iterations = 10000) {
  using minnorm_detail::Vec;
  using minnorm_detail::dot;
  const int m = g.size();
  std::vector<double> cache(std::size_t{1} << std::min(m, 20), std::nan(""));
  auto value = [&](Mask s) {
    if (s < cache.size()) {
      if (std::isnan(cache[s])) cache[s] = ValueTraits<V>::to_double(g(s));
      return cache[s];
    }
    return ValueTraits<V>::to_double(g(s));
  };
  // Greedy vertex of B(g) minimizing <w, q>: increasing order of w.
  auto vertex = [&](const Vec& w) {
    std::vector<int> ord(m);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return w[a] < w[b]; });
    Vec q(m, 0.0);
    Mask prefix = 0;
    double prev = 0.0;
    for (int i : ord) {
      prefix |= bit(i);
      double cur = value(prefix);
      q[i] = cur - prev;
      prev = cur;
    }
    return q;
  };

  double scale = 1.0;
  for (int i = 0; i < m; ++i) scale = std::max(scale, std::fabs(value(bit(i))));
  const double eps = 1e-12 * scale * scale * m;

  std::vector<Vec> corral{vertex(Vec(m, 0.0))};
  Vec lambda{1.0};
  Vec x = corral[0];
  int it = 0;
  while (true) {
    if (++it > max_iterations) throw Error(Errc::non_convergence, "min-norm point did not converge");
    Vec q = vertex(x);
    if (dot(x, x) <= dot(x, q) + eps) break;
    bool duplicate = false;
    for (const auto& c : corral) {
      double d = 0.0;
      for (int i = 0; i < m; ++i) d = std::max(d, std::fabs(c[i] - q[i]));
      if (d <= 1e-12 * scale) duplicate = true;
    }
    if (duplicate) break;
    corral.push_back(q);
    lambda.push_back(0.0);
    while (true) {
      Vec mu;
      if (!minnorm_detail::affine_min(corral, mu)) throw Error(Errc::non_convergence, "degenerate corral");
      Vec y(m, 0.0);
      for (std::size_t k = 0; k < corral.size(); ++k)
        for (int i = 0; i < m; ++i) y[i] += mu[k] * corral[k][i];
      bool interior = std::all_of(mu.begin(), mu.end(), [](double v) { return v > 1e-15; });
      if (interior) {
        x = y;
        lambda = mu;
        break;
      }
      double theta = 1.0;
      for (std::size_t k = 0; k < mu.size(); ++k)
        if (mu[k] <= 1e-15) theta = std::min(theta, lambda[k] / (lambda[k] - mu[k]));
      for (std::size_t k = 0; k < mu.size(); ++k) lambda[k] = theta * mu[k] + (1.0 - theta) * lambda[k];
      for (int i = 0; i < m; ++i) x[i] = theta * y[i] + (1.0 - theta) * x[i];
      std::vector<Vec> keep;
      Vec keep_l;
      for (std::size_t k = 0; k < corral.size(); ++k) {
        if (lambda[k] > 1e-15) {
          keep.push_back(corral[k]);
          keep_l.push_back(lambda[k]);
        }
      }
      corral = std::move(keep);
      lambda = std::move(keep_l);
      if (corral.size() == 1) {
        x = corral[0];
        lambda = {1.0};
        break;
      }
    }
  }

  // A minimizer is a level set of the min-norm base: try every prefix of
  // the coordinates sorted ascending and keep the exact best.
  std::vector<int> ord(m);
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return x[a] < x[b]; });
  SfmResult<V> best{ValueTraits<V>::zero(), 0, 0};
  Mask prefix = 0;
  for (int i : ord) {
    prefix |= bit(i);
    V v = g(prefix);
    ++best.evaluations;
    if (ValueTraits<V>::less(v, best.value)) {
      best.value = v;
      best.minimizer = prefix;
    }
  }
  return best;
}

}  // namespace omni::setfun
