#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "omni/setfun.hpp"
#include "omni/sources.hpp"
#include "support/oracles.hpp"

using namespace omni;
using namespace omni::setfun;

namespace {

// f({1}) = 4, f({2}) = 3, f({1,2}) = top.
SetFunction<Rational> two_user(int top) {
  return tabulate<Rational>(GroundSet(2), {Rational(0), Rational(4), Rational(3), Rational(top)});
}

SetFunction<Rational> modular(std::vector<Rational> w) {
  const int m = static_cast<int>(w.size());
  return SetFunction<Rational>(GroundSet(m), [w](Mask s) { return sum_over<Rational>(w, s); });
}

// Rank function of a random linear source: a random submodular function.
SetFunction<Rational> random_rank_function(std::mt19937_64& rng, int m) {
  const std::uint64_t primes[] = {5, 7, 11};
  auto src = testkit::random_linear_source(rng, m, 1 + rng() % 6, primes[rng() % 3]);
  return sources::as_setfunction(sources::linear_oracle(src));
}

std::vector<Rational> rationals(std::initializer_list<int> v) {
  std::vector<Rational> out;
  for (int x : v) out.emplace_back(x);
  return out;
}

}  // namespace

TEST(Submodularity, TwoUserExamples) {
  EXPECT_TRUE(is_submodular(two_user(6)));
  EXPECT_FALSE(is_submodular(two_user(8)));
  EXPECT_TRUE(is_intersecting_submodular(two_user(8)));
  EXPECT_TRUE(is_submodular(modular(rationals({1, -2, 5, 0}))));
}

TEST(Submodularity, ShiftedEntropyIsIntersectingSubmodular) {
  auto o = sources::linear_oracle(testkit::three_packets());
  auto f0 = sources::as_setfunction_f_beta(o, Rational(0));
  EXPECT_TRUE(is_intersecting_submodular(f0));
  EXPECT_FALSE(is_submodular(f0));
}

TEST(Submodularity, LocalCheckMatchesPairwiseDefinition) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 300; ++t) {
    const int m = 1 + static_cast<int>(rng() % 4);
    std::vector<Rational> table(std::size_t{1} << m);
    for (std::size_t s = 1; s < table.size(); ++s) table[s] = Rational(static_cast<int>(rng() % 7));
    auto f = tabulate<Rational>(GroundSet(m), table);
    bool pairwise = true, intersecting = true;
    for (Mask a = 0; a < table.size(); ++a) {
      for (Mask b = 0; b < table.size(); ++b) {
        bool ok = table[a] + table[b] >= table[a | b] + table[a & b];
        if (!ok) pairwise = false;
        if (!ok && (a & b)) intersecting = false;
      }
    }
    EXPECT_EQ(is_submodular(f), pairwise);
    EXPECT_EQ(is_intersecting_submodular(f), intersecting);
  }
}

TEST(Submodularity, TooLarge) {
  SetFunction<Rational> f(GroundSet(17), [](Mask s) { return Rational(popcount(s)); });
  try {
    is_submodular(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_large);
  }
}

TEST(Dual, ValuesAndInvolution) {
  auto f = two_user(6);
  auto d = dual(f);
  EXPECT_EQ(d(0b01), Rational(3));
  EXPECT_EQ(d(0b10), Rational(2));
  EXPECT_EQ(d(0b11), Rational(6));

  SetFunction<Rational> zero(GroundSet(3), [](Mask) { return Rational(0); });
  for (Mask s = 0; s < 8; ++s) EXPECT_EQ(dual(zero)(s), Rational(0));

  std::mt19937_64 rng(3);
  for (int m : {3, 6, 12}) {
    auto g = random_rank_function(rng, m);
    auto dd = dual(dual(g));
    for (Mask s = 0; s < (Mask{1} << m); ++s) ASSERT_EQ(dd(s), g(s));
  }
}

TEST(Dual, BasePolyhedraCoincide) {
  // B(f, <=) = B(f*, >=), checked on every integer point of a box.
  std::mt19937_64 rng(8);
  for (int t = 0; t < 40; ++t) {
    const int m = 2 + static_cast<int>(rng() % 2);
    auto f = random_rank_function(rng, m);
    auto d = dual(f);
    const Mask full = (Mask{1} << m) - 1;
    const int top = static_cast<int>(f(full).convert_to<int>());
    std::vector<int> z(m, -1);
    while (true) {
      std::vector<Rational> zr(z.begin(), z.end());
      bool in_f = sum_over<Rational>(zr, full) == f(full), in_d = sum_over<Rational>(zr, full) == d(full);
      for (Mask s = 1; s <= full; ++s) {
        if (sum_over<Rational>(zr, s) > f(s)) in_f = false;
        if (sum_over<Rational>(zr, s) < d(s)) in_d = false;
      }
      EXPECT_EQ(in_f, in_d);
      int k = 0;
      while (k < m && ++z[k] > top + 1) z[k++] = -1;
      if (k == m) break;
    }
  }
}

TEST(EdmondGreedy, Examples) {
  auto f = two_user(6);
  auto hi1 = rationals({5, 1});
  auto hi2 = rationals({1, 5});
  EXPECT_EQ(edmond_greedy(f, std::span<const Rational>(hi1)), rationals({4, 2}));
  EXPECT_EQ(edmond_greedy(f, std::span<const Rational>(hi2)), rationals({3, 3}));

  auto w = rationals({2, -1, 4});
  auto alpha = rationals({1, 3, 2});
  EXPECT_EQ(edmond_greedy(modular(w), std::span<const Rational>(alpha)), w);
}

TEST(EdmondGreedy, NegativeWeightRejected) {
  auto f = two_user(6);
  auto alpha = rationals({1, -1});
  try {
    edmond_greedy(f, std::span<const Rational>(alpha));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::negative_weight);
  }
}

TEST(EdmondGreedy, OptimalAgainstRandomFeasiblePoints) {
  std::mt19937_64 rng(99);
  for (int inst = 0; inst < 10; ++inst) {
    const int m = 2 + static_cast<int>(rng() % 4);
    auto f = random_rank_function(rng, m);
    std::vector<Rational> alpha(m);
    for (auto& a : alpha) a = Rational(static_cast<int>(rng() % 10));
    auto z = edmond_greedy(f, std::span<const Rational>(alpha));
    const Mask full = (Mask{1} << m) - 1;
    EXPECT_TRUE(in_polyhedron(f, std::span<const Rational>(z)));
    EXPECT_EQ(sum_over<Rational>(z, full), f(full));
    Rational best = 0;
    for (int i = 0; i < m; ++i) best += alpha[i] * z[i];
    // Random points of P(f): shrink a random vector until it fits.
    for (int k = 0; k < 1000; ++k) {
      std::vector<Rational> y(m);
      for (auto& v : y) v = Rational(static_cast<int>(rng() % 13) - 6, 2);
      while (!in_polyhedron(f, std::span<const Rational>(y)))
        for (auto& v : y) v -= 1;
      Rational val = 0;
      for (int i = 0; i < m; ++i) val += alpha[i] * y[i];
      ASSERT_LE(val, best);
    }
  }
}

TEST(SfmConstrained, Examples) {
  auto f = two_user(8);
  auto z = rationals({4, 0});
  auto r = sfm_constrained(f, std::span<const Rational>(z), 1, 0b11);
  EXPECT_EQ(r.value, Rational(3));
  EXPECT_EQ(r.minimizer, Mask{0b10});

  auto zero = rationals({0, 0});
  auto single = sfm_constrained(f, std::span<const Rational>(zero), 0, 0b01);
  EXPECT_EQ(single.value, Rational(4));
  EXPECT_EQ(single.minimizer, Mask{0b01});
}

TEST(SfmConstrained, MatchesExhaustiveMinimum) {
  std::mt19937_64 rng(1234);
  for (int t = 0; t < 40; ++t) {
    const int m = 2 + static_cast<int>(rng() % 11);
    auto f = random_rank_function(rng, m);
    std::vector<Rational> z(m);
    for (auto& v : z) v = Rational(static_cast<int>(rng() % 5) - 2);
    const int j = static_cast<int>(rng() % m);
    const Mask a = (rng() & ((Mask{1} << m) - 1)) | bit(j);
    auto r = sfm_constrained(f, std::span<const Rational>(z), j, a);
    std::optional<Rational> best;
    Mask uni = 0;
    for (Mask s = 1; s < (Mask{1} << m); ++s) {
      if ((s & ~a) || !contains(s, j)) continue;
      Rational v = f(s) - sum_over<Rational>(z, s);
      if (!best || v < *best) {
        best = v;
        uni = s;
      } else if (v == *best) {
        uni |= s;
      }
    }
    EXPECT_EQ(r.value, *best);
    EXPECT_EQ(r.minimizer, uni);
    EXPECT_EQ(f(r.minimizer) - sum_over<Rational>(z, r.minimizer), *best);
  }
}

TEST(SfmConstrained, ConstraintViolation) {
  auto f = two_user(6);
  auto z = rationals({0, 0});
  try {
    sfm_constrained(f, std::span<const Rational>(z), 1, 0b01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::constraint_violation);
  }
}

TEST(ModifiedEdmond, RawSetFunction) {
  auto f = two_user(8);
  auto alpha = rationals({5, 1});
  auto r = modified_edmond(f, std::span<const Rational>(alpha), Order::descending);
  EXPECT_EQ(r.z, rationals({4, 3}));
}

TEST(Dilworth, Examples) {
  auto d = dilworth_bruteforce(two_user(8), 0b11);
  EXPECT_EQ(d.value, Rational(7));
  EXPECT_EQ(d.partition, (Partition{0b01, 0b10}));

  auto c = dilworth_bruteforce(two_user(6), 0b11);
  EXPECT_EQ(c.value, Rational(6));
  EXPECT_EQ(c.partition, (Partition{0b11}));

  auto s = dilworth_bruteforce(two_user(6), 0b01);
  EXPECT_EQ(s.value, Rational(4));
  EXPECT_EQ(s.partition, (Partition{0b01}));
}

TEST(Dilworth, TooLarge) {
  SetFunction<Rational> f(GroundSet(13), [](Mask s) { return Rational(popcount(s)); });
  EXPECT_THROW(dilworth_bruteforce(f, f.ground().full()), Error);
}

TEST(Partitions, BellNumbers) {
  const std::size_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140};
  for (int k = 0; k <= 8; ++k) {
    std::size_t count = 0;
    const Mask s = (Mask{1} << k) - 1;
    for_each_partition(s, [&](const Partition& p) {
      Mask uni = 0;
      for (Mask b : p) {
        EXPECT_NE(b, 0u);
        EXPECT_EQ(uni & b, 0u);
        uni |= b;
      }
      EXPECT_EQ(uni, s);
      ++count;
    });
    EXPECT_EQ(count, bell[k]) << "k = " << k;
  }
}

TEST(Polyhedron, Membership) {
  auto f = two_user(6);
  auto a = rationals({4, 2});
  auto b = rationals({4, 3});
  auto zero = rationals({0, 0});
  EXPECT_TRUE(in_polyhedron(f, std::span<const Rational>(a)));
  EXPECT_FALSE(in_polyhedron(f, std::span<const Rational>(b)));
  EXPECT_TRUE(in_polyhedron(f, std::span<const Rational>(zero)));
}

TEST(SetFunction, MustVanishOnEmptySet) {
  EXPECT_THROW(SetFunction<Rational>(GroundSet(2), [](Mask) { return Rational(1); }), Error);
  EXPECT_THROW(GroundSet(0), Error);
  EXPECT_THROW(GroundSet(63), Error);
}

TEST(WeightOrder, TiesGoToLowerIndex) {
  auto alpha = rationals({2, 5, 2, 5});
  auto d = weight_order(std::span<const Rational>(alpha), Order::descending);
  EXPECT_EQ(d, (std::vector<int>{1, 3, 0, 2}));
  auto a = weight_order(std::span<const Rational>(alpha), Order::ascending);
  EXPECT_EQ(a, (std::vector<int>{0, 2, 1, 3}));
}
