#include <gtest/gtest.h>

#include <random>

#include "omni/minnorm.hpp"
#include "omni/sources.hpp"
#include "support/oracles.hpp"

using namespace omni;
using namespace omni::setfun;

namespace {

Rational exhaustive_min(const SetFunction<Rational>& g) {
  Rational best = 0;
  for (Mask s = 1; s <= g.ground().full(); ++s) best = std::min(best, g(s));
  return best;
}

}  // namespace

TEST(MinNorm, PenalizedElement) {
  SetFunction<Rational> g(GroundSet(4), [](Mask s) { return Rational(popcount(s) - (contains(s, 2) ? 2 : 0)); });
  auto r = sfm_minnorm(g);
  EXPECT_EQ(r.value, Rational(-1));
  EXPECT_EQ(r.minimizer, bit(2));
}

TEST(MinNorm, MonotoneNonnegativeHasEmptyMinimizer) {
  auto o = sources::linear_oracle(testkit::three_packets());
  auto r = sfm_minnorm(sources::as_setfunction(o));
  EXPECT_EQ(r.value, Rational(0));
  EXPECT_EQ(r.minimizer, Mask{0});
}

// Rank functions minus a random modular term: submodular with nontrivial
// minimizers.
TEST(MinNorm, AgreesWithBruteForce) {
  std::mt19937_64 rng(88);
  for (int t = 0; t < 60; ++t) {
    const int m = 2 + static_cast<int>(rng() % 11);
    auto src = testkit::random_linear_source(rng, m, 1 + rng() % 8, 7);
    auto o = sources::linear_oracle(src);
    std::vector<Rational> w(m);
    for (auto& x : w) x = Rational(static_cast<int>(rng() % 7), 2);
    SetFunction<Rational> g(GroundSet(m), [o, w](Mask s) { return o.entropy(s) - sum_over<Rational>(w, s); });
    auto r = sfm_minnorm(g);
    EXPECT_EQ(r.value, exhaustive_min(g)) << "m = " << m;
    EXPECT_EQ(g(r.minimizer), r.value);
  }
}

TEST(MinNorm, EightUserRankFunctions) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto o = sources::linear_oracle(testkit::random_linear_source(rng, 8, 6, 11));
    auto f = sources::as_setfunction_f_beta(o, o.total());
    // f(., H(M)) is submodular; shift by a modular term to get negative values.
    std::vector<Rational> w(8);
    for (auto& x : w) x = Rational(static_cast<int>(rng() % 5));
    SetFunction<Rational> g(GroundSet(8), [f, w](Mask s) { return f(s) - sum_over<Rational>(w, s); });
    EXPECT_EQ(sfm_minnorm(g).value, exhaustive_min(g));
  }
}
