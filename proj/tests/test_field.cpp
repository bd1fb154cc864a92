#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "omni/field.hpp"
#include "support/oracles.hpp"

using namespace omni;
using namespace omni::field;

namespace {

FieldMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, std::uint64_t p) {
  FieldMatrix m(r, c, p);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m.set(i, j, rng() % p);
  return m;
}

}  // namespace

TEST(FieldInverse, SmallCases) {
  EXPECT_EQ(ff_inv(FieldElem(1, 5)).value(), 1u);
  EXPECT_EQ(ff_inv(FieldElem(2, 5)).value(), 3u);
  try {
    ff_inv(FieldElem(0, 7));
    FAIL() << "expected ZeroInverse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_inverse);
  }
}

TEST(FieldInverse, LargePrime) {
  const std::uint64_t p = 2305843009213693951ULL;  // 2^61 - 1
  for (std::uint64_t a : {std::uint64_t{2}, std::uint64_t{3}, std::uint64_t{123456789}, p - 1}) {
    EXPECT_EQ(mul_mod(a, inv_mod(a, p), p), 1u);
  }
}

TEST(FieldAxioms, ExhaustiveSmallPrimes) {
  for (std::uint64_t p : {2, 3, 5, 7, 11}) {
    for (std::uint64_t a = 0; a < p; ++a) {
      FieldElem x(a, p);
      EXPECT_EQ((x + FieldElem(0, p)), x);
      EXPECT_EQ((x * FieldElem(1, p)), x);
      EXPECT_TRUE((x + (-x)).is_zero());
      if (a != 0) {
        EXPECT_EQ((x * ff_inv(x)).value(), 1u);
      }
      for (std::uint64_t b = 0; b < p; ++b) {
        FieldElem y(b, p);
        EXPECT_EQ(x + y, y + x);
        EXPECT_EQ(x * y, y * x);
        for (std::uint64_t c = 0; c < p; ++c) {
          FieldElem z(c, p);
          EXPECT_EQ(x * (y + z), x * y + x * z);
          EXPECT_EQ((x * y) * z, x * (y * z));
        }
      }
    }
  }
}

TEST(FieldModulus, RejectsCompositeWithPrimePowerHint) {
  try {
    require_prime_modulus(4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_input);
    EXPECT_NE(std::string(e.what()).find("prime power"), std::string::npos) << e.what();
  }
  EXPECT_THROW(require_prime_modulus(15), Error);
  EXPECT_NO_THROW(require_prime_modulus(101));
}

TEST(FieldElems, DifferentModuliDoNotMix) {
  EXPECT_THROW(FieldElem(1, 5) + FieldElem(1, 7), Error);
}

TEST(Rank, Examples) {
  EXPECT_EQ(rank(FieldMatrix::identity(4, 5)), 4u);
  EXPECT_EQ(rank(FieldMatrix(3, 6, 5)), 0u);
  const auto src = testkit::three_packets();
  EXPECT_EQ(rank(stack(src.a, 3, 5)), 3u);
}

TEST(Stack, ShapesAndEmpty) {
  const auto src = testkit::three_packets();
  FieldMatrix s = stack({src.a[0], src.a[1]});
  EXPECT_EQ(s.rows(), 4u);
  EXPECT_EQ(s.cols(), 3u);
  EXPECT_EQ(rank(s), 3u);

  std::vector<FieldMatrix> none;
  FieldMatrix e = stack(none, 3, 5);
  EXPECT_EQ(e.rows(), 0u);
  EXPECT_EQ(e.cols(), 3u);
  EXPECT_EQ(rank(e), 0u);
}

TEST(Stack, ColumnMismatchIsReported) {
  try {
    stack({FieldMatrix(1, 3, 5), FieldMatrix(1, 4, 5)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
  EXPECT_THROW(stack({FieldMatrix(1, 3, 5), FieldMatrix(1, 3, 7)}), Error);
}

TEST(Solve, IdentityAndZero) {
  std::vector<std::uint64_t> y{1, 2, 3};
  auto x = solve(FieldMatrix::identity(3, 5), y);
  ASSERT_TRUE(x);
  EXPECT_EQ(*x, y);

  std::vector<std::uint64_t> y2{1, 0};
  EXPECT_FALSE(solve(FieldMatrix(2, 2, 5), y2));
}

TEST(Solve, RandomInvertibleRoundTrip) {
  std::mt19937_64 rng(11);
  int done = 0;
  while (done < 50) {
    FieldMatrix m = random_matrix(rng, 5, 5, 7);
    if (rank(m) != 5) continue;
    std::vector<std::uint64_t> x0(5);
    for (auto& v : x0) v = rng() % 7;
    auto y = field::apply(m, x0);
    auto x = solve(m, y);
    ASSERT_TRUE(x);
    EXPECT_EQ(*x, x0);
    ++done;
  }
}

TEST(Solve, InconsistentOverdetermined) {
  FieldMatrix m = FieldMatrix::from_rows({{1, 0}, {1, 0}}, 5);
  std::vector<std::uint64_t> y{1, 2};
  EXPECT_FALSE(solve(m, y));
}

TEST(KronBlock, Examples) {
  const auto src = testkit::three_packets();
  EXPECT_EQ(kron_block(1, src.a[0]), src.a[0]);

  FieldMatrix three = FieldMatrix::from_rows({{3}}, 5);
  EXPECT_EQ(kron_block(2, three), FieldMatrix::from_rows({{3, 0}, {0, 3}}, 5));

  FieldMatrix k = kron_block(2, src.a[0]);
  EXPECT_EQ(k.rows(), 4u);
  EXPECT_EQ(k.cols(), 6u);
  EXPECT_EQ(rank(k), 4u);
  // Off-diagonal blocks are zero.
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 3; c < 6; ++c) EXPECT_EQ(k.at(r, c), 0u);
}

TEST(Rank, RandomBoundsAndTranspose) {
  std::mt19937_64 rng(2024);
  const std::uint64_t primes[] = {2, 3, 5, 7, 11, 101};
  for (int t = 0; t < 1000; ++t) {
    std::uint64_t p = primes[rng() % 6];
    std::size_t r = 1 + rng() % 7, c = 1 + rng() % 7;
    FieldMatrix a = random_matrix(rng, r, c, p);
    FieldMatrix b = random_matrix(rng, r, c, p);
    const std::size_t ra = rank(a);
    EXPECT_LE(ra, std::min(r, c));
    EXPECT_EQ(ra, rank(transpose(a)));
    // Stacking never lowers rank and adds at most the second's rank.
    const std::size_t rs = rank(stack({a, b}));
    EXPECT_GE(rs, ra);
    EXPECT_LE(rs, ra + rank(b));
  }
}

TEST(Determinant, AgreesWithRank) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    std::uint64_t p = (t % 2) ? 5 : 7;
    std::size_t n = 1 + rng() % 6;
    FieldMatrix a = random_matrix(rng, n, n, p);
    EXPECT_EQ(determinant(a) != 0, rank(a) == n);
  }
  EXPECT_EQ(determinant(FieldMatrix::from_rows({{1, 2}, {3, 4}}, 7)), 5u);  // -2 mod 7
}

TEST(Multiply, DimensionMismatch) {
  try {
    multiply(FieldMatrix(2, 3, 5), FieldMatrix(2, 3, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}
