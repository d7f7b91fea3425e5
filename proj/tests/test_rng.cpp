// SPDX-License-Identifier: Apache-2.0
#include "waveft/rng.hpp"
#include "waveft/support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace waveft;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedSeedsDependOnPathOrder) {
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {0}), derive_seed(2, {0}));
  EXPECT_EQ(derive_seed(9, {4, 5}), derive_seed(9, {4, 5}));
}

TEST(Rng, BelowStaysInRangeAndHitsEveryValue) {
  Rng r(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 850);  // 1000 expected, sd ~29
}

TEST(Rng, UniformMoments) {
  Rng r(5);
  double s = 0, s2 = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / N, 0.5, 4 * std::sqrt(1.0 / 12 / N));
  EXPECT_NEAR(s2 / N, 1.0 / 3, 0.005);
}

TEST(Rng, NormalMoments) {
  Rng r(6);
  double s = 0, s2 = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / N, 0.0, 4 / std::sqrt(N));
  EXPECT_NEAR(s2 / N, 1.0, 4 * std::sqrt(2.0 / N));
}

TEST(Support, EmptyAndFull) {
  EXPECT_EQ(sample_support(3, 4, 0, 1).size(), 0);
  const auto full = sample_support(3, 4, 12, 1);
  ASSERT_EQ(full.size(), 12);
  for (Index t = 0; t < 12; ++t) EXPECT_EQ(full.positions[t], (Position{t / 4, t % 4}));
}

TEST(Support, DeterministicInSeed) {
  const auto a = sample_support(4, 4, 5, 7), b = sample_support(4, 4, 5, 7);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_NE(a.positions, sample_support(4, 4, 5, 8).positions);
}

TEST(Support, SortedDistinctInRange) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = sample_support(13, 17, 60, seed);
    ASSERT_EQ(s.size(), 60);
    EXPECT_TRUE(std::is_sorted(s.positions.begin(), s.positions.end()));
    EXPECT_EQ(std::adjacent_find(s.positions.begin(), s.positions.end()), s.positions.end());
    for (const auto& p : s.positions) {
      EXPECT_LT(p.row, 13);
      EXPECT_LT(p.col, 17);
    }
  }
}

TEST(Support, MarginalsAreUniform) {
  // Each of 20 cells should be chosen with probability 5/20 = 0.25.
  std::vector<int> counts(20, 0);
  const int T = 8000;
  for (int s = 0; s < T; ++s)
    for (const auto& p : sample_support(4, 5, 5, static_cast<std::uint64_t>(s)).positions)
      ++counts[static_cast<std::size_t>(p.row * 5 + p.col)];
  const double sd = std::sqrt(T * 0.25 * 0.75);
  for (int c : counts) EXPECT_NEAR(c, T * 0.25, 5 * sd);
}

TEST(Support, RejectsOutOfRange) {
  EXPECT_THROW(sample_support(2, 2, 5, 0), std::invalid_argument);
  EXPECT_THROW(sample_support(2, 2, -1, 0), std::invalid_argument);
  EXPECT_THROW(sample_support(0, 2, 0, 0), std::invalid_argument);
}

TEST(Support, RowOccupancySumsToP) {
  const auto s = sample_support(10, 10, 37, 3);
  const auto occ = row_occupancy(s);
  Index total = 0;
  for (auto c : occ) total += c;
  EXPECT_EQ(total, 37);
}
