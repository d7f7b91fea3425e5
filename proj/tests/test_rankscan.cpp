// SPDX-License-Identifier: Apache-2.0
#include "waveft/rankscan.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <cmath>

using namespace waveft;

namespace {

// SVD-based count with the same tolerance rule, as an independent route.
Index svd_rank(const Matrix& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  const double tol = static_cast<double>(std::max(a.rows(), a.cols())) * 2.220446049250313e-16 * s[0];
  return (s.array() > tol).count();
}

}  // namespace

TEST(NumericalRank, SmallCases) {
  EXPECT_EQ(numerical_rank(Matrix::Identity(4, 4)), 4);
  EXPECT_EQ(numerical_rank(Matrix::Zero(3, 5)), 0);
  Rng rng(1);
  Vector u(6), v(4);
  for (Index i = 0; i < 6; ++i) u[i] = rng.normal();
  for (Index i = 0; i < 4; ++i) v[i] = rng.normal();
  EXPECT_EQ(numerical_rank(u * v.transpose()), 1);
}

TEST(NumericalRank, AgreesWithSvd) {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const Index m = 5 + t % 9, n = 4 + t % 11, r = 1 + t % 5;
    Matrix a(m, r), b(r, n);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    EXPECT_EQ(numerical_rank(a * b), svd_rank(a * b));
  }
}

TEST(SparseRank, MatchesDenseRank) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Index m = 3 + static_cast<Index>(seed % 17), n = 2 + static_cast<Index>(seed % 23);
    const Index p = static_cast<Index>(seed * 7 % static_cast<std::uint64_t>(m * n + 1));
    const auto dist = seed % 2 ? ValueDist::unit : ValueDist::gaussian;
    const auto entries = random_sparse_entries(m, n, p, seed, dist);
    Matrix dense = Matrix::Zero(m, n);
    for (const auto& e : entries) dense(e.row, e.col) = e.value;
    EXPECT_EQ(sparse_rank(m, n, entries), svd_rank(dense)) << "seed " << seed;
  }
}

TEST(SparseMatrix, EdgeCounts) {
  EXPECT_EQ(numerical_rank(random_sparse_matrix(8, 8, 0, 1)), 0);
  EXPECT_EQ(numerical_rank(random_sparse_matrix(8, 8, 1, 1)), 1);
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(numerical_rank(random_sparse_matrix(9, 6, 54, s)), 6);
  const Matrix a = random_sparse_matrix(10, 12, 37, 4);
  EXPECT_EQ((a.array() != 0.0).count(), 37);
  const Matrix u = random_sparse_matrix(10, 12, 37, 4, ValueDist::unit);
  EXPECT_TRUE(((u.array() == 0.0) || (u.array().abs() == 1.0)).all());
}

TEST(FullRankPrediction, KnownValues) {
  EXPECT_NEAR(full_rank_prediction(100, static_cast<Index>(std::round(100 * std::log(100.0)))).probability,
              std::exp(-2.0), 2e-3);
  EXPECT_EQ(support_size_for_offset(784, 0.0), 5225);
  const Index p10 = support_size_for_offset(50, 10.0);
  EXPECT_NEAR(full_rank_prediction(50, p10).probability, 1.0, 1e-4);
  EXPECT_THROW(full_rank_prediction(1, 3), std::invalid_argument);
}

TEST(RankScan, ZeroGridGivesZeroRank) {
  RankScanConfig c{{20, 30}, {0}, 5, 1};
  const auto r = rank_scan(c);
  for (const auto& rec : r.records) EXPECT_EQ(rec.rank, 0);
  EXPECT_EQ(r.summary.front().mean, 0.0);
}

TEST(RankScan, RankBoundedByOccupiedLines) {
  RankScanConfig c{{40, 60}, {10, 50, 100, 200, 400}, 8, 3};
  for (const auto& rec : rank_scan(c).records) {
    EXPECT_LE(rec.rank, std::min({rec.nonempty_rows, rec.nonempty_cols, Index{40}}));
  }
}

TEST(RankScan, DeterministicAndThreadIndependent) {
  RankScanConfig c{{64, 64}, {64, 128, 256}, 6, 11};
  const auto a = rank_scan(c);
  c.threads = 3;
  const auto b = rank_scan(c);
  ASSERT_EQ(a.records.size(), 18u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].p, b.records[i].p);
    EXPECT_EQ(a.records[i].rank, b.records[i].rank);
  }
}

TEST(RankScan, MeanRankGrowsWithSupport) {
  const Index mn = 256 + 256;
  RankScanConfig c{{256, 256}, {mn / 2, mn, 2 * mn, 3 * mn}, 10, 5};
  const auto s = rank_scan(c).summary;
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GT(s[i].mean, s[i - 1].mean);
}

TEST(RankScan, SummaryStatistics) {
  RankScanConfig c{{4, 4}, {3}, 4, 0};
  std::vector<RankRecord> recs{{3, 0, 1, 0, 0}, {3, 1, 2, 0, 0}, {3, 2, 3, 0, 0}, {3, 3, 4, 0, 0}};
  const auto s = summarize_ranks(recs, c).front();
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.ci_hi - s.mean, 1.959963984540054 * s.stddev / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.full_rank_freq, 0.25);
}

TEST(RankScan, RectangularNotWorseThanSquare) {
  const Index n = 64;
  const Index p = support_size_for_offset(n, 1.0);
  RankScanConfig sq{{n, n}, {p}, 200, 21};
  RankScanConfig rect{{2 * n, n}, {p}, 200, 21};
  EXPECT_GE(rank_scan(rect).summary[0].full_rank_freq, rank_scan(sq).summary[0].full_rank_freq - 0.05);
}

TEST(RankScan, RejectsBadConfig) {
  EXPECT_THROW(rank_scan({{4, 4}, {17}, 1, 0}), std::invalid_argument);
  EXPECT_THROW(rank_scan({{4, 4}, {3}, 0, 0}), std::invalid_argument);
}
