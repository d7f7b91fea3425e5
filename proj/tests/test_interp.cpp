// SPDX-License-Identifier: Apache-2.0
#include "waveft/interp.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace waveft;

namespace {

// Binomial lower tail by direct lgamma evaluation of each term.
double binomial_tail_oracle(std::int64_t M, std::int64_t n, std::int64_t k) {
  const double q = 1.0 / static_cast<double>(n);
  double s = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    const double lc = std::lgamma(M + 1.0) - std::lgamma(j + 1.0) - std::lgamma(M - j + 1.0);
    s += std::exp(lc + j * std::log(q) + (M - j) * std::log1p(-q));
  }
  return s;
}

InterpolationProblem full_support_problem(Matrix W0, Matrix X, Matrix Y) {
  const Index m = W0.rows(), n = W0.cols();
  return {std::move(W0), std::move(X), std::move(Y), sample_support(m, n, m * n, 0)};
}

}  // namespace

TEST(Construct, ScalarSolve) {
  auto prob = full_support_problem(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 6.0));
  const auto s = find_pivot_columns(prob);
  ASSERT_TRUE(s.pivots);
  EXPECT_DOUBLE_EQ(construct_delta(prob, *s.pivots)(0, 0), 3.0);
}

TEST(Construct, ZeroResidualGivesZeroUpdate) {
  Rng rng(1);
  Matrix W0(4, 5), X(5, 2);
  for (Index i = 0; i < W0.size(); ++i) W0.data()[i] = rng.normal();
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  auto prob = full_support_problem(W0, X, W0 * X);
  const auto s = find_pivot_columns(prob);
  ASSERT_TRUE(s.pivots);
  EXPECT_EQ(construct_delta(prob, *s.pivots), Matrix::Zero(4, 5));
}

TEST(Construct, IdentityBlockPicksLeadingColumns) {
  Matrix X = Matrix::Zero(6, 3);
  X.topRows(3).setIdentity();
  auto prob = full_support_problem(Matrix::Zero(2, 6), X, Matrix::Ones(2, 3));
  const auto s = find_pivot_columns(prob);
  ASSERT_TRUE(s.pivots);
  EXPECT_EQ(s.pivots->columns, (std::vector<Index>{0, 1, 2}));
}

TEST(Construct, PigeonholeNotFound) {
  Rng rng(2);
  Matrix X(6, 3);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  InterpolationProblem prob{Matrix::Zero(2, 6), X, Matrix::Ones(2, 3), {{2, 6}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}}, 0}};
  const auto s = find_pivot_columns(prob);
  EXPECT_FALSE(s.pivots);
  EXPECT_FALSE(s.reason.empty());
}

TEST(Construct, DependentInputsNotFound) {
  Matrix X(4, 2);
  X.col(0) << 1, 2, 3, 4;
  X.col(1) = 2 * X.col(0);
  auto prob = full_support_problem(Matrix::Zero(3, 4), X, Matrix::Ones(3, 2));
  EXPECT_FALSE(find_pivot_columns(prob).pivots);
}

TEST(Construct, RejectsPivotOutsideSupport) {
  InterpolationProblem prob{Matrix::Zero(1, 3), Matrix::Identity(3, 1), Matrix::Ones(1, 1), {{1, 3}, {{0, 1}}, 0}};
  EXPECT_THROW(construct_delta(prob, {{0}}), std::invalid_argument);
}

TEST(Construct, PlantedInstancesSatisfyAllThreeConclusions) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index m = 16 + static_cast<Index>(seed * 5 % 49), n = 12 + static_cast<Index>(seed * 11 % 53);
    const Index k = 1 + static_cast<Index>(seed % 8);
    PlantedOptions opt;
    opt.z_rank = seed % 3 == 0 ? std::max<Index>(1, k / 2) : -1;
    const auto pp = planted_problem(m, n, k, seed, opt);
    const auto s = find_pivot_columns(pp.problem);
    ASSERT_TRUE(s.pivots) << s.reason;
    const Matrix dW = construct_delta(pp.problem, *s.pivots);
    const auto chk = check_interpolation(pp.problem, dW);
    EXPECT_TRUE(chk.support_ok);
    EXPECT_LE(chk.max_residual, 1e-8 * std::max(1.0, pp.problem.Y.cwiseAbs().maxCoeff()));
    EXPECT_EQ(chk.rank_delta, chk.rank_changed);
    // Rows outside R are untouched.
    const auto R = pp.problem.changed_rows();
    for (Index i = 0; i < m; ++i) {
      if (!std::binary_search(R.begin(), R.end(), i)) {
        EXPECT_EQ(dW.row(i).cwiseAbs().maxCoeff(), 0.0);
      }
    }
  }
}

TEST(Construct, RankPreservedByInvertibleRightFactor) {
  // Z_R X_C^{-1} keeps the row rank of Z_R for any invertible X_C.
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    const Index r = 10, k = 6, q = 1 + t % k;
    Matrix A(r, q), B(q, k), Xc(k, k);
    for (Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
    for (Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
    for (Index i = 0; i < Xc.size(); ++i) Xc.data()[i] = rng.normal();
    const Matrix Z = A * B;
    EXPECT_EQ(numerical_rank(Matrix(Z * Xc.inverse())), numerical_rank(Z));
  }
}

TEST(Bound, MatchesDirectBinomialSum) {
  for (auto [M, n, k] : {std::tuple<std::int64_t, std::int64_t, std::int64_t>{15680, 784, 5},
                         {2560, 128, 5}, {100, 10, 3}, {5000, 50, 20}}) {
    const auto b = row_occupancy_bound(M, n, k);
    const double oracle = binomial_tail_oracle(M, n, k);
    EXPECT_NEAR(b.per_row_tail, oracle, 1e-10 * oracle + 1e-300);
    EXPECT_DOUBLE_EQ(b.union_bound, std::min(1.0, static_cast<double>(n) * b.per_row_tail));
  }
}

TEST(Bound, StatedParameters) {
  const auto b = row_occupancy_bound(15680, 784, 5);
  EXPECT_NEAR(b.union_bound, 1.3e-2, 1e-3);
  EXPECT_EQ(row_occupancy_bound(15680, 784, 0).union_bound, 0.0);
  EXPECT_LT(row_occupancy_bound(100 * 784 * 5, 784, 5).union_bound, 1e-12);
}

TEST(Bound, MonotoneInBudgetAndK) {
  double prev = 2.0;
  for (std::int64_t M = 1000; M <= 20000; M += 1000) {
    const double t = row_occupancy_bound(M, 784, 5).per_row_tail;
    EXPECT_LT(t, prev);
    prev = t;
  }
  prev = -1.0;
  for (std::int64_t k = 1; k <= 12; ++k) {
    const double t = row_occupancy_bound(15680, 784, k).per_row_tail;
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(Capacity, DeskScaleInterpolatesAndControlFails) {
  TrainConfig c = interpolation_train_config();
  c.epochs = 2000;
  const auto ok = capacity_experiment(64, 5, 64 * 20, c, 1);
  EXPECT_TRUE(ok.success) << ok.report.final_loss / ok.report.initial_loss;
  const auto control = capacity_experiment(64, 5, 5, c, 1);
  EXPECT_FALSE(control.success);
  EXPECT_EQ(ok.report.epoch_losses.size(), 2000u);
}

TEST(Capacity, WaveftVariantRunsWithoutPadding) {
  TrainConfig c = interpolation_train_config();
  c.epochs = 1500;
  CapacityOptions opt;
  opt.method = AdapterKind::waveft;
  const auto r = capacity_experiment(64, 3, 64 * 20, c, 2, opt);
  const auto& a = std::get<SpectralAdapter>(r.adapter);
  EXPECT_EQ(a.support.grid, (Shape{64, 64}));
  EXPECT_LT(r.report.final_loss, 1e-3 * r.report.initial_loss);
  EXPECT_EQ(unpadded_level(784, 784), 4);
  EXPECT_EQ(unpadded_level(128, 128), 7);
}

TEST(Capacity, RejectsLoraAndOversizedBudget) {
  CapacityOptions opt;
  opt.method = AdapterKind::lora;
  EXPECT_THROW(capacity_experiment(8, 2, 10, interpolation_train_config(), 0, opt), std::invalid_argument);
  EXPECT_THROW(capacity_experiment(8, 2, 65, interpolation_train_config(), 0), std::invalid_argument);
}
