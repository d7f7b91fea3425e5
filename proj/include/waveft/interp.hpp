// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact block-sparse interpolation: given k linearly independent inputs
// (columns of X), targets Y and a support pattern S, build dW supported on S
// with (W0 + dW) X = Y, whenever all rows that need to change share k support
// columns C with X restricted to C invertible.

#include "waveft/adapter.hpp"
#include "waveft/rankscan.hpp"
#include "waveft/rng.hpp"
#include "waveft/support.hpp"
#include "waveft/trainer.hpp"
#include "waveft/types.hpp"
#include "waveft/wavelet.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace waveft {

struct InterpolationProblem {
  Matrix W0;  // m x n
  Matrix X;   // n x k, one input per column
  Matrix Y;   // m x k
  SparseSupport support;  // over (m, n)

  Index k() const noexcept { return X.cols(); }

  /// Z = Y - W0 X, always recomputed.
  Matrix residual_targets() const { return Y - W0 * X; }

  /// R = rows of Z with any nonzero entry.
  std::vector<Index> changed_rows() const {
    const Matrix Z = residual_targets();
    std::vector<Index> rows;
    for (Index i = 0; i < Z.rows(); ++i)
      if ((Z.row(i).array() != 0.0).any()) rows.push_back(i);
    return rows;
  }

  void validate() const {
    if (X.rows() != W0.cols() || Y.rows() != W0.rows() || Y.cols() != X.cols())
      throw ShapeError("interpolation problem: W0, X and Y shapes disagree");
    if (support.grid != shape_of(W0))
      throw ShapeError("interpolation problem: support grid differs from W0 shape");
  }
};

struct PivotColumns {
  std::vector<Index> columns;  // ascending
};

struct PivotSearch {
  std::optional<PivotColumns> pivots;
  std::string reason;  // set when no qualifying set was found
};

namespace detail {

inline double inf_norm(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Smallest |U_ii| of a partially pivoted LU, or 0 for singular input.
inline double min_lu_pivot(const Matrix& a) {
  if (a.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::PartialPivLU<Matrix> lu(a);
  return lu.matrixLU().diagonal().cwiseAbs().minCoeff();
}

inline Matrix rows_of(const Matrix& a, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = a.row(rows[i]);
  return out;
}

inline std::vector<std::vector<Index>> row_supports(const SparseSupport& s) {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(s.grid.rows));
  for (const auto& p : s.positions) out[static_cast<std::size_t>(p.row)].push_back(p.col);
  return out;
}

}  // namespace detail

/// Relative pivot threshold for deciding that X restricted to C is invertible.
inline constexpr double kPivotTolerance = 1e-10;

/// Search for C: intersect the supports of all changed rows, then let a
/// column-pivoted QR of X restricted to that intersection pick k rows of X.
/// Pivoted elimination reveals rank, so a miss here means no k-subset of the
/// intersection is invertible.
inline PivotSearch find_pivot_columns(const InterpolationProblem& prob) {
  prob.validate();
  const Index n = prob.W0.cols(), k = prob.k();
  if (numerical_rank(prob.X) < k) return {std::nullopt, "inputs are not linearly independent"};

  const auto supports = detail::row_supports(prob.support);
  const auto R = prob.changed_rows();
  std::vector<Index> common;
  if (R.empty()) {
    common.resize(static_cast<std::size_t>(n));
    std::iota(common.begin(), common.end(), Index{0});
  } else {
    common = supports[static_cast<std::size_t>(R.front())];
    for (std::size_t t = 1; t < R.size() && !common.empty(); ++t) {
      const auto& other = supports[static_cast<std::size_t>(R[t])];
      std::vector<Index> next;
      std::set_intersection(common.begin(), common.end(), other.begin(), other.end(),
                            std::back_inserter(next));
      common = std::move(next);
    }
  }
  if (static_cast<Index>(common.size()) < k)
    return {std::nullopt, "changed rows share " + std::to_string(common.size()) +
                              " support columns, fewer than k=" + std::to_string(k)};
  if (k == 0) return {PivotColumns{}, {}};

  const Matrix Xc = detail::rows_of(prob.X, common);
  Eigen::ColPivHouseholderQR<Matrix> qr(Xc.transpose());
  PivotColumns pc;
  for (Index i = 0; i < k; ++i)
    pc.columns.push_back(common[static_cast<std::size_t>(qr.colsPermutation().indices()[i])]);
  std::sort(pc.columns.begin(), pc.columns.end());

  const double threshold = kPivotTolerance * detail::inf_norm(prob.X);
  if (detail::min_lu_pivot(detail::rows_of(prob.X, pc.columns)) <= threshold)
    return {std::nullopt, "inputs restricted to the common support columns are rank deficient"};
  return {std::move(pc), {}};
}

/// Row i in R gets Z_i (X_C)^{-1} in columns C; all other entries are zero.
inline Matrix construct_delta(const InterpolationProblem& prob, const PivotColumns& pivots) {
  prob.validate();
  const Index k = prob.k();
  if (static_cast<Index>(pivots.columns.size()) != k)
    throw std::invalid_argument("construct_delta: need exactly k pivot columns");
  const Matrix Z = prob.residual_targets();
  const auto R = prob.changed_rows();
  Matrix dW = Matrix::Zero(prob.W0.rows(), prob.W0.cols());
  if (R.empty() || k == 0) return dW;

  const auto supports = detail::row_supports(prob.support);
  for (Index i : R) {
    const auto& s = supports[static_cast<std::size_t>(i)];
    for (Index c : pivots.columns)
      if (!std::binary_search(s.begin(), s.end(), c))
        throw std::invalid_argument("construct_delta: pivot column " + std::to_string(c) +
                                    " missing from support of row " + std::to_string(i));
  }
  const Matrix Xc = detail::rows_of(prob.X, pivots.columns);
  if (detail::min_lu_pivot(Xc) <= kPivotTolerance * detail::inf_norm(prob.X))
    throw std::invalid_argument("construct_delta: X restricted to pivot columns is singular");

  // dW_{R,C} = Z_R Xc^{-1}  <=>  Xc^T dW_{R,C}^T = Z_R^T
  const Matrix Zr = detail::rows_of(Z, R);
  const Matrix block = Xc.transpose().partialPivLu().solve(Zr.transpose()).transpose();
  for (std::size_t r = 0; r < R.size(); ++r)
    for (Index t = 0; t < k; ++t)
      dW(R[r], pivots.columns[static_cast<std::size_t>(t)]) = block(static_cast<Index>(r), t);
  return dW;
}

struct InterpolationCheck {
  bool support_ok = false;      // every nonzero of dW lies in S
  double max_residual = 0.0;    // max |(W0 + dW) X - Y|
  Index rank_delta = 0;
  Index rank_changed = 0;       // numerical rank of Z restricted to R
};

inline InterpolationCheck check_interpolation(const InterpolationProblem& prob, const Matrix& dW) {
  require_shape(dW, shape_of(prob.W0), "check_interpolation update");
  InterpolationCheck c;
  Matrix allowed = Matrix::Zero(dW.rows(), dW.cols());
  for (const auto& p : prob.support.positions) allowed(p.row, p.col) = 1.0;
  c.support_ok = ((dW.array() != 0.0) && (allowed.array() == 0.0)).count() == 0;
  c.max_residual = ((prob.W0 + dW) * prob.X - prob.Y).cwiseAbs().maxCoeff();
  c.rank_delta = numerical_rank(dW);
  const auto R = prob.changed_rows();
  c.rank_changed = R.empty() ? 0 : numerical_rank(detail::rows_of(prob.residual_targets(), R));
  return c;
}

struct PlantedOptions {
  double changed_fraction = 0.75;  // rows of Z that are nonzero
  Index z_rank = -1;               // rank of Z_R; -1 means k
  double density = 0.05;           // background support density
};

struct PlantedProblem {
  InterpolationProblem problem;
  PivotColumns planted;
};

/// Random instance satisfying both hypotheses by construction: a random C is
/// inserted into the support of every changed row.
inline PlantedProblem planted_problem(Index m, Index n, Index k, std::uint64_t seed,
                                      PlantedOptions opt = {}) {
  if (k < 1 || k > n) throw std::invalid_argument("planted_problem: need 1 <= k <= n");
  Rng rng(seed);
  auto gaussian = [&](Index r, Index c) {
    Matrix a(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) a(i, j) = rng.normal();
    return a;
  };
  PlantedProblem out;
  auto& prob = out.problem;
  prob.W0 = gaussian(m, n);
  prob.X = gaussian(n, k);
  const Index q = opt.z_rank < 0 ? k : std::min(opt.z_rank, k);
  Matrix Z = q == 0 ? Matrix::Zero(m, k) : Matrix(gaussian(m, q) * gaussian(q, k));
  std::vector<char> changed(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    changed[static_cast<std::size_t>(i)] = rng.uniform() < opt.changed_fraction;
    if (!changed[static_cast<std::size_t>(i)]) Z.row(i).setZero();
  }
  const Matrix base = prob.W0 * prob.X;
  prob.Y = base + Z;
  for (Index i = 0; i < m; ++i)
    if (!changed[static_cast<std::size_t>(i)]) prob.Y.row(i) = base.row(i);

  const SparseSupport cols = sample_support(1, n, k, derive_seed(seed, {1}));
  for (const auto& p : cols.positions) out.planted.columns.push_back(p.col);

  const auto background = static_cast<Index>(opt.density * static_cast<double>(m * n));
  SparseSupport s = sample_support(m, n, background, derive_seed(seed, {2}));
  for (Index i = 0; i < m; ++i)
    if (changed[static_cast<std::size_t>(i)])
      for (Index c : out.planted.columns) s.positions.push_back({i, c});
  std::sort(s.positions.begin(), s.positions.end());
  s.positions.erase(std::unique(s.positions.begin(), s.positions.end()), s.positions.end());
  s.seed = seed;
  prob.support = std::move(s);
  return out;
}

// ---------------------------------------------------------------------------
// Row-occupancy bound for random supports

struct OccupancyBound {
  double per_row_tail;  // P(Binomial(total, 1/rows) < k)
  double union_bound;   // min(1, rows * per_row_tail)
};

/// Tail of Binomial(total_params, 1/n_rows) below k, summed with the term
/// ratio t_{j+1}/t_j = (M - j) / ((j + 1)(n - 1)) starting from
/// log t_0 = M log(1 - 1/n).
inline OccupancyBound row_occupancy_bound(std::int64_t total_params, std::int64_t n_rows,
                                          std::int64_t k) {
  if (total_params < 0 || n_rows < 1 || k < 0)
    throw std::invalid_argument("row_occupancy_bound: invalid arguments");
  if (k == 0) return {0.0, 0.0};
  double tail;
  if (n_rows == 1) {
    tail = total_params < k ? 1.0 : 0.0;
  } else {
    const auto M = static_cast<double>(total_params);
    const auto n = static_cast<double>(n_rows);
    double log_t = M * std::log1p(-1.0 / n);
    tail = 0.0;
    for (std::int64_t j = 0; j < k && j <= total_params; ++j) {
      tail += std::exp(log_t);
      const auto jd = static_cast<double>(j);
      log_t += std::log(M - jd) - std::log(jd + 1.0) - std::log(n - 1.0);
    }
    tail = std::min(tail, 1.0);
  }
  return {tail, std::min(1.0, static_cast<double>(n_rows) * tail)};
}

// ---------------------------------------------------------------------------
// Gradient-descent capacity experiment

struct CapacityOptions {
  AdapterKind method = AdapterKind::shira;
  WaveletFamily family = WaveletFamily::db1;
  int level = 0;  // 0: deepest level that needs no padding
  double success_ratio = 1e-6;
};

struct CapacityResult {
  TrainReport report;
  Index d = 0, k = 0, total_params = 0;
  AdapterKind method = AdapterKind::shira;
  std::uint64_t seed = 0;
  Index min_row_occupancy = 0;
  bool success = false;  // final loss <= success_ratio * initial loss
  Adapter adapter;
};

/// Deepest level <= default_level whose block divides both dims (at least 1).
inline int unpadded_level(Index m, Index n) {
  int lvl = 0;
  while (lvl < default_level(m, n) && m % (Index{2} << lvl) == 0 && n % (Index{2} << lvl) == 0)
    ++lvl;
  return std::max(lvl, 1);
}

/// Train a sparse adapter on a zero d x d layer to map k Gaussian inputs to k
/// Gaussian targets.
inline CapacityResult capacity_experiment(Index d, Index k, Index total_params,
                                          const TrainConfig& config, std::uint64_t seed,
                                          CapacityOptions opt = {}) {
  if (opt.method == AdapterKind::lora)
    throw std::invalid_argument("capacity_experiment: method must be shira or waveft");
  if (total_params < 0 || total_params > d * d)
    throw std::invalid_argument("capacity_experiment: total_params must lie in [0, d^2]");
  Rng rng(derive_seed(seed, {0}));
  LinearDataset data;
  data.inputs.resize(k, d);
  data.targets.resize(k, d);
  for (Index l = 0; l < k; ++l)
    for (Index j = 0; j < d; ++j) data.inputs(l, j) = rng.normal();
  for (Index l = 0; l < k; ++l)
    for (Index i = 0; i < d; ++i) data.targets(l, i) = rng.normal();

  const Matrix W0 = Matrix::Zero(d, d);
  const Shape base{d, d};
  const std::uint64_t support_seed = derive_seed(seed, {1});
  CapacityResult res;
  if (opt.method == AdapterKind::shira) {
    res.adapter = make_direct(base, total_params, support_seed);
  } else {
    const int level = opt.level > 0 ? opt.level : unpadded_level(d, d);
    res.adapter = make_spectral(base, total_params, make_wavelet(opt.family, level), support_seed);
  }
  const auto& support = std::visit(
      [](const auto& a) -> const SparseSupport& {
        if constexpr (requires { a.support; }) return a.support;
        else throw std::logic_error("unreachable");
      },
      res.adapter);
  const auto occ = row_occupancy(support);
  res.min_row_occupancy = occ.empty() ? 0 : *std::min_element(occ.begin(), occ.end());

  TrainConfig cfg = config;
  cfg.loss = LossKind::mse;
  cfg.seed = seed;
  res.report = train_linear(W0, res.adapter, data, cfg);
  res.d = d;
  res.k = k;
  res.total_params = total_params;
  res.method = opt.method;
  res.seed = seed;
  res.success = res.report.final_loss <= opt.success_ratio * res.report.initial_loss;
  return res;
}

}  // namespace waveft
