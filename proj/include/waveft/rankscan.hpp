// SPDX-License-Identifier: Apache-2.0
#pragma once

// Monte-Carlo rank statistics of random sparse matrices.

#include "waveft/rng.hpp"
#include "waveft/support.hpp"
#include "waveft/types.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace waveft {

/// Rank-revealing column-pivoted QR. A diagonal entry |R_ii| counts when it
/// exceeds `tol`; the default is max(m, n) * eps * |R_00|, where |R_00| is the
/// largest column norm.
inline Index numerical_rank(const Matrix& a, std::optional<double> tol = std::nullopt) {
  if (a.size() == 0) return 0;
  if (!a.allFinite()) throw std::invalid_argument("numerical_rank: non-finite entries");
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const Index k = std::min(a.rows(), a.cols());
  const auto R = qr.matrixQR();
  const double lead = std::abs(R(0, 0));
  if (lead == 0.0) return 0;
  const double threshold =
      tol.value_or(static_cast<double>(std::max(a.rows(), a.cols())) *
                   std::numeric_limits<double>::epsilon() * lead);
  Index r = 0;
  for (Index i = 0; i < k; ++i)
    if (std::abs(R(i, i)) > threshold) ++r;
  return r;
}

struct SparseEntry {
  Index row;
  Index col;
  double value;
};

/// Rank of a sparse matrix given as entries with distinct positions.
///
/// Empty rows and columns are dropped, and any row or column holding a single
/// nonzero is peeled off (it contributes exactly one to the rank together
/// with the line it pins). Peeling repeats until no such line remains; the
/// residual core goes to numerical_rank.
inline Index sparse_rank(Index m, Index n, const std::vector<SparseEntry>& entries) {
  std::vector<std::vector<std::size_t>> by_row(static_cast<std::size_t>(m));
  std::vector<std::vector<std::size_t>> by_col(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (entries[e].value == 0.0) continue;
    by_row[static_cast<std::size_t>(entries[e].row)].push_back(e);
    by_col[static_cast<std::size_t>(entries[e].col)].push_back(e);
  }
  std::vector<Index> row_deg(static_cast<std::size_t>(m)), col_deg(static_cast<std::size_t>(n));
  for (Index i = 0; i < m; ++i) row_deg[static_cast<std::size_t>(i)] = static_cast<Index>(by_row[static_cast<std::size_t>(i)].size());
  for (Index j = 0; j < n; ++j) col_deg[static_cast<std::size_t>(j)] = static_cast<Index>(by_col[static_cast<std::size_t>(j)].size());
  std::vector<char> row_alive(static_cast<std::size_t>(m), 1), col_alive(static_cast<std::size_t>(n), 1);

  auto kill_row = [&](Index i) {
    row_alive[static_cast<std::size_t>(i)] = 0;
    for (auto e : by_row[static_cast<std::size_t>(i)]) {
      const auto j = static_cast<std::size_t>(entries[e].col);
      if (col_alive[j]) --col_deg[j];
    }
  };
  auto kill_col = [&](Index j) {
    col_alive[static_cast<std::size_t>(j)] = 0;
    for (auto e : by_col[static_cast<std::size_t>(j)]) {
      const auto i = static_cast<std::size_t>(entries[e].row);
      if (row_alive[i]) --row_deg[i];
    }
  };

  Index peeled = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (Index j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (!col_alive[ju] || col_deg[ju] != 1) continue;
      for (auto e : by_col[ju]) {
        const Index i = entries[e].row;
        if (!row_alive[static_cast<std::size_t>(i)]) continue;
        kill_col(j);
        kill_row(i);
        ++peeled;
        changed = true;
        break;
      }
    }
    for (Index i = 0; i < m; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (!row_alive[iu] || row_deg[iu] != 1) continue;
      for (auto e : by_row[iu]) {
        const Index j = entries[e].col;
        if (!col_alive[static_cast<std::size_t>(j)]) continue;
        kill_row(i);
        kill_col(j);
        ++peeled;
        changed = true;
        break;
      }
    }
  }

  std::vector<Index> row_map(static_cast<std::size_t>(m), -1), col_map(static_cast<std::size_t>(n), -1);
  Index core_rows = 0, core_cols = 0;
  for (Index i = 0; i < m; ++i)
    if (row_alive[static_cast<std::size_t>(i)] && row_deg[static_cast<std::size_t>(i)] > 0)
      row_map[static_cast<std::size_t>(i)] = core_rows++;
  for (Index j = 0; j < n; ++j)
    if (col_alive[static_cast<std::size_t>(j)] && col_deg[static_cast<std::size_t>(j)] > 0)
      col_map[static_cast<std::size_t>(j)] = core_cols++;
  if (core_rows == 0 || core_cols == 0) return peeled;
  Matrix core = Matrix::Zero(core_rows, core_cols);
  for (const auto& e : entries) {
    const Index r = row_map[static_cast<std::size_t>(e.row)];
    const Index c = col_map[static_cast<std::size_t>(e.col)];
    if (r >= 0 && c >= 0) core(r, c) = e.value;
  }
  return peeled + numerical_rank(core);
}

enum class ValueDist { gaussian, unit };

inline ValueDist parse_value_dist(std::string_view s) {
  if (s == "gaussian") return ValueDist::gaussian;
  if (s == "unit") return ValueDist::unit;
  throw std::invalid_argument("unknown value distribution '" + std::string(s) + "'");
}

inline std::string_view to_string(ValueDist d) noexcept {
  return d == ValueDist::gaussian ? "gaussian" : "unit";
}

/// p nonzeros at a uniformly sampled support. Gaussian values are redrawn if
/// exactly zero; `unit` values are random signs.
inline std::vector<SparseEntry> random_sparse_entries(Index m, Index n, Index p, std::uint64_t seed,
                                                      ValueDist dist = ValueDist::gaussian) {
  const SparseSupport s = sample_support(m, n, p, seed);
  Rng rng(derive_seed(seed, {1}));
  std::vector<SparseEntry> out;
  out.reserve(s.positions.size());
  for (const auto& pos : s.positions) {
    double v;
    if (dist == ValueDist::gaussian) {
      do v = rng.normal(); while (v == 0.0);
    } else {
      v = (rng.next_u64() >> 63) ? 1.0 : -1.0;
    }
    out.push_back({pos.row, pos.col, v});
  }
  return out;
}

inline Matrix random_sparse_matrix(Index m, Index n, Index p, std::uint64_t seed,
                                   ValueDist dist = ValueDist::gaussian) {
  Matrix a = Matrix::Zero(m, n);
  for (const auto& e : random_sparse_entries(m, n, p, seed, dist)) a(e.row, e.col) = e.value;
  return a;
}

struct FullRankPrediction {
  double c;            // p / n - ln n
  double probability;  // exp(-2 exp(-c)), the n -> infinity full-rank limit
};

/// Asymptotic full-rank probability of an n x n matrix with p random nonzeros.
inline FullRankPrediction full_rank_prediction(Index n, Index p) {
  if (n < 2) throw std::invalid_argument("full_rank_prediction: n must be >= 2");
  if (p < 0) throw std::invalid_argument("full_rank_prediction: p must be >= 0");
  const double c = static_cast<double>(p) / static_cast<double>(n) - std::log(static_cast<double>(n));
  return {c, std::exp(-2.0 * std::exp(-c))};
}

/// Smallest p with p >= n (ln n + c).
inline Index support_size_for_offset(Index n, double c) {
  const auto nd = static_cast<double>(n);
  return static_cast<Index>(std::ceil(nd * (std::log(nd) + c)));
}

struct RankScanConfig {
  Shape shape{256, 256};
  std::vector<Index> p_grid;
  int trials = 20;
  std::uint64_t master_seed = 0;
  ValueDist value_dist = ValueDist::gaussian;
  unsigned threads = 1;

  void validate() const {
    if (shape.rows < 1 || shape.cols < 1) throw std::invalid_argument("rank scan: empty shape");
    if (trials < 1) throw std::invalid_argument("rank scan: trials must be >= 1");
    for (Index p : p_grid)
      if (p < 0 || p > shape.size())
        throw std::invalid_argument("rank scan: p=" + std::to_string(p) + " outside [0, m*n]");
  }
};

struct RankRecord {
  Index p;
  int trial;
  Index rank;
  Index nonempty_rows;
  Index nonempty_cols;
};

struct RankSummary {
  Index p;
  double mean;
  double stddev;
  double ci_lo;  // normal-approximation 95% interval of the mean
  double ci_hi;
  double median;
  double full_rank_freq;
};

struct RankScanResult {
  RankScanConfig config;
  std::vector<RankRecord> records;  // p-major, then trial
  std::vector<RankSummary> summary;
};

/// Seed of trial `trial` at grid index `p_index`.
inline std::uint64_t rank_trial_seed(std::uint64_t master, std::size_t p_index, int trial) {
  return derive_seed(master, {static_cast<std::uint64_t>(p_index), static_cast<std::uint64_t>(trial)});
}

inline RankRecord rank_trial(const RankScanConfig& cfg, std::size_t p_index, int trial) {
  const Index m = cfg.shape.rows, n = cfg.shape.cols, p = cfg.p_grid[p_index];
  const auto entries =
      random_sparse_entries(m, n, p, rank_trial_seed(cfg.master_seed, p_index, trial), cfg.value_dist);
  std::vector<char> rows(static_cast<std::size_t>(m), 0), cols(static_cast<std::size_t>(n), 0);
  for (const auto& e : entries) {
    rows[static_cast<std::size_t>(e.row)] = 1;
    cols[static_cast<std::size_t>(e.col)] = 1;
  }
  const auto count = [](const std::vector<char>& v) {
    return static_cast<Index>(std::count(v.begin(), v.end(), 1));
  };
  return {p, trial, sparse_rank(m, n, entries), count(rows), count(cols)};
}

inline std::vector<RankSummary> summarize_ranks(const std::vector<RankRecord>& records,
                                                const RankScanConfig& cfg) {
  const Index full = std::min(cfg.shape.rows, cfg.shape.cols);
  std::vector<RankSummary> out;
  for (Index p : cfg.p_grid) {
    std::vector<double> ranks;
    for (const auto& r : records)
      if (r.p == p) ranks.push_back(static_cast<double>(r.rank));
    if (ranks.empty()) continue;
    // Duplicate p values in the grid share one summary.
    if (std::any_of(out.begin(), out.end(), [&](const RankSummary& s) { return s.p == p; })) continue;
    const auto T = static_cast<double>(ranks.size());
    double mean = 0.0;
    for (double v : ranks) mean += v;
    mean /= T;
    double var = 0.0;
    for (double v : ranks) var += (v - mean) * (v - mean);
    const double sd = ranks.size() > 1 ? std::sqrt(var / (T - 1.0)) : 0.0;
    const double half = 1.959963984540054 * sd / std::sqrt(T);
    std::sort(ranks.begin(), ranks.end());
    const std::size_t mid = ranks.size() / 2;
    const double median = ranks.size() % 2 ? ranks[mid] : 0.5 * (ranks[mid - 1] + ranks[mid]);
    const double full_freq =
        static_cast<double>(std::count(ranks.begin(), ranks.end(), static_cast<double>(full))) / T;
    out.push_back({p, mean, sd, mean - half, mean + half, median, full_freq});
  }
  return out;
}

/// Rank of `trials` random sparse matrices at every p of the grid. Trials have
/// pre-assigned seeds, so the result does not depend on `threads`.
inline RankScanResult rank_scan(const RankScanConfig& cfg) {
  cfg.validate();
  const std::size_t per_p = static_cast<std::size_t>(cfg.trials);
  const std::size_t total = cfg.p_grid.size() * per_p;
  RankScanResult result;
  result.config = cfg;
  result.records.resize(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < total; t = next++)
      result.records[t] = rank_trial(cfg, t / per_p, static_cast<int>(t % per_p));
  };
  const unsigned nthreads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(total)));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  }
  result.summary = summarize_ranks(result.records, cfg);
  return result;
}

}  // namespace waveft
