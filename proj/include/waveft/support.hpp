// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "waveft/rng.hpp"
#include "waveft/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace waveft {

struct Position {
  Index row = 0;
  Index col = 0;
  friend auto operator<=>(const Position&, const Position&) = default;
};

/// A fixed set of trainable positions inside a grid, sorted row-major.
struct SparseSupport {
  Shape grid;
  std::vector<Position> positions;
  std::uint64_t seed = 0;

  Index size() const noexcept { return static_cast<Index>(positions.size()); }
};

/// Uniform sample of p distinct positions without replacement.
///
/// Sequential selection sampling (Knuth, Algorithm S): position t of N is kept
/// with probability (needed / remaining). The output is already sorted and
/// depends only on (grid, p, seed).
inline SparseSupport sample_support(Index rows, Index cols, Index p, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("sample_support: empty grid");
  const Index total = rows * cols;
  if (p < 0 || p > total)
    throw std::invalid_argument("sample_support: p=" + std::to_string(p) + " outside [0, " +
                                std::to_string(total) + "]");
  SparseSupport s{{rows, cols}, {}, seed};
  s.positions.reserve(static_cast<std::size_t>(p));
  Rng rng(seed);
  Index needed = p;
  for (Index t = 0; t < total && needed > 0; ++t) {
    const auto remaining = static_cast<std::uint64_t>(total - t);
    if (rng.below(remaining) < static_cast<std::uint64_t>(needed)) {
      s.positions.push_back({t / cols, t % cols});
      --needed;
    }
  }
  return s;
}

inline SparseSupport sample_support(Shape grid, Index p, std::uint64_t seed) {
  return sample_support(grid.rows, grid.cols, p, seed);
}

/// Number of support positions in each row of the grid.
inline std::vector<Index> row_occupancy(const SparseSupport& s) {
  std::vector<Index> counts(static_cast<std::size_t>(s.grid.rows), 0);
  for (const auto& pos : s.positions) ++counts[static_cast<std::size_t>(pos.row)];
  return counts;
}

}  // namespace waveft
