// SPDX-License-Identifier: Apache-2.0
#pragma once

// Adapter parameterizations of a weight update dW for a frozen linear layer
// y = (W0 + lambda * dW) x, with W0 of shape (m, n):
//
//   SpectralAdapter  dW = crop(idwt2(C)), C zero except p trainable coefficients
//   DirectAdapter    dW zero except p trainable entries
//   LowRankAdapter   dW = (alpha / r) * B * A^T, B (m x r), A (n x r)
//
// delta() never applies lambda; merge(), forward() and the gradients do.

#include "waveft/rng.hpp"
#include "waveft/support.hpp"
#include "waveft/types.hpp"
#include "waveft/wavelet.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace waveft {

enum class InitMode { zero, gaussian };

struct InitSpec {
  InitMode mode = InitMode::zero;
  double sigma = 1.0;
};

inline Vector init_values(Index p, InitSpec init, std::uint64_t seed) {
  if (p < 0) throw std::invalid_argument("init_values: negative count");
  if (init.mode == InitMode::zero) return Vector::Zero(p);
  if (!(init.sigma > 0.0) || !std::isfinite(init.sigma))
    throw std::invalid_argument("init_values: gaussian sigma must be positive");
  Rng rng(seed);
  Vector v(p);
  for (Index i = 0; i < p; ++i) v[i] = rng.normal(0.0, init.sigma);
  return v;
}

struct SpectralAdapter {
  SparseSupport support;  // over the padded coefficient grid
  Vector values;
  double lambda = 1.0;
  WaveletSpec wavelet;
  Shape base_shape;
};

struct DirectAdapter {
  SparseSupport support;  // over the weight matrix itself
  Vector values;
  double lambda = 1.0;
};

struct LowRankAdapter {
  Matrix B;  // m x r
  Matrix A;  // n x r
  double alpha = 1.0;
  double lambda = 1.0;

  Index rank() const noexcept { return B.cols(); }
  double scaling() const noexcept { return alpha / static_cast<double>(rank()); }
};

using Adapter = std::variant<SpectralAdapter, DirectAdapter, LowRankAdapter>;

enum class AdapterKind { waveft, shira, lora };

inline std::string_view to_string(AdapterKind k) noexcept {
  switch (k) {
    case AdapterKind::waveft: return "waveft";
    case AdapterKind::shira: return "shira";
    case AdapterKind::lora: return "lora";
  }
  return "?";
}

inline AdapterKind parse_adapter_kind(std::string_view s) {
  if (s == "waveft") return AdapterKind::waveft;
  if (s == "shira") return AdapterKind::shira;
  if (s == "lora") return AdapterKind::lora;
  throw std::invalid_argument("unknown adapter kind '" + std::string(s) + "'");
}

inline AdapterKind kind_of(const Adapter& a) noexcept {
  return static_cast<AdapterKind>(a.index());
}

// ---------------------------------------------------------------------------
// Construction

inline SpectralAdapter make_spectral(Shape base, Index p, const WaveletSpec& wavelet,
                                     std::uint64_t seed, double lambda = 1.0,
                                     InitSpec init = {}) {
  const Shape grid = padded_shape(base, wavelet);
  if (wavelet.level > max_level(base.rows, base.cols))
    throw std::invalid_argument("make_spectral: wavelet level infeasible for base shape");
  SpectralAdapter a;
  a.support = sample_support(grid, p, seed);
  a.values = init_values(p, init, derive_seed(seed, {1}));
  a.lambda = lambda;
  a.wavelet = wavelet;
  a.base_shape = base;
  return a;
}

inline DirectAdapter make_direct(Shape base, Index p, std::uint64_t seed, double lambda = 1.0,
                                 InitSpec init = {}) {
  DirectAdapter a;
  a.support = sample_support(base, p, seed);
  a.values = init_values(p, init, derive_seed(seed, {1}));
  a.lambda = lambda;
  return a;
}

/// B starts at zero and A ~ N(0, 1/n), so dW = 0 at step 0. alpha defaults to r.
inline LowRankAdapter make_low_rank(Shape base, Index r, std::uint64_t seed, double lambda = 1.0,
                                    double alpha = 0.0) {
  if (r < 1) throw std::invalid_argument("make_low_rank: rank must be >= 1");
  LowRankAdapter a;
  a.B = Matrix::Zero(base.rows, r);
  a.A.resize(base.cols, r);
  Rng rng(seed);
  const double sigma = 1.0 / std::sqrt(static_cast<double>(base.cols));
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < base.cols; ++i) a.A(i, j) = rng.normal(0.0, sigma);
  a.alpha = alpha > 0.0 ? alpha : static_cast<double>(r);
  a.lambda = lambda;
  return a;
}

// ---------------------------------------------------------------------------
// Accessors

inline Shape base_shape(const Adapter& a) {
  return std::visit(
      [](const auto& x) -> Shape {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SpectralAdapter>) return x.base_shape;
        else if constexpr (std::is_same_v<T, DirectAdapter>) return x.support.grid;
        else return {x.B.rows(), x.A.rows()};
      },
      a);
}

inline double lambda_of(const Adapter& a) {
  return std::visit([](const auto& x) { return x.lambda; }, a);
}

/// Trainable scalar count: p for sparse kinds, r * (m + n) for low rank.
inline Index num_params(const Adapter& a) {
  return std::visit(
      [](const auto& x) -> Index {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LowRankAdapter>) return x.B.size() + x.A.size();
        else return x.values.size();
      },
      a);
}

/// Trainable state as one flat vector (low rank: B then A, column-major).
inline Vector flatten(const Adapter& a) {
  return std::visit(
      [](const auto& x) -> Vector {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LowRankAdapter>) {
          Vector v(x.B.size() + x.A.size());
          v.head(x.B.size()) = x.B.reshaped();
          v.tail(x.A.size()) = x.A.reshaped();
          return v;
        } else {
          return x.values;
        }
      },
      a);
}

inline void assign(Adapter& a, const Vector& params) {
  if (params.size() != num_params(a)) throw ShapeError("assign: parameter count mismatch");
  std::visit(
      [&](auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LowRankAdapter>) {
          x.B.reshaped() = params.head(x.B.size());
          x.A.reshaped() = params.tail(x.A.size());
        } else {
          x.values = params;
        }
      },
      a);
}

inline void check_well_formed(const Adapter& a) {
  std::visit(
      [](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LowRankAdapter>) {
          if (x.B.cols() < 1 || x.B.cols() != x.A.cols())
            throw ShapeError("low-rank adapter: B and A must share rank >= 1");
        } else {
          if (x.values.size() != x.support.size())
            throw ShapeError("sparse adapter: values/support length mismatch");
          if constexpr (std::is_same_v<T, SpectralAdapter>) {
            if (x.support.grid != padded_shape(x.base_shape, x.wavelet))
              throw ShapeError("spectral adapter: support grid is not the padded base shape");
          }
        }
      },
      a);
}

// ---------------------------------------------------------------------------
// Update matrix, merge and forward

namespace detail {

inline Matrix scatter(const SparseSupport& s, const Vector& values) {
  Matrix out = Matrix::Zero(s.grid.rows, s.grid.cols);
  for (Index i = 0; i < s.size(); ++i) {
    const auto& pos = s.positions[static_cast<std::size_t>(i)];
    out(pos.row, pos.col) = values[i];
  }
  return out;
}

inline Vector gather(const SparseSupport& s, const Matrix& m) {
  Vector out(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    const auto& pos = s.positions[static_cast<std::size_t>(i)];
    out[i] = m(pos.row, pos.col);
  }
  return out;
}

}  // namespace detail

/// The unscaled update dW (lambda not applied).
inline Matrix delta(const Adapter& a) {
  check_well_formed(a);
  return std::visit(
      [](const auto& x) -> Matrix {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SpectralAdapter>) {
          return idwt2(detail::scatter(x.support, x.values), x.wavelet, x.base_shape);
        } else if constexpr (std::is_same_v<T, DirectAdapter>) {
          return detail::scatter(x.support, x.values);
        } else {
          return x.scaling() * (x.B * x.A.transpose());
        }
      },
      a);
}

/// W_final = W0 + lambda * dW. lambda = 0 returns W0 bit for bit (-0.0 kept).
inline Matrix merge(const Matrix& W0, const Adapter& a) {
  require_shape(W0, base_shape(a), "merge base weights");
  if (lambda_of(a) == 0.0) {
    check_well_formed(a);
    return W0;
  }
  return W0 + lambda_of(a) * delta(a);
}

/// Adapter contribution lambda * dW * x for a batch of inputs stored as rows
/// of X (B x n); returns B x m. Sparse kinds never build a dense W0 + dW.
inline Matrix adapter_forward(const Adapter& a, const Matrix& X) {
  const Shape base = base_shape(a);
  if (X.cols() != base.cols) throw ShapeError("adapter_forward: input width mismatch");
  return std::visit(
      [&](const auto& x) -> Matrix {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DirectAdapter>) {
          if (x.values.size() != x.support.size())
            throw ShapeError("sparse adapter: values/support length mismatch");
          Matrix Y = Matrix::Zero(X.rows(), base.rows);
          for (Index i = 0; i < x.support.size(); ++i) {
            const auto& pos = x.support.positions[static_cast<std::size_t>(i)];
            Y.col(pos.row) += (x.lambda * x.values[i]) * X.col(pos.col);
          }
          return Y;
        } else if constexpr (std::is_same_v<T, SpectralAdapter>) {
          return x.lambda * (X * delta(a).transpose());
        } else {
          return (x.lambda * x.scaling()) * ((X * x.A) * x.B.transpose());
        }
      },
      a);
}

/// (W0 + lambda * dW) x without forming the merged matrix.
inline Vector forward(const Matrix& W0, const Adapter& a, const Vector& x) {
  require_shape(W0, base_shape(a), "forward base weights");
  if (x.size() != W0.cols()) throw ShapeError("forward: input length mismatch");
  return W0 * x + adapter_forward(a, x.transpose()).transpose();
}

// ---------------------------------------------------------------------------
// Gradients

/// Gradient of a loss with respect to the trainable state, given a batch of
/// inputs X (B x n, one sample per row) and upstream gradients U = dL/dY
/// (B x m) of the layer outputs Y = X (W0 + lambda dW)^T. Layout matches
/// flatten().
inline Vector grad_batch(const Adapter& a, const Matrix& X, const Matrix& U) {
  const Shape base = base_shape(a);
  if (X.cols() != base.cols || U.cols() != base.rows || X.rows() != U.rows())
    throw ShapeError("grad_batch: batch shapes inconsistent with adapter");
  return std::visit(
      [&](const auto& x) -> Vector {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DirectAdapter>) {
          Vector g(x.support.size());
          for (Index i = 0; i < x.support.size(); ++i) {
            const auto& pos = x.support.positions[static_cast<std::size_t>(i)];
            g[i] = x.lambda * U.col(pos.row).dot(X.col(pos.col));
          }
          return g;
        } else if constexpr (std::is_same_v<T, SpectralAdapter>) {
          const Matrix G = x.lambda * (U.transpose() * X);
          return detail::gather(x.support, dwt2_adjoint(G, x.wavelet, x.base_shape).data);
        } else {
          const double s = x.lambda * x.scaling();
          const Matrix dB = s * (U.transpose() * (X * x.A));
          const Matrix dA = s * (X.transpose() * (U * x.B));
          Vector g(dB.size() + dA.size());
          g.head(dB.size()) = dB.reshaped();
          g.tail(dA.size()) = dA.reshaped();
          return g;
        }
      },
      a);
}

/// Single-sample form of grad_batch: input x (n) and upstream dL/dy (m).
inline Vector grad_values(const Matrix& W0, const Adapter& a, const Vector& x,
                          const Vector& upstream) {
  require_shape(W0, base_shape(a), "grad_values base weights");
  return grad_batch(a, x.transpose(), upstream.transpose());
}

// ---------------------------------------------------------------------------
// Parameter budgets

struct LayerCensus {
  struct Entry {
    Shape shape;
    Index count = 1;
  };
  std::vector<Entry> entries;

  Index layer_count() const {
    Index n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
  }

  /// One shape per layer instance, in census order.
  std::vector<Shape> expand() const {
    std::vector<Shape> out;
    for (const auto& e : entries)
      for (Index i = 0; i < e.count; ++i) out.push_back(e.shape);
    return out;
  }

  void validate() const {
    for (const auto& e : entries)
      if (e.count < 1 || e.shape.rows < 1 || e.shape.cols < 1)
        throw std::invalid_argument("layer census: shapes and counts must be positive");
  }
};

/// Attention-layer shapes of the SDXL UNet (q, k, v and output projections).
inline LayerCensus sdxl_attention_census() {
  return {{{{1280, 1280}, 360}, {{1280, 2048}, 120}, {{640, 640}, 60}, {{640, 2048}, 20}}};
}

/// Trainable parameters of rank-r low-rank adapters on every layer.
inline std::int64_t lora_budget(const LayerCensus& census, Index r) {
  if (r < 1) throw std::invalid_argument("lora_budget: rank must be >= 1");
  census.validate();
  std::int64_t total = 0;
  for (const auto& e : census.entries) total += e.count * r * (e.shape.rows + e.shape.cols);
  return total;
}

enum class AllocationPolicy { fixed, proportional };

inline AllocationPolicy parse_allocation_policy(std::string_view s) {
  if (s == "fixed") return AllocationPolicy::fixed;
  if (s == "proportional") return AllocationPolicy::proportional;
  throw std::invalid_argument("unknown allocation policy '" + std::string(s) + "'");
}

/// Split a total sparse budget across layers. `fixed` gives every layer the
/// same p (remainder to the earliest layers); `proportional` weights layers by
/// m + n and fixes the rounding with largest remainders, ties to lower index.
inline std::vector<Index> allocate_budget(const LayerCensus& census, std::int64_t total_p,
                                          AllocationPolicy policy) {
  census.validate();
  const auto layers = census.expand();
  const auto L = static_cast<std::int64_t>(layers.size());
  if (L == 0) throw std::invalid_argument("allocate_budget: empty census");
  if (total_p < L)
    throw std::invalid_argument("allocate_budget: total " + std::to_string(total_p) +
                                " smaller than layer count " + std::to_string(L));
  std::vector<Index> out(layers.size());
  if (policy == AllocationPolicy::fixed) {
    const std::int64_t base = total_p / L, extra = total_p % L;
    for (std::int64_t i = 0; i < L; ++i) out[static_cast<std::size_t>(i)] = base + (i < extra);
    return out;
  }
  std::int64_t weight_sum = 0;
  for (const auto& s : layers) weight_sum += s.rows + s.cols;
  std::vector<std::int64_t> remainder(layers.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto num = static_cast<__int128>(total_p) * (layers[i].rows + layers[i].cols);
    out[i] = static_cast<Index>(num / weight_sum);
    remainder[i] = static_cast<std::int64_t>(num % weight_sum);
    assigned += out[i];
  }
  std::vector<std::size_t> order(layers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::int64_t k = 0; k < total_p - assigned; ++k) ++out[order[static_cast<std::size_t>(k)]];
  return out;
}

}  // namespace waveft
