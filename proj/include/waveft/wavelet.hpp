// SPDX-License-Identifier: Apache-2.0
#pragma once

// Orthonormal separable 2D discrete wavelet transform.
//
// A matrix of shape (m, n) is zero-padded to (m', n'), the smallest shape
// whose dimensions are multiples of 2^level. Every level then applies a
// periodized two-channel filter bank along rows and then along columns of the
// current LL block, so the transform is square and orthogonal on the padded
// space. Coefficients are packed in the usual quadrant layout: the coarsest
// LL block sits in the top-left corner, and at each level the detail blocks
// occupy the top-right (LH), bottom-left (HL) and bottom-right (HH) quadrants
// of that level's working block.
//
// Filters are stored in correlation order: analysis computes
//   approx[i] = sum_k lowpass_dec[k] * x[(2i + k) mod N]
//   detail[i] = sum_k highpass_dec[k] * x[(2i + k) mod N]
// with highpass_dec[k] = (-1)^k lowpass_dec[L-1-k].

#include "waveft/types.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace waveft {

enum class WaveletFamily { db1, db2, db3, sym2, sym3, sym4, coif1, coif2 };

inline constexpr std::array<WaveletFamily, 8> kAllFamilies = {
    WaveletFamily::db1,  WaveletFamily::db2,  WaveletFamily::db3,   WaveletFamily::sym2,
    WaveletFamily::sym3, WaveletFamily::sym4, WaveletFamily::coif1, WaveletFamily::coif2};

inline constexpr std::string_view to_string(WaveletFamily f) noexcept {
  switch (f) {
    case WaveletFamily::db1: return "db1";
    case WaveletFamily::db2: return "db2";
    case WaveletFamily::db3: return "db3";
    case WaveletFamily::sym2: return "sym2";
    case WaveletFamily::sym3: return "sym3";
    case WaveletFamily::sym4: return "sym4";
    case WaveletFamily::coif1: return "coif1";
    case WaveletFamily::coif2: return "coif2";
  }
  return "?";
}

inline WaveletFamily parse_family(std::string_view name) {
  for (auto f : kAllFamilies)
    if (to_string(f) == name) return f;
  if (name == "haar") return WaveletFamily::db1;
  throw std::invalid_argument("unknown wavelet family '" + std::string(name) + "'");
}

struct WaveletSpec {
  WaveletFamily family = WaveletFamily::db1;
  int level = 1;
  std::vector<double> lowpass_dec;
  std::vector<double> highpass_dec;
  std::vector<double> lowpass_rec;
  std::vector<double> highpass_rec;

  std::size_t filter_length() const noexcept { return lowpass_dec.size(); }
};

namespace detail {

struct FilterDesign {
  std::vector<double> seed;  // published coefficients, correlation order
  int wavelet_moments;       // vanishing moments of the highpass filter
  int scaling_moments;       // vanishing moments of the lowpass about `center` (coiflets)
  double center;
};

inline FilterDesign design_for(WaveletFamily f) {
  switch (f) {
    case WaveletFamily::db1:
      return {{0.7071067811865476, 0.7071067811865476}, 1, 0, 0.0};
    case WaveletFamily::db2:
      return {{0.48296291314453416, 0.8365163037378079, 0.2241438680420134,
               -0.12940952255126037},
              2, 0, 0.0};
    case WaveletFamily::db3:
      return {{0.33267055295008263, 0.8068915093110925, 0.45987750211849154,
               -0.13501102001025458, -0.08544127388202666, 0.03522629188570953},
              3, 0, 0.0};
    case WaveletFamily::sym2:
      return {{0.48296291314469025, 0.836516303737469, 0.22414386804185735,
               -0.12940952255092145},
              2, 0, 0.0};
    case WaveletFamily::sym3:
      return {{0.3326705529509569, 0.8068915093133388, 0.4598775021193313,
               -0.13501102001039084, -0.08544127388224149, 0.035226291882100656},
              3, 0, 0.0};
    case WaveletFamily::sym4:
      return {{0.0322231006040427, -0.012603967262037833, -0.09921954357684722,
               0.29785779560527736, 0.8037387518059161, 0.49761866763201545,
               -0.02963552764599851, -0.07576571478927333},
              4, 0, 0.0};
    case WaveletFamily::coif1:
      return {{-0.07273261951252645, 0.3378976624574818, 0.8525720202116004,
               0.3848648468648578, -0.07273261951252645, -0.015655728135791993},
              2, 1, 2.0};
    case WaveletFamily::coif2:
      return {{0.01638733646320364, -0.04146493678687178, -0.0673725547237256,
               0.3861100668227629, 0.8127236354494135, 0.4170051844232391,
               -0.07648859907828076, -0.05943441864643109, 0.02368017194684777,
               0.005611434819368834, -0.0018232088709110323, -0.000720549445520347},
              4, 3, 4.0};
  }
  throw std::invalid_argument("unknown wavelet family");
}

/// Residuals of the defining equations of an orthonormal filter:
/// double-shift orthonormality, DC gain sqrt(2), highpass vanishing moments and,
/// for coiflets, lowpass moments about `center`.
inline Vector filter_residual(const Vector& h, const FilterDesign& d) {
  const Index L = h.size();
  const Index half = L / 2;
  const double scale = static_cast<double>(half);
  std::vector<double> r;
  for (Index j = 0; j < half; ++j) {
    double s = 0.0;
    for (Index k = 0; k + 2 * j < L; ++k) s += h[k] * h[k + 2 * j];
    r.push_back(s - (j == 0 ? 1.0 : 0.0));
  }
  r.push_back(h.sum() - std::sqrt(2.0));
  const double mid = 0.5 * static_cast<double>(L - 1);
  for (int q = 0; q < d.wavelet_moments; ++q) {
    double s = 0.0;
    for (Index k = 0; k < L; ++k)
      s += ((k % 2) ? -1.0 : 1.0) * std::pow((static_cast<double>(k) - mid) / scale, q) * h[k];
    r.push_back(s);
  }
  for (int q = 1; q <= d.scaling_moments; ++q) {
    double s = 0.0;
    for (Index k = 0; k < L; ++k)
      s += std::pow((static_cast<double>(k) - d.center) / scale, q) * h[k];
    r.push_back(s);
  }
  return Eigen::Map<Vector>(r.data(), static_cast<Index>(r.size()));
}

inline Matrix filter_jacobian(const Vector& h, const FilterDesign& d) {
  const Index L = h.size();
  const Index half = L / 2;
  const double scale = static_cast<double>(half);
  const Index rows = half + 1 + d.wavelet_moments + d.scaling_moments;
  Matrix J = Matrix::Zero(rows, L);
  for (Index j = 0; j < half; ++j) {
    for (Index m = 0; m < L; ++m) {
      double g = 0.0;
      if (m + 2 * j < L) g += h[m + 2 * j];
      if (m - 2 * j >= 0) g += h[m - 2 * j];
      J(j, m) = g;
    }
  }
  J.row(half).setOnes();
  const double mid = 0.5 * static_cast<double>(L - 1);
  for (int q = 0; q < d.wavelet_moments; ++q)
    for (Index k = 0; k < L; ++k)
      J(half + 1 + q, k) =
          ((k % 2) ? -1.0 : 1.0) * std::pow((static_cast<double>(k) - mid) / scale, q);
  for (int q = 1; q <= d.scaling_moments; ++q)
    for (Index k = 0; k < L; ++k)
      J(half + d.wavelet_moments + q, k) =
          std::pow((static_cast<double>(k) - d.center) / scale, q);
  return J;
}

/// Gauss-Newton polish of the published coefficients onto the exact solution
/// of the design equations. Throws if the seed is not already within 1e-8 of
/// a solution, which catches transcription errors in the seed table.
inline std::vector<double> solve_filter(const FilterDesign& d) {
  Vector h = Eigen::Map<const Vector>(d.seed.data(), static_cast<Index>(d.seed.size()));
  const Vector seed = h;
  for (int it = 0; it < 30; ++it) {
    const Vector r = filter_residual(h, d);
    if (r.lpNorm<Eigen::Infinity>() < 1e-16) break;
    const Matrix J = filter_jacobian(h, d);
    const Vector step = J.completeOrthogonalDecomposition().solve(-r);
    h += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-17) break;
  }
  if (filter_residual(h, d).lpNorm<Eigen::Infinity>() > 1e-13)
    throw std::logic_error("wavelet filter design equations did not converge");
  if ((h - seed).lpNorm<Eigen::Infinity>() > 1e-8)
    throw std::logic_error("wavelet seed coefficients are not close to a design solution");
  return {h.data(), h.data() + h.size()};
}

inline const std::vector<double>& lowpass_for(WaveletFamily f) {
  static const std::array<std::vector<double>, kAllFamilies.size()> table = [] {
    std::array<std::vector<double>, kAllFamilies.size()> t;
    for (std::size_t i = 0; i < kAllFamilies.size(); ++i)
      t[i] = solve_filter(design_for(kAllFamilies[i]));
    return t;
  }();
  return table[static_cast<std::size_t>(f)];
}

}  // namespace detail

/// Largest level allowed for an (m, n) target.
inline int max_level(Index m, Index n) {
  const Index s = std::min(m, n);
  int lvl = 0;
  while ((Index{2} << lvl) <= s) ++lvl;
  return lvl;
}

/// floor(log2(min(m, n))) capped at 8.
inline int default_level(Index m, Index n) { return std::max(1, std::min(max_level(m, n), 8)); }

inline WaveletSpec make_wavelet(WaveletFamily family, int level) {
  if (level < 1) throw std::invalid_argument("wavelet level must be >= 1");
  WaveletSpec spec;
  spec.family = family;
  spec.level = level;
  spec.lowpass_dec = detail::lowpass_for(family);
  const std::size_t L = spec.lowpass_dec.size();
  spec.highpass_dec.resize(L);
  for (std::size_t k = 0; k < L; ++k)
    spec.highpass_dec[k] = ((k % 2) ? -1.0 : 1.0) * spec.lowpass_dec[L - 1 - k];
  spec.lowpass_rec.assign(spec.lowpass_dec.rbegin(), spec.lowpass_dec.rend());
  spec.highpass_rec.assign(spec.highpass_dec.rbegin(), spec.highpass_dec.rend());
  return spec;
}

inline WaveletSpec make_wavelet(std::string_view family, int level) {
  return make_wavelet(parse_family(family), level);
}

inline Shape padded_shape(Index m, Index n, const WaveletSpec& spec) {
  if (m < 1 || n < 1) throw std::invalid_argument("padded_shape: dimensions must be >= 1");
  const Index block = Index{1} << spec.level;
  return {(m + block - 1) / block * block, (n + block - 1) / block * block};
}

inline Shape padded_shape(Shape s, const WaveletSpec& spec) {
  return padded_shape(s.rows, s.cols, spec);
}

/// One rectangle of the packed coefficient layout.
struct Subband {
  std::string name;  // "LL<L>", "LH<l>", "HL<l>", "HH<l>"
  int level;
  Index row, col, rows, cols;
};

struct CoeffGrid {
  Matrix data;  // padded shape
  Shape target;
  WaveletSpec spec;

  Shape padded() const noexcept { return shape_of(data); }

  std::vector<Subband> layout() const {
    std::vector<Subband> out;
    const int L = spec.level;
    const Index r0 = data.rows() >> L, c0 = data.cols() >> L;
    out.push_back({"LL" + std::to_string(L), L, 0, 0, r0, c0});
    for (int l = L; l >= 1; --l) {
      const Index hr = data.rows() >> l, hc = data.cols() >> l;
      const auto s = std::to_string(l);
      out.push_back({"LH" + s, l, 0, hc, hr, hc});
      out.push_back({"HL" + s, l, hr, 0, hr, hc});
      out.push_back({"HH" + s, l, hr, hc, hr, hc});
    }
    return out;
  }
};

namespace detail {

inline void check_level(Index m, Index n, const WaveletSpec& spec) {
  if (spec.level < 1) throw std::invalid_argument("wavelet level must be >= 1");
  if (spec.level > max_level(m, n))
    throw std::invalid_argument("wavelet level " + std::to_string(spec.level) +
                                " infeasible for shape " + std::to_string(m) + "x" +
                                std::to_string(n));
}

// Periodized single-level analysis of `in` (even length N) into
// out[0, N/2) = approx, out[N/2, N) = detail.
inline void analyze_1d(std::span<const double> in, std::span<double> out,
                       const WaveletSpec& w) {
  const std::size_t N = in.size(), half = N / 2, L = w.filter_length();
  const double* lo = w.lowpass_dec.data();
  const double* hi = w.highpass_dec.data();
  for (std::size_t i = 0; i < half; ++i) {
    double a = 0.0, d = 0.0;
    std::size_t idx = 2 * i;
    for (std::size_t k = 0; k < L; ++k) {
      const double x = in[idx % N];
      a += lo[k] * x;
      d += hi[k] * x;
      ++idx;
    }
    out[i] = a;
    out[half + i] = d;
  }
}

// Inverse of analyze_1d, written with the reconstruction filters.
inline void synthesize_1d(std::span<const double> in, std::span<double> out,
                          const WaveletSpec& w) {
  const std::size_t N = in.size(), half = N / 2, L = w.filter_length();
  const double* lo = w.lowpass_rec.data();
  const double* hi = w.highpass_rec.data();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const double a = in[i], d = in[half + i];
    std::size_t idx = 2 * i;
    for (std::size_t k = 0; k < L; ++k) {
      out[idx % N] += lo[L - 1 - k] * a + hi[L - 1 - k] * d;
      ++idx;
    }
  }
}

template <bool Forward>
void transform_block(Matrix& x, Index rows, Index cols, const WaveletSpec& w) {
  std::vector<double> in(static_cast<std::size_t>(std::max(rows, cols)));
  std::vector<double> out(in.size());
  auto step = [&](std::span<const double> src, std::span<double> dst) {
    if constexpr (Forward) analyze_1d(src, dst, w);
    else synthesize_1d(src, dst, w);
  };
  auto do_rows = [&] {
    const auto n = static_cast<std::size_t>(cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) in[static_cast<std::size_t>(c)] = x(r, c);
      step({in.data(), n}, {out.data(), n});
      for (Index c = 0; c < cols; ++c) x(r, c) = out[static_cast<std::size_t>(c)];
    }
  };
  auto do_cols = [&] {
    const auto n = static_cast<std::size_t>(rows);
    for (Index c = 0; c < cols; ++c) {
      std::copy_n(&x(0, c), rows, in.data());
      step({in.data(), n}, {out.data(), n});
      std::copy_n(out.data(), rows, &x(0, c));
    }
  };
  if constexpr (Forward) {
    do_rows();
    do_cols();
  } else {
    do_cols();
    do_rows();
  }
}

inline void analyze_padded(Matrix& x, const WaveletSpec& w) {
  for (int l = 0; l < w.level; ++l) transform_block<true>(x, x.rows() >> l, x.cols() >> l, w);
}

inline void synthesize_padded(Matrix& x, const WaveletSpec& w) {
  for (int l = w.level - 1; l >= 0; --l)
    transform_block<false>(x, x.rows() >> l, x.cols() >> l, w);
}

inline Matrix zero_pad(const Matrix& x, Shape padded) {
  if (shape_of(x) == padded) return x;
  Matrix out = Matrix::Zero(padded.rows, padded.cols);
  out.topLeftCorner(x.rows(), x.cols()) = x;
  return out;
}

}  // namespace detail

/// Multi-level analysis of an (m, n) matrix.
inline CoeffGrid dwt2(const Matrix& x, const WaveletSpec& spec) {
  detail::check_level(x.rows(), x.cols(), spec);
  CoeffGrid g{detail::zero_pad(x, padded_shape(x.rows(), x.cols(), spec)), shape_of(x), spec};
  detail::analyze_padded(g.data, spec);
  return g;
}

/// Synthesis followed by cropping to `target`.
inline Matrix idwt2(const Matrix& coeffs, const WaveletSpec& spec, Shape target) {
  detail::check_level(target.rows, target.cols, spec);
  require_shape(coeffs, padded_shape(target, spec), "idwt2 coefficient grid");
  Matrix x = coeffs;
  detail::synthesize_padded(x, spec);
  if (shape_of(x) == target) return x;
  return x.topLeftCorner(target.rows, target.cols);
}

inline Matrix idwt2(const CoeffGrid& grid) {
  if (grid.target.rows < 1 || grid.target.cols < 1)
    throw ShapeError("idwt2: coefficient grid has no target shape");
  return idwt2(grid.data, grid.spec, grid.target);
}

/// Adjoint of crop o idwt2: maps an (m, n) matrix to the padded coefficient
/// space so that <idwt2(C), G> == <C, dwt2_adjoint(G)>.
inline CoeffGrid dwt2_adjoint(const Matrix& g, const WaveletSpec& spec, Shape target) {
  require_shape(g, target, "dwt2_adjoint input");
  detail::check_level(target.rows, target.cols, spec);
  // The synthesis operator is orthogonal on the padded space, so its adjoint
  // is the analysis operator, and the adjoint of cropping is zero-padding.
  CoeffGrid out{detail::zero_pad(g, padded_shape(target, spec)), target, spec};
  detail::analyze_padded(out.data, spec);
  return out;
}

struct SubbandEnergy {
  std::string name;
  int level;
  double energy;
};

/// Sum of squared coefficients per subband, in layout order.
inline std::vector<SubbandEnergy> subband_energy(const CoeffGrid& grid) {
  std::vector<SubbandEnergy> out;
  for (const auto& b : grid.layout())
    out.push_back({b.name, b.level, grid.data.block(b.row, b.col, b.rows, b.cols).squaredNorm()});
  return out;
}

}  // namespace waveft
