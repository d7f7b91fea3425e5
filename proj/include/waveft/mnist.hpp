// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-layer MNIST harness: IDX ingestion and a budget sweep over the three
// adapter kinds on a zero-initialised 10 x 784 layer (logits = W x).

#include "waveft/adapter.hpp"
#include "waveft/rng.hpp"
#include "waveft/trainer.hpp"
#include "waveft/types.hpp"
#include "waveft/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace waveft::mnist {

inline constexpr Index kPixels = 784;
inline constexpr Index kClasses = 10;
inline constexpr std::uint32_t kImageMagic = 0x00000803;
inline constexpr std::uint32_t kLabelMagic = 0x00000801;

/// Raised for malformed IDX input; `path` names the offending file.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct Dataset {
  Matrix images;  // N x 784, pixels in [0, 1]
  std::vector<int> labels;

  Index size() const noexcept { return images.rows(); }

  LinearDataset as_linear() const { return {images, Matrix(), labels}; }
};

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string(), "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

inline std::uint32_t check_header(const std::vector<unsigned char>& b, std::uint32_t magic,
                                  std::size_t header_bytes, const std::string& path) {
  if (b.size() < 4) throw FormatError(path, "truncated header");
  const std::uint32_t got = be32(b, 0);
  if (got != magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x, expected 0x%08x", got, magic);
    throw FormatError(path, buf);
  }
  if (b.size() < header_bytes) throw FormatError(path, "truncated header");
  return be32(b, 4);
}

}  // namespace detail

/// Read an uncompressed IDX image/label pair.
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const std::string ipath = images_path.string(), lpath = labels_path.string();
  const auto ib = detail::read_file(images_path);
  const auto lb = detail::read_file(labels_path);

  const std::uint32_t n_img = detail::check_header(ib, kImageMagic, 16, ipath);
  const std::uint32_t rows = detail::be32(ib, 8), cols = detail::be32(ib, 12);
  if (std::uint64_t{rows} * cols != static_cast<std::uint64_t>(kPixels))
    throw FormatError(ipath, "expected 28x28 images, got " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
  const std::uint64_t need = 16 + std::uint64_t{n_img} * kPixels;
  if (ib.size() < need)
    throw FormatError(ipath, "truncated: " + std::to_string(ib.size()) + " bytes, header implies " +
                                 std::to_string(need));

  const std::uint32_t n_lab = detail::check_header(lb, kLabelMagic, 8, lpath);
  if (lb.size() < 8 + std::uint64_t{n_lab})
    throw FormatError(lpath, "truncated: header implies " + std::to_string(n_lab) + " labels");
  if (n_lab != n_img)
    throw FormatError(lpath, "label count " + std::to_string(n_lab) + " differs from image count " +
                                 std::to_string(n_img));

  Dataset d;
  d.images.resize(n_img, kPixels);
  for (Index i = 0; i < static_cast<Index>(n_img); ++i)
    for (Index j = 0; j < kPixels; ++j)
      d.images(i, j) = static_cast<double>(ib[16 + static_cast<std::size_t>(i * kPixels + j)]) / 255.0;
  d.labels.resize(n_lab);
  for (std::size_t i = 0; i < n_lab; ++i) {
    const int y = lb[8 + i];
    if (y >= kClasses) throw FormatError(lpath, "label " + std::to_string(y) + " out of range");
    d.labels[i] = y;
  }
  return d;
}

/// Standard file names inside a data directory.
inline Dataset load_split(const std::filesystem::path& dir, bool train) {
  const std::string stem = train ? "train" : "t10k";
  return load_idx(dir / (stem + "-images-idx3-ubyte"), dir / (stem + "-labels-idx1-ubyte"));
}

struct SweepSpec {
  std::vector<AdapterKind> methods{AdapterKind::lora, AdapterKind::shira, AdapterKind::waveft};
  std::vector<Index> lora_ranks{1, 2, 3, 4, 5, 6};
  std::vector<Index> sparse_budgets{100, 200, 400, 794, 1588, 2382, 3176, 3970, 4764};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  TrainConfig train_config = mnist_train_config();
  WaveletFamily family = WaveletFamily::db1;
  int level = 2;

  void validate() const {
    if (methods.empty()) throw std::invalid_argument("sweep: no methods");
    if (seeds.empty()) throw std::invalid_argument("sweep: no seeds");
    for (Index r : lora_ranks)
      if (r < 1 || r > kClasses) throw std::invalid_argument("sweep: lora rank out of [1, 10]");
    for (Index p : sparse_budgets)
      if (p < 0 || p > kPixels * kClasses)
        throw std::invalid_argument("sweep: budget " + std::to_string(p) + " exceeds 7840");
    train_config.validate();
  }
};

struct SweepRow {
  AdapterKind method;
  Index params;
  std::uint64_t seed;
  double accuracy;
  double final_loss;
};

/// Adapter for one sweep cell; `size` is the rank for lora and p otherwise.
inline Adapter make_cell_adapter(AdapterKind method, Index size, std::uint64_t seed,
                                 const SweepSpec& spec) {
  const Shape base{kClasses, kPixels};
  switch (method) {
    case AdapterKind::lora: return make_low_rank(base, size, seed);
    case AdapterKind::shira: return make_direct(base, size, seed);
    case AdapterKind::waveft: return make_spectral(base, size, make_wavelet(spec.family, spec.level), seed);
  }
  throw std::logic_error("unreachable adapter kind");
}

/// Train one fresh adapter and score it on the test split.
inline SweepRow run_cell(const Dataset& train, const Dataset& test, AdapterKind method, Index size,
                         std::uint64_t seed, const SweepSpec& spec) {
  const Matrix W0 = Matrix::Zero(kClasses, kPixels);
  Adapter a = make_cell_adapter(method, size, derive_seed(seed, {0}), spec);
  TrainConfig cfg = spec.train_config;
  cfg.loss = LossKind::cross_entropy;
  cfg.seed = derive_seed(seed, {1});
  const TrainReport rep = train_linear(W0, a, train.as_linear(), cfg);
  return {method, num_params(a), seed, classification_accuracy(W0, a, test.images, test.labels),
          rep.final_loss};
}

/// Every method x budget x seed cell, in that nesting order.
inline std::vector<SweepRow> run_sweep(const Dataset& train, const Dataset& test,
                                       const SweepSpec& spec, std::ostream* log = nullptr) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (AdapterKind method : spec.methods) {
    const auto& sizes = method == AdapterKind::lora ? spec.lora_ranks : spec.sparse_budgets;
    for (Index size : sizes)
      for (std::uint64_t seed : spec.seeds) {
        rows.push_back(run_cell(train, test, method, size, seed, spec));
        if (log)
          *log << to_string(method) << " params=" << rows.back().params << " seed=" << seed
               << " accuracy=" << rows.back().accuracy << '\n';
      }
  }
  return rows;
}

struct CurvePoint {
  AdapterKind method;
  Index params;
  int runs;
  double mean;
  double stddev;  // sample standard deviation, 0 for a single run
};

/// Group by (method, params), sorted by method then params.
inline std::vector<CurvePoint> accuracy_curve(const std::vector<SweepRow>& table) {
  if (table.empty()) throw std::invalid_argument("accuracy_curve: empty table");
  std::map<std::pair<int, Index>, std::vector<double>> groups;
  for (const auto& r : table) groups[{static_cast<int>(r.method), r.params}].push_back(r.accuracy);
  std::vector<CurvePoint> out;
  for (const auto& [key, acc] : groups) {
    const auto T = static_cast<double>(acc.size());
    double mean = 0.0;
    for (double v : acc) mean += v;
    mean /= T;
    double var = 0.0;
    for (double v : acc) var += (v - mean) * (v - mean);
    out.push_back({static_cast<AdapterKind>(key.first), key.second, static_cast<int>(acc.size()),
                   mean, acc.size() > 1 ? std::sqrt(var / (T - 1.0)) : 0.0});
  }
  return out;
}

inline double mean_accuracy(const std::vector<SweepRow>& table, AdapterKind method, Index params) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : table)
    if (r.method == method && r.params == params) {
      s += r.accuracy;
      ++n;
    }
  if (n == 0) throw std::invalid_argument("mean_accuracy: no matching rows");
  return s / n;
}

}  // namespace waveft::mnist
