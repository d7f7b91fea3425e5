// SPDX-License-Identifier: Apache-2.0
#pragma once

// Adapter checkpoints (JSON), dense weight files (binary) and CSV output.
// Every file is written to a temporary sibling and renamed into place.

#include "waveft/adapter.hpp"
#include "waveft/types.hpp"
#include "waveft/wavelet.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace waveft::io {

using Json = nlohmann::ordered_json;

/// Unreadable, missing or malformed files. Maps to exit code 2 in the CLI.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Adapter adapter;
  std::uint64_t seed = 0;
};

namespace detail {

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, Index rows, Index cols, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw IoError(std::string("checkpoint: ") + what + " must have " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Index>(r.size()) != cols)
      throw IoError(std::string("checkpoint: ") + what + " row " + std::to_string(i) + " must have " +
                    std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Json support_to_json(const SparseSupport& s) {
  Json out = Json::array();
  for (const auto& p : s.positions) out.push_back(Json::array({p.row, p.col}));
  return out;
}

inline SparseSupport support_from_json(const Json& j, Shape grid, std::uint64_t seed) {
  if (!j.is_array()) throw IoError("checkpoint: support must be an array");
  SparseSupport s{grid, {}, seed};
  for (const Json& e : j) {
    if (!e.is_array() || e.size() != 2) throw IoError("checkpoint: support entries are [row, col]");
    const Position p{e[0].get<Index>(), e[1].get<Index>()};
    if (p.row < 0 || p.row >= grid.rows || p.col < 0 || p.col >= grid.cols)
      throw IoError("checkpoint: support position outside the grid");
    if (!s.positions.empty() && !(s.positions.back() < p))
      throw IoError("checkpoint: support must be sorted row-major without duplicates");
    s.positions.push_back(p);
  }
  return s;
}

inline Json values_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Vector values_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("checkpoint: values must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace detail

inline Json checkpoint_to_json(const Checkpoint& ck) {
  check_well_formed(ck.adapter);
  const Shape base = base_shape(ck.adapter);
  Json j;
  j["version"] = kCheckpointVersion;
  j["kind"] = std::string(to_string(kind_of(ck.adapter)));
  j["base_shape"] = Json::array({base.rows, base.cols});
  j["lambda"] = lambda_of(ck.adapter);
  j["seed"] = ck.seed;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SpectralAdapter>) {
          j["wavelet"] = {{"family", std::string(to_string(x.wavelet.family))},
                          {"level", x.wavelet.level}};
        }
        if constexpr (std::is_same_v<T, LowRankAdapter>) {
          j["alpha"] = x.alpha;
          j["B"] = detail::matrix_to_json(x.B);
          j["A"] = detail::matrix_to_json(x.A);
        } else {
          j["support_seed"] = x.support.seed;
          j["support"] = detail::support_to_json(x.support);
          j["values"] = detail::values_to_json(x.values);
        }
      },
      ck.adapter);
  return j;
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw IoError("checkpoint: top level must be an object");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw IoError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
    const AdapterKind kind = parse_adapter_kind(j.at("kind").get<std::string>());
    const Json& bs = j.at("base_shape");
    if (!bs.is_array() || bs.size() != 2) throw IoError("checkpoint: base_shape must be [m, n]");
    const Shape base{bs[0].get<Index>(), bs[1].get<Index>()};
    if (base.rows < 1 || base.cols < 1) throw IoError("checkpoint: base_shape must be positive");
    const double lambda = j.at("lambda").get<double>();
    Checkpoint ck;
    ck.seed = j.at("seed").get<std::uint64_t>();

    if (kind == AdapterKind::lora) {
      LowRankAdapter a;
      a.lambda = lambda;
      a.alpha = j.at("alpha").get<double>();
      const Json& B = j.at("B");
      const Index r = B.empty() ? 0 : static_cast<Index>(B.at(0).size());
      if (r < 1) throw IoError("checkpoint: lora rank must be >= 1");
      a.B = detail::matrix_from_json(B, base.rows, r, "B");
      a.A = detail::matrix_from_json(j.at("A"), base.cols, r, "A");
      ck.adapter = std::move(a);
    } else {
      Vector values = detail::values_from_json(j.at("values"));
      const auto support_seed = j.at("support_seed").get<std::uint64_t>();
      if (kind == AdapterKind::shira) {
        DirectAdapter a;
        a.lambda = lambda;
        a.support = detail::support_from_json(j.at("support"), base, support_seed);
        a.values = std::move(values);
        ck.adapter = std::move(a);
      } else {
        SpectralAdapter a;
        a.lambda = lambda;
        a.base_shape = base;
        const Json& w = j.at("wavelet");
        a.wavelet = make_wavelet(w.at("family").get<std::string>(), w.at("level").get<int>());
        if (a.wavelet.level > max_level(base.rows, base.cols))
          throw IoError("checkpoint: wavelet level infeasible for base shape");
        a.support = detail::support_from_json(j.at("support"), padded_shape(base, a.wavelet), support_seed);
        a.values = std::move(values);
        ck.adapter = std::move(a);
      }
      const Index ns = std::visit(
          [](const auto& x) -> Index {
            if constexpr (requires { x.support; }) return x.support.size();
            else return 0;
          },
          ck.adapter);
      if (ns != num_params(ck.adapter))
        throw IoError("checkpoint: values length " + std::to_string(num_params(ck.adapter)) +
                      " differs from support length " + std::to_string(ns));
    }
    return ck;
  } catch (const Json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

/// Canonical text form; doubles print as shortest round-trip decimals, so
/// dump(load(dump(x))) == dump(x).
inline std::string dump_checkpoint(const Checkpoint& ck) { return checkpoint_to_json(ck).dump(1) + "\n"; }

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  atomic_write(path, dump_checkpoint(ck));
}

inline Checkpoint parse_checkpoint(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_bytes(path));
}

// ---------------------------------------------------------------------------
// Dense weight files: 8-byte magic, uint32 m, uint32 n (little-endian), then
// m*n little-endian float64 in row-major order.

inline constexpr std::string_view kWeightMagic = "WAVEFTW1";
inline constexpr std::size_t kWeightHeaderBytes = 16;

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline std::uint64_t get_le(std::string_view in, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b)
    v |= std::uint64_t{static_cast<unsigned char>(in[off + static_cast<std::size_t>(b)])} << (8 * b);
  return v;
}

}  // namespace detail

inline std::string encode_weights(const Matrix& w) {
  if (w.rows() > 0xffffffffLL || w.cols() > 0xffffffffLL) throw IoError("weights: dims exceed uint32");
  std::string out(kWeightMagic);
  out.reserve(kWeightHeaderBytes + static_cast<std::size_t>(w.size()) * 8);
  detail::put_le(out, static_cast<std::uint64_t>(w.rows()), 4);
  detail::put_le(out, static_cast<std::uint64_t>(w.cols()), 4);
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) detail::put_le(out, std::bit_cast<std::uint64_t>(w(i, j)), 8);
  return out;
}

inline Matrix decode_weights(std::string_view bytes, const std::string& what = "weights") {
  if (bytes.size() < kWeightHeaderBytes || bytes.substr(0, 8) != kWeightMagic)
    throw IoError(what + ": missing WAVEFTW1 header");
  const auto m = static_cast<Index>(detail::get_le(bytes, 8, 4));
  const auto n = static_cast<Index>(detail::get_le(bytes, 12, 4));
  const std::size_t need = kWeightHeaderBytes + static_cast<std::size_t>(m * n) * 8;
  if (bytes.size() != need)
    throw IoError(what + ": size " + std::to_string(bytes.size()) + " bytes, header implies " +
                  std::to_string(need));
  Matrix w(m, n);
  std::size_t off = kWeightHeaderBytes;
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j, off += 8) w(i, j) = std::bit_cast<double>(detail::get_le(bytes, off, 8));
  return w;
}

inline void write_weights(const std::filesystem::path& path, const Matrix& w) {
  atomic_write(path, encode_weights(w));
}

inline Matrix read_weights(const std::filesystem::path& path) {
  return decode_weights(read_bytes(path), path.string());
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest round-trip decimal, matching the JSON encoding.
inline std::string format_double(double v) { return Json(v).dump(); }

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header) { row_strings(header); }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }
  void save(const std::filesystem::path& path) const { atomic_write(path, out_.str()); }

 private:
  void row_strings(std::initializer_list<std::string_view> cells) {
    bool first = true;
    for (auto c : cells) {
      out_ << (first ? "" : ",") << c;
      first = false;
    }
    out_ << '\n';
  }
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <typename T>
    requires std::is_integral_v<T>
  static std::string cell(T v) { return std::to_string(v); }

  std::ostringstream out_;
};

}  // namespace waveft::io
