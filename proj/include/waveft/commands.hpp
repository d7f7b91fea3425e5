// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command implementations behind the `waveft` CLI. Each command takes a parsed
// config, writes its artifacts under out_dir and returns an exit code:
// 0 success, 1 invariant failure, 2 usage or IO error.

#include "waveft/adapter.hpp"
#include "waveft/interp.hpp"
#include "waveft/io.hpp"
#include "waveft/mnist.hpp"
#include "waveft/rankscan.hpp"
#include "waveft/rng.hpp"
#include "waveft/trainer.hpp"
#include "waveft/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace waveft::cli {

enum ExitCode : int { kOk = 0, kInvariantFailure = 1, kUsageError = 2 };

/// Bad config keys or values. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads typed keys from a JSON object and rejects any key never asked for.
class ConfigReader {
 public:
  ConfigReader(io::Json j, std::string command) : j_(std::move(j)), command_(std::move(command)) {
    if (j_.is_null()) j_ = io::Json::object();
    if (!j_.is_object()) throw ConfigError("config must be a JSON object");
    if (j_.contains("command")) {
      if (j_["command"] != command_)
        throw ConfigError("config is for command '" + j_["command"].dump() + "', not '" + command_ + "'");
      known_.insert("command");
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    known_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_[key].template get<T>();
    } catch (const io::Json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!known_.count(key)) throw ConfigError("unknown config key '" + key + "' for " + command_);
  }

 private:
  io::Json j_;
  std::string command_;
  std::set<std::string> known_;
};

inline io::Json read_config_file(const std::filesystem::path& path) {
  try {
    return io::Json::parse(io::read_bytes(path));
  } catch (const io::Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace detail {

inline std::vector<WaveletFamily> parse_families(const std::vector<std::string>& names) {
  std::vector<WaveletFamily> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_family(n));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

inline std::vector<std::string> family_names(std::span<const WaveletFamily> fs) {
  std::vector<std::string> out;
  for (auto f : fs) out.emplace_back(to_string(f));
  return out;
}

inline Matrix gaussian_matrix(Rng& rng, Index r, Index c) {
  Matrix a(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) a(i, j) = rng.normal();
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// wavelet-check

struct WaveletCheckConfig {
  std::vector<WaveletFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
  int shapes = 50;
  Index max_dim = 128;
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
  /// Test hook applied to each spec before use; lets tests break a filter.
  std::function<void(WaveletSpec&)> mutate_spec;

  static WaveletCheckConfig from_json(const io::Json& j) {
    ConfigReader r(j, "wavelet-check");
    WaveletCheckConfig c;
    c.families = detail::parse_families(r.get("families", detail::family_names(kAllFamilies)));
    c.shapes = r.get("shapes", c.shapes);
    c.max_dim = r.get("max_dim", c.max_dim);
    c.tolerance = r.get("tolerance", c.tolerance);
    c.seed = r.get("seed", c.seed);
    r.finish();
    return c;
  }
};

struct WaveletFamilyReport {
  WaveletFamily family;
  double max_reconstruction_error = 0.0;
  double max_adjoint_mismatch = 0.0;
  double max_parseval_error = 0.0;  // relative, on the padded grid
  bool ok = false;
};

/// Reconstruction, adjoint and energy checks on random shapes for one family.
inline WaveletFamilyReport check_wavelet_family(WaveletFamily family, const WaveletCheckConfig& cfg) {
  WaveletFamilyReport rep{family};
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(family)}));
  for (int s = 0; s < cfg.shapes; ++s) {
    const Index m = 2 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cfg.max_dim - 1)));
    const Index n = 2 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cfg.max_dim - 1)));
    const int level = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(default_level(m, n))));
    WaveletSpec spec = make_wavelet(family, level);
    if (cfg.mutate_spec) cfg.mutate_spec(spec);

    const Matrix x = detail::gaussian_matrix(rng, m, n);
    const CoeffGrid c = dwt2(x, spec);
    const Matrix back = idwt2(c);
    rep.max_reconstruction_error =
        std::max(rep.max_reconstruction_error, (back - x).cwiseAbs().maxCoeff());
    rep.max_parseval_error = std::max(
        rep.max_parseval_error, std::abs(c.data.squaredNorm() - x.squaredNorm()) / x.squaredNorm());

    // <crop(idwt(C)), G> against <C, adjoint(G)>
    const Shape pad = padded_shape(m, n, spec);
    const Matrix C = detail::gaussian_matrix(rng, pad.rows, pad.cols);
    const Matrix G = detail::gaussian_matrix(rng, m, n);
    const double lhs = idwt2(C, spec, {m, n}).cwiseProduct(G).sum();
    const double rhs = C.cwiseProduct(dwt2_adjoint(G, spec, {m, n}).data).sum();
    rep.max_adjoint_mismatch = std::max(rep.max_adjoint_mismatch, std::abs(lhs - rhs));
  }
  rep.ok = rep.max_reconstruction_error <= cfg.tolerance && rep.max_adjoint_mismatch <= cfg.tolerance &&
           rep.max_parseval_error <= cfg.tolerance;
  return rep;
}

inline int cmd_wavelet_check(const WaveletCheckConfig& cfg, const std::filesystem::path& out_dir,
                             std::ostream& out) {
  if (cfg.families.empty()) throw ConfigError("nothing to check");
  if (cfg.shapes < 1 || cfg.max_dim < 2) throw ConfigError("wavelet-check: need shapes >= 1, max_dim >= 2");
  io::CsvWriter csv({"family", "max_reconstruction_error", "max_adjoint_mismatch", "max_parseval_error", "ok"});
  bool all_ok = true;
  for (auto f : cfg.families) {
    const auto r = check_wavelet_family(f, cfg);
    all_ok = all_ok && r.ok;
    csv.row(to_string(f), r.max_reconstruction_error, r.max_adjoint_mismatch, r.max_parseval_error,
            r.ok ? 1 : 0);
    out << to_string(f) << ": recon=" << r.max_reconstruction_error
        << " adjoint=" << r.max_adjoint_mismatch << " parseval=" << r.max_parseval_error
        << (r.ok ? " ok" : " FAIL") << '\n';
  }
  csv.save(out_dir / "wavelet_check.csv");
  return all_ok ? kOk : kInvariantFailure;
}

// ---------------------------------------------------------------------------
// rank-scan

struct RankScanCommandConfig {
  RankScanConfig scan{{256, 256}, {}, 20, 0, ValueDist::gaussian, 1};
  /// Used when p_grid is empty: p = round(f * (m + n)).
  std::vector<double> p_multiples{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};

  RankScanConfig resolved() const {
    RankScanConfig c = scan;
    if (c.p_grid.empty()) {
      const double mn = static_cast<double>(c.shape.rows + c.shape.cols);
      for (double f : p_multiples) c.p_grid.push_back(static_cast<Index>(std::llround(f * mn)));
    }
    return c;
  }

  static RankScanCommandConfig from_json(const io::Json& j) {
    ConfigReader r(j, "rank-scan");
    RankScanCommandConfig c;
    const std::string profile = r.get<std::string>("profile", "fast");
    if (profile == "full") c.scan.shape = {1280, 2048};
    else if (profile != "fast") throw ConfigError("rank-scan: profile must be fast or full");
    c.scan.shape.rows = r.get("m", c.scan.shape.rows);
    c.scan.shape.cols = r.get("n", c.scan.shape.cols);
    c.scan.p_grid = r.get("p_grid", c.scan.p_grid);
    c.p_multiples = r.get("p_multiples", c.p_multiples);
    c.scan.trials = r.get("trials", c.scan.trials);
    c.scan.master_seed = r.get("master_seed", c.scan.master_seed);
    try {
      c.scan.value_dist = parse_value_dist(r.get<std::string>("value_dist", "gaussian"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    c.scan.threads = r.get("threads", c.scan.threads);
    r.finish();
    return c;
  }
};

inline int cmd_rank_scan(const RankScanCommandConfig& cmd, const std::filesystem::path& out_dir,
                         std::ostream& out) {
  const RankScanConfig cfg = cmd.resolved();
  RankScanResult res;
  try {
    res = rank_scan(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  io::CsvWriter trials({"m", "n", "p", "trial", "rank"});
  for (const auto& r : res.records) trials.row(cfg.shape.rows, cfg.shape.cols, r.p, r.trial, r.rank);
  io::CsvWriter summary({"p", "mean", "ci_lo", "ci_hi", "full_rank_freq"});
  for (const auto& s : res.summary) {
    summary.row(s.p, s.mean, s.ci_lo, s.ci_hi, s.full_rank_freq);
    out << "p=" << s.p << " mean_rank=" << s.mean << " ci=[" << s.ci_lo << ", " << s.ci_hi
        << "] full_rank_freq=" << s.full_rank_freq << '\n';
  }
  trials.save(out_dir / "rank_trials.csv");
  summary.save(out_dir / "rank_summary.csv");
  return kOk;
}

// ---------------------------------------------------------------------------
// interp

struct InterpConfig {
  std::string mode = "constructive";  // or "gradient"
  Index m = 64, n = 64;                // constructive instance shape
  Index k = 5;
  Index z_rank = -1;
  Index d = 128;                       // gradient mode: d x d layer
  Index total_params = 2560;
  std::string method = "shira";
  WaveletFamily family = WaveletFamily::db1;
  int level = 0;
  int epochs = 5000;
  std::uint64_t seed = 0;

  static InterpConfig from_json(const io::Json& j) {
    ConfigReader r(j, "interp");
    InterpConfig c;
    c.mode = r.get("mode", c.mode);
    if (c.mode != "constructive" && c.mode != "gradient")
      throw ConfigError("interp: mode must be constructive or gradient");
    c.m = r.get("m", c.m);
    c.n = r.get("n", c.n);
    c.k = r.get("k", c.k);
    c.z_rank = r.get("z_rank", c.z_rank);
    c.d = r.get("d", c.d);
    c.total_params = r.get("total_params", c.total_params);
    c.method = r.get("method", c.method);
    if (c.method != "shira" && c.method != "waveft") throw ConfigError("interp: method must be shira or waveft");
    c.family = detail::parse_families({r.get<std::string>("family", "db1")}).front();
    c.level = r.get("level", c.level);
    c.epochs = r.get("epochs", c.epochs);
    c.seed = r.get("seed", c.seed);
    r.finish();
    return c;
  }
};

inline int cmd_interp(const InterpConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  io::Json summary;
  summary["mode"] = cfg.mode;
  summary["seed"] = cfg.seed;
  summary["k"] = cfg.k;
  int code = kOk;
  if (cfg.mode == "constructive") {
    if (cfg.m < 1 || cfg.n < 1 || cfg.k < 1 || cfg.k > cfg.n)
      throw ConfigError("interp: need m, n >= 1 and 1 <= k <= n");
    PlantedOptions opt;
    opt.z_rank = cfg.z_rank;
    const auto planted = planted_problem(cfg.m, cfg.n, cfg.k, cfg.seed, opt);
    const auto& prob = planted.problem;
    const auto search = find_pivot_columns(prob);
    summary["m"] = cfg.m;
    summary["n"] = cfg.n;
    summary["support_size"] = prob.support.size();
    summary["changed_rows"] = prob.changed_rows().size();
    bool exact = false;
    if (search.pivots) {
      const Matrix dW = construct_delta(prob, *search.pivots);
      const auto chk = check_interpolation(prob, dW);
      const double scale = std::max(1.0, prob.Y.cwiseAbs().maxCoeff());
      exact = chk.support_ok && chk.max_residual <= 1e-8 * scale && chk.rank_delta == chk.rank_changed;
      summary["pivot_columns"] = search.pivots->columns;
      summary["support_ok"] = chk.support_ok;
      summary["max_residual"] = chk.max_residual;
      summary["rank_delta"] = chk.rank_delta;
      summary["rank_changed_rows"] = chk.rank_changed;
    } else {
      summary["reason"] = search.reason;
    }
    summary["exact"] = exact;
    // Planted instances satisfy the hypotheses, so anything short of exact is a defect.
    if (!exact) code = kInvariantFailure;
  } else {
    if (cfg.d < 1 || cfg.k < 1 || cfg.total_params < 0 || cfg.total_params > cfg.d * cfg.d)
      throw ConfigError("interp: need d, k >= 1 and 0 <= total_params <= d^2");
    TrainConfig tc = interpolation_train_config();
    tc.epochs = cfg.epochs;
    CapacityOptions opt;
    opt.method = parse_adapter_kind(cfg.method);
    opt.family = cfg.family;
    opt.level = cfg.level;
    const auto res = capacity_experiment(cfg.d, cfg.k, cfg.total_params, tc, cfg.seed, opt);
    summary["d"] = cfg.d;
    summary["total_params"] = cfg.total_params;
    summary["method"] = cfg.method;
    summary["initial_loss"] = res.report.initial_loss;
    summary["final_loss"] = res.report.final_loss;
    summary["min_row_occupancy"] = res.min_row_occupancy;
    summary["wallclock_seconds"] = res.report.wallclock_seconds;
    summary["exact"] = res.success;
    io::CsvWriter loss({"epoch", "loss"});
    for (std::size_t e = 0; e < res.report.epoch_losses.size(); ++e) loss.row(e, res.report.epoch_losses[e]);
    loss.save(out_dir / "interp_loss.csv");
  }
  io::atomic_write(out_dir / "interp_summary.json", summary.dump(1) + "\n");
  out << summary.dump() << '\n';
  return code;
}

// ---------------------------------------------------------------------------
// bound

inline constexpr double kStatedUnionBound = 0.01;

struct BoundConfig {
  std::int64_t total_params = 15680;
  std::int64_t n_rows = 784;
  std::int64_t k = 5;
  int empirical_seeds = 0;  // > 0: also sample supports and count min-row-occupancy >= k
  std::uint64_t seed = 0;

  static BoundConfig from_json(const io::Json& j) {
    ConfigReader r(j, "bound");
    BoundConfig c;
    c.total_params = r.get("total_params", c.total_params);
    c.n_rows = r.get("n_rows", c.n_rows);
    c.k = r.get("k", c.k);
    c.empirical_seeds = r.get("empirical_seeds", c.empirical_seeds);
    c.seed = r.get("seed", c.seed);
    r.finish();
    return c;
  }
};

/// Seeds (out of `seeds`) whose uniform support of total_params entries on an
/// n_rows x n_rows grid gives every row at least k entries.
inline int occupancy_successes(std::int64_t total_params, std::int64_t n_rows, std::int64_t k, int seeds,
                               std::uint64_t master) {
  int ok = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto sup = sample_support(n_rows, n_rows, total_params, derive_seed(master, {static_cast<std::uint64_t>(s)}));
    const auto occ = row_occupancy(sup);
    if (*std::min_element(occ.begin(), occ.end()) >= k) ++ok;
  }
  return ok;
}

inline int cmd_bound(const BoundConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  OccupancyBound b;
  try {
    b = row_occupancy_bound(cfg.total_params, cfg.n_rows, cfg.k);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  io::Json summary;
  summary["total_params"] = cfg.total_params;
  summary["n_rows"] = cfg.n_rows;
  summary["k"] = cfg.k;
  summary["per_row_tail"] = b.per_row_tail;
  summary["union_bound"] = b.union_bound;
  summary["stated_bound"] = kStatedUnionBound;
  out << "P(some row has fewer than " << cfg.k << " of " << cfg.total_params << " entries, "
      << cfg.n_rows << " rows) <= " << b.union_bound << "  (per-row tail " << b.per_row_tail
      << "; stated value <= " << kStatedUnionBound << ")\n";
  if (cfg.empirical_seeds > 0) {
    if (cfg.total_params > cfg.n_rows * cfg.n_rows) throw ConfigError("bound: total_params exceeds n_rows^2");
    const int ok = occupancy_successes(cfg.total_params, cfg.n_rows, cfg.k, cfg.empirical_seeds, cfg.seed);
    summary["empirical_seeds"] = cfg.empirical_seeds;
    summary["empirical_successes"] = ok;
    out << "empirical: min row occupancy >= " << cfg.k << " in " << ok << "/" << cfg.empirical_seeds
        << " seeds\n";
  }
  io::atomic_write(out_dir / "bound.json", summary.dump(1) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// mnist

struct MnistConfig {
  std::filesystem::path data_dir;
  mnist::SweepSpec sweep;

  static MnistConfig from_json(const io::Json& j) {
    ConfigReader r(j, "mnist");
    MnistConfig c;
    c.data_dir = r.get<std::string>("data_dir", "");
    std::vector<std::string> methods;
    for (auto m : c.sweep.methods) methods.emplace_back(to_string(m));
    methods = r.get("methods", methods);
    c.sweep.methods.clear();
    try {
      for (const auto& m : methods) c.sweep.methods.push_back(parse_adapter_kind(m));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    c.sweep.lora_ranks = r.get("lora_ranks", c.sweep.lora_ranks);
    c.sweep.sparse_budgets = r.get("sparse_budgets", c.sweep.sparse_budgets);
    c.sweep.seeds = r.get("seeds", c.sweep.seeds);
    auto& t = c.sweep.train_config;
    t.epochs = r.get("epochs", t.epochs);
    t.batch_size = r.get("batch_size", t.batch_size);
    t.lr = r.get("lr", t.lr);
    t.scheduler.gamma = r.get("gamma", t.scheduler.gamma);
    t.scheduler.step_epochs = r.get("step_epochs", t.scheduler.step_epochs);
    c.sweep.family = detail::parse_families({r.get<std::string>("family", "db1")}).front();
    c.sweep.level = r.get("level", c.sweep.level);
    r.finish();
    return c;
  }
};

inline int cmd_mnist(const MnistConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  if (cfg.data_dir.empty()) throw ConfigError("mnist: no data directory (use --data-dir or WAVEFT_MNIST_DIR)");
  try {
    cfg.sweep.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  mnist::Dataset train, test;
  try {
    train = mnist::load_split(cfg.data_dir, true);
    test = mnist::load_split(cfg.data_dir, false);
  } catch (const mnist::FormatError& e) {
    throw io::IoError(e.what());
  }
  const auto rows = mnist::run_sweep(train, test, cfg.sweep, &out);
  io::CsvWriter results({"method", "params", "seed", "accuracy"});
  for (const auto& r : rows) results.row(to_string(r.method), r.params, r.seed, r.accuracy);
  io::CsvWriter curve({"method", "params", "runs", "mean", "std"});
  for (const auto& p : mnist::accuracy_curve(rows))
    curve.row(to_string(p.method), p.params, p.runs, p.mean, p.stddev);
  results.save(out_dir / "mnist_results.csv");
  curve.save(out_dir / "mnist_curve.csv");
  return kOk;
}

// ---------------------------------------------------------------------------
// budget

struct BudgetConfig {
  LayerCensus census = sdxl_attention_census();
  Index rank = 1;
  std::optional<std::int64_t> total_params;  // default: the LoRA budget at `rank`
  AllocationPolicy policy = AllocationPolicy::fixed;

  static LayerCensus census_from_json(const io::Json& j) {
    LayerCensus c;
    if (!j.is_array()) throw ConfigError("census must be an array of {rows, cols, count}");
    for (const auto& e : j) {
      ConfigReader r(e, "census entry");
      const Index rows = r.get<Index>("rows", 0), cols = r.get<Index>("cols", 0);
      const int count = r.get("count", 0);
      r.finish();
      c.entries.push_back({{rows, cols}, count});
    }
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return c;
  }

  /// A string "census" is a file path, resolved against base_dir when relative.
  static BudgetConfig from_json(const io::Json& j, const std::filesystem::path& base_dir = {}) {
    ConfigReader r(j, "budget");
    BudgetConfig c;
    const io::Json census = r.get<io::Json>("census", io::Json());
    if (census.is_string()) {
      std::filesystem::path path = census.get<std::string>();
      if (path.is_relative()) path = base_dir / path;
      c.census = census_from_json(read_config_file(path));
    } else if (!census.is_null()) c.census = census_from_json(census);
    c.rank = r.get("rank", c.rank);
    const io::Json total = r.get<io::Json>("total_params", io::Json());
    if (!total.is_null()) c.total_params = total.get<std::int64_t>();
    try {
      c.policy = parse_allocation_policy(r.get<std::string>("policy", "fixed"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    r.finish();
    return c;
  }
};

inline int cmd_budget(const BudgetConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  std::int64_t lora;
  std::vector<Index> alloc;
  try {
    lora = lora_budget(cfg.census, cfg.rank);
    alloc = allocate_budget(cfg.census, cfg.total_params.value_or(lora), cfg.policy);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto layers = cfg.census.expand();
  io::CsvWriter csv({"layer", "rows", "cols", "params"});
  for (std::size_t i = 0; i < layers.size(); ++i) csv.row(i, layers[i].rows, layers[i].cols, alloc[i]);
  csv.save(out_dir / "budget_allocation.csv");
  const auto [lo, hi] = std::minmax_element(alloc.begin(), alloc.end());
  out << "layers=" << cfg.census.layer_count() << " lora_budget(r=" << cfg.rank << ")=" << lora
      << " total=" << cfg.total_params.value_or(lora) << " per_layer=[" << *lo << ", " << *hi << "]\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// merge

struct MergeConfig {
  std::filesystem::path checkpoint;
  std::filesystem::path base;
  std::filesystem::path output;  // default: <out_dir>/merged.bin
};

inline int cmd_merge(const MergeConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  if (cfg.checkpoint.empty() || cfg.base.empty()) throw ConfigError("merge: need --checkpoint and --base");
  const io::Checkpoint ck = io::load_checkpoint(cfg.checkpoint);
  const Matrix W0 = io::read_weights(cfg.base);
  if (shape_of(W0) != base_shape(ck.adapter))
    throw io::IoError("merge: base weights are " + std::to_string(W0.rows()) + "x" +
                      std::to_string(W0.cols()) + " but the checkpoint expects " +
                      std::to_string(base_shape(ck.adapter).rows) + "x" +
                      std::to_string(base_shape(ck.adapter).cols));
  const auto path = cfg.output.empty() ? out_dir / "merged.bin" : cfg.output;
  io::write_weights(path, merge(W0, ck.adapter));
  out << "wrote " << path.string() << " (" << W0.rows() << "x" << W0.cols() << ", "
      << to_string(kind_of(ck.adapter)) << ", lambda=" << lambda_of(ck.adapter) << ")\n";
  return kOk;
}

}  // namespace waveft::cli
