// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Exit codes: 0 ok, 1 invariant failure, 2 usage/IO.

#include "waveft/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace waveft;
using namespace waveft::cli;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file (unknown keys are rejected)");
  sub->add_option("--seed", c.seed, "Override the config seed");
  sub->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
}

io::Json load(const Common& c) { return c.config.empty() ? io::Json::object() : read_config_file(c.config); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse spectral adapters: wavelet checks, rank scans, interpolation and MNIST runs"};
  app.require_subcommand(1);

  Common common;
  auto* wc = app.add_subcommand("wavelet-check", "Reconstruction/adjoint checks over wavelet families");
  std::vector<std::string> families;
  wc->add_option("--families", families, "Families to check (default: all)");
  add_common(wc, common);

  auto* rs = app.add_subcommand("rank-scan", "Rank of random sparse matrices versus support size");
  std::string profile;
  rs->add_option("--profile", profile, "fast (256x256) or full (1280x2048)");
  add_common(rs, common);

  auto* ip = app.add_subcommand("interp", "Sparse interpolation: constructive or gradient mode");
  std::string mode;
  ip->add_option("--mode", mode, "constructive or gradient");
  add_common(ip, common);

  auto* bd = app.add_subcommand("bound", "Row-occupancy union bound");
  std::optional<std::int64_t> bm, bn, bk;
  bd->add_option("--total-params", bm);
  bd->add_option("--rows", bn);
  bd->add_option("-k", bk);
  add_common(bd, common);

  auto* mn = app.add_subcommand("mnist", "Single-layer MNIST budget sweep");
  std::string data_dir;
  mn->add_option("--data-dir", data_dir, "Directory with the MNIST IDX files (or WAVEFT_MNIST_DIR)");
  add_common(mn, common);

  auto* bu = app.add_subcommand("budget", "LoRA-equivalent budget and per-layer allocation");
  std::optional<Index> rank;
  bu->add_option("--rank", rank);
  add_common(bu, common);

  auto* mg = app.add_subcommand("merge", "Merge a checkpoint into a base weight file");
  MergeConfig merge_cfg;
  mg->add_option("--checkpoint", merge_cfg.checkpoint)->required();
  mg->add_option("--base", merge_cfg.base)->required();
  mg->add_option("--output", merge_cfg.output, "Output weight file (default: <out-dir>/merged.bin)");
  add_common(mg, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  const std::filesystem::path out_dir = common.out_dir;
  try {
    if (wc->parsed()) {
      auto cfg = WaveletCheckConfig::from_json(load(common));
      if (!families.empty()) cfg.families = cli::detail::parse_families(families);
      if (common.seed) cfg.seed = *common.seed;
      return cmd_wavelet_check(cfg, out_dir, std::cout);
    }
    if (rs->parsed()) {
      io::Json j = load(common);
      if (!profile.empty()) j["profile"] = profile;
      auto cfg = RankScanCommandConfig::from_json(j);
      if (common.seed) cfg.scan.master_seed = *common.seed;
      return cmd_rank_scan(cfg, out_dir, std::cout);
    }
    if (ip->parsed()) {
      io::Json j = load(common);
      if (!mode.empty()) j["mode"] = mode;
      auto cfg = InterpConfig::from_json(j);
      if (common.seed) cfg.seed = *common.seed;
      return cmd_interp(cfg, out_dir, std::cout);
    }
    if (bd->parsed()) {
      auto cfg = BoundConfig::from_json(load(common));
      if (bm) cfg.total_params = *bm;
      if (bn) cfg.n_rows = *bn;
      if (bk) cfg.k = *bk;
      if (common.seed) cfg.seed = *common.seed;
      return cmd_bound(cfg, out_dir, std::cout);
    }
    if (mn->parsed()) {
      auto cfg = MnistConfig::from_json(load(common));
      if (!data_dir.empty()) cfg.data_dir = data_dir;
      else if (cfg.data_dir.empty())
        if (const char* env = std::getenv("WAVEFT_MNIST_DIR")) cfg.data_dir = env;
      if (common.seed) cfg.sweep.seeds = {*common.seed};
      return cmd_mnist(cfg, out_dir, std::cout);
    }
    if (bu->parsed()) {
      auto cfg = BudgetConfig::from_json(load(common), std::filesystem::path(common.config).parent_path());
      if (rank) cfg.rank = *rank;
      return cmd_budget(cfg, out_dir, std::cout);
    }
    if (mg->parsed()) return cmd_merge(merge_cfg, out_dir, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const io::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariantFailure;
  }
  return kUsageError;
}
