// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   acceptance [--mnist-dir DIR] [--only N[,N...]]

#include "waveft/adapter.hpp"
#include "waveft/commands.hpp"
#include "waveft/interp.hpp"
#include "waveft/mnist.hpp"
#include "waveft/rankscan.hpp"
#include "waveft/trainer.hpp"
#include "waveft/wavelet.hpp"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace waveft;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix gaussian(Rng& rng, Index m, Index n) {
  Matrix a(m, n);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

// 1. Reconstruction and adjoint identities, all families, 50 shapes <= 128.
Outcome wavelet_correctness() {
  const auto t0 = Clock::now();
  cli::WaveletCheckConfig cfg;
  cfg.shapes = 50;
  cfg.max_dim = 128;
  double recon = 0, adj = 0;
  for (auto f : kAllFamilies) {
    const auto r = cli::check_wavelet_family(f, cfg);
    recon = std::max(recon, r.max_reconstruction_error);
    adj = std::max(adj, r.max_adjoint_mismatch);
  }
  const double secs = seconds_since(t0);
  return {recon <= 1e-8 && adj <= 1e-8 && secs < 30,
          "max recon " + fmt(recon) + ", max adjoint " + fmt(adj) + ", " + fmt(secs) + " s"};
}

// 2. grad_values against central differences of 0.5 |y - t|^2.
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(2);
  double worst = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const Index m = 2 + static_cast<Index>(rng.below(31)), n = 2 + static_cast<Index>(rng.below(31));
    const Index p = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min<Index>(64, m * n))));
    const Matrix W0 = gaussian(rng, m, n);
    const Vector x = gaussian(rng, n, 1), t = gaussian(rng, m, 1);
    const InitSpec g{InitMode::gaussian, 1.0};
    const auto wspec = make_wavelet(kAllFamilies[static_cast<std::size_t>(inst) % kAllFamilies.size()],
                                    1 + inst % default_level(m, n));
    LowRankAdapter lr = make_low_rank({m, n}, 1 + inst % 3, rng.next_u64(), 1.3);
    lr.B = gaussian(rng, m, lr.rank());
    std::vector<Adapter> kinds{
        make_spectral({m, n}, std::min(p, padded_shape(m, n, wspec).size()), wspec, rng.next_u64(), 1.3, g),
        make_direct({m, n}, p, rng.next_u64(), 1.3, g), lr};
    for (auto& a : kinds) {
      const Vector up = forward(W0, a, x) - t;
      const Vector grad = grad_values(W0, a, x, up);
      const Vector p0 = flatten(a);
      Vector fd(p0.size());
      const double h = 1e-5;
      for (Index i = 0; i < p0.size(); ++i) {
        Vector q = p0;
        q[i] = p0[i] + h;
        assign(a, q);
        const double lp = 0.5 * (forward(W0, a, x) - t).squaredNorm();
        q[i] = p0[i] - h;
        assign(a, q);
        const double lm = 0.5 * (forward(W0, a, x) - t).squaredNorm();
        fd[i] = (lp - lm) / (2 * h);
      }
      assign(a, p0);
      worst = std::max(worst, (grad - fd).norm() / std::max(fd.norm(), 1e-300));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 30, "worst rel err " + fmt(worst) + " over 60 gradients, " + fmt(secs) + " s"};
}

// 3. Low-rank bottleneck: rank(B A^T) <= r and B A^T x = 0 on ker(A^T).
Outcome kernel_suite() {
  Rng rng(3);
  int bad = 0;
  double worst = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index m = 4 + static_cast<Index>(rng.below(60)), n = 4 + static_cast<Index>(rng.below(60));
    const Index r = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min(m, n) - 1)));
    LowRankAdapter a{gaussian(rng, m, r), gaussian(rng, n, r), static_cast<double>(r), 1.0};
    const Matrix dW = delta(a);
    if (numerical_rank(dW) > r) ++bad;
    const Vector z = gaussian(rng, n, 1);
    const Vector x = z - a.A * a.A.colPivHouseholderQr().solve(z);
    const double leak = (dW * x).norm();
    worst = std::max(worst, leak);
    if (leak > 1e-10) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " violations, max |dW x| on ker(A^T) " + fmt(worst)};
}

// 4. Constructive interpolation on planted instances.
Outcome planted_suite() {
  Rng rng(4);
  int bad = 0;
  double worst = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index m = 8 + static_cast<Index>(rng.below(121)), n = 8 + static_cast<Index>(rng.below(121));
    const Index k = 1 + static_cast<Index>(rng.below(8));
    PlantedOptions opt;
    if (inst % 3 == 0) opt.z_rank = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
    const auto pp = planted_problem(m, n, k, rng.next_u64(), opt);
    const auto s = find_pivot_columns(pp.problem);
    if (!s.pivots) {
      ++bad;
      continue;
    }
    const auto chk = check_interpolation(pp.problem, construct_delta(pp.problem, *s.pivots));
    worst = std::max(worst, chk.max_residual);
    if (!chk.support_ok || chk.max_residual > 1e-8 || chk.rank_delta != chk.rank_changed) ++bad;
  }
  return {bad == 0, std::to_string(bad) + "/50 failing, max residual " + fmt(worst)};
}

// 5. Gradient descent reaches zero loss at p = 15680 on 784 x 784, fails at p = 392.
Outcome capacity() {
  const auto t0 = Clock::now();
  const TrainConfig cfg = interpolation_train_config();
  const auto full = capacity_experiment(784, 5, 15680, cfg, 5);
  const auto ctrl = capacity_experiment(784, 5, 784 * 5 / 10, cfg, 5);
  const double rf = full.report.final_loss / full.report.initial_loss;
  const double rc = ctrl.report.final_loss / ctrl.report.initial_loss;
  return {full.success && !ctrl.success,
          "final/initial MSE " + fmt(rf) + " at p=15680, " + fmt(rc) + " at p=392 (control), " +
              fmt(seconds_since(t0)) + " s"};
}

// 6. Union bound value and empirical row occupancy.
Outcome union_bound() {
  const auto b = row_occupancy_bound(15680, 784, 5);
  const int ok = cli::occupancy_successes(15680, 784, 5, 100, 6);
  const bool pass = std::abs(b.union_bound - 1.3e-2) <= 1e-3 && b.union_bound <= 2e-2 && ok >= 98;
  return {pass, "bound " + fmt(b.union_bound) + " (stated <= 0.01), min row occupancy >= 5 in " +
                    std::to_string(ok) + "/100 seeds"};
}

// 7. Rank growth on 1280 x 2048 and the full-rank probability at n = 512.
Outcome rank_scan_check() {
  const auto t0 = Clock::now();
  const Index mn = 1280 + 2048;
  RankScanConfig big{{1280, 2048}, {mn, 2 * mn, 3 * mn}, 20, 7};
  const auto s = rank_scan(big).summary;
  const bool increasing = s[0].mean < s[1].mean && s[1].mean < s[2].mean;
  const bool median_ok = s[2].median >= 0.999 * 1280;

  std::string l1;
  bool prediction_ok = true;
  for (double c : {0.0, 2.0}) {
    const Index p = support_size_for_offset(512, c);
    RankScanConfig sq{{512, 512}, {p}, 200, 70 + static_cast<std::uint64_t>(c)};
    const double freq = rank_scan(sq).summary[0].full_rank_freq;
    const double pred = full_rank_prediction(512, p).probability;
    prediction_ok = prediction_ok && std::abs(freq - pred) <= 0.15;
    l1 += " c=" + fmt(c) + ": " + fmt(freq) + " vs " + fmt(pred) + ";";
  }
  return {increasing && median_ok && prediction_ok,
          "mean rank " + fmt(s[0].mean) + " < " + fmt(s[1].mean) + " < " + fmt(s[2].mean) + ", median@3(m+n) " +
              fmt(s[2].median) + "; full-rank freq" + l1 + " " + fmt(seconds_since(t0)) + " s"};
}

// 8. MNIST ordering at the LoRA r=1 budget, plus the full-budget sanity run.
Outcome mnist_ordering(const std::filesystem::path& dir) {
  const auto t0 = Clock::now();
  mnist::Dataset train, test;
  try {
    train = mnist::load_split(dir, true);
    test = mnist::load_split(dir, false);
  } catch (const std::exception& e) {
    return {false, std::string("cannot load MNIST: ") + e.what()};
  }
  mnist::SweepSpec spec;
  spec.lora_ranks = {1};
  spec.sparse_budgets = {794};
  spec.seeds = {0, 1, 2};
  const auto rows = mnist::run_sweep(train, test, spec);
  const double lora = mnist::mean_accuracy(rows, AdapterKind::lora, 794);
  const double shira = mnist::mean_accuracy(rows, AdapterKind::shira, 794);
  const double wave = mnist::mean_accuracy(rows, AdapterKind::waveft, 794);
  const double full = mnist::run_cell(train, test, AdapterKind::shira, 7840, 0, spec).accuracy;
  return {shira > lora && shira >= wave - 0.005 && full >= 0.90,
          "p=794 mean acc: shira " + fmt(shira) + ", waveft " + fmt(wave) + ", lora r=1 " + fmt(lora) +
              "; shira p=7840 " + fmt(full) + ", " + fmt(seconds_since(t0)) + " s"};
}

// 9. Budget arithmetic for the SDXL attention census.
Outcome budget_arithmetic() {
  const auto census = sdxl_attention_census();
  const auto total = lora_budget(census, 1);
  const auto alloc = allocate_budget(census, total, AllocationPolicy::fixed);
  const bool uniform = std::all_of(alloc.begin(), alloc.end(), [](Index p) { return p == 2592; });
  return {total == 1451520 && alloc.size() == 560 && uniform,
          "lora_budget " + std::to_string(total) + ", " + std::to_string(alloc.size()) + " layers at " +
              std::to_string(alloc.front()) + " each"};
}

// 10. Merged inference equals adapter forward; lambda scaling is exact.
Outcome merge_contract() {
  Rng rng(10);
  double worst = 0;
  bool exact = true;
  for (int inst = 0; inst < 100; ++inst) {
    const Index m = 2 + static_cast<Index>(rng.below(40)), n = 2 + static_cast<Index>(rng.below(40));
    const Matrix W0 = gaussian(rng, m, n);
    const Vector x = gaussian(rng, n, 1);
    const InitSpec g{InitMode::gaussian, 1.0};
    const double lam = std::ldexp(1.0, static_cast<int>(rng.below(7)) - 3);
    Adapter a;
    switch (inst % 3) {
      case 0: {
        const auto w = make_wavelet(kAllFamilies[static_cast<std::size_t>(inst) % 8], 1);
        a = make_spectral({m, n}, std::min<Index>(10, m * n), w, rng.next_u64(), lam, g);
        break;
      }
      case 1: a = make_direct({m, n}, std::min<Index>(10, m * n), rng.next_u64(), lam, g); break;
      default: {
        auto l = make_low_rank({m, n}, 2, rng.next_u64(), lam);
        l.B = gaussian(rng, m, 2);
        a = l;
      }
    }
    const Matrix merged = merge(W0, a);
    worst = std::max(worst, (merged * x - forward(W0, a, x)).cwiseAbs().maxCoeff());
    // Power-of-two lambda: W0 + lambda * dW is reproduced bit for bit.
    exact = exact && merged == Matrix(W0 + lam * delta(a));
    Adapter zero = a;
    std::visit([](auto& z) { z.lambda = 0.0; }, zero);
    exact = exact && std::memcmp(merge(W0, zero).data(), W0.data(), sizeof(double) * static_cast<std::size_t>(W0.size())) == 0;
  }
  return {worst <= 1e-10 && exact, "max |merged x - forward(x)| " + fmt(worst) + ", lambda identities " +
                                       (exact ? "exact" : "NOT exact")};
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path mnist_dir;
  if (const char* env = std::getenv("WAVEFT_MNIST_DIR")) mnist_dir = env;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--mnist-dir") && i + 1 < argc) {
      mnist_dir = argv[++i];
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--mnist-dir DIR] [--only N[,N...]]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"wavelet correctness", wavelet_correctness},
      {"gradient correctness", gradient_correctness},
      {"low-rank bottleneck", kernel_suite},
      {"constructive sparse interpolation", planted_suite},
      {"sparse capacity run", capacity},
      {"row-occupancy union bound", union_bound},
      {"random sparse rank scan", rank_scan_check},
      {"MNIST ordering", [&] { return mnist_ordering(mnist_dir); }},
      {"budget arithmetic", budget_arithmetic},
      {"merge contract", merge_contract},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
