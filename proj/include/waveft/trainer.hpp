// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "waveft/adapter.hpp"
#include "waveft/rng.hpp"
#include "waveft/types.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace waveft {

/// Raised when training produces a non-finite loss or gradient.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

enum class LossKind { mse, cross_entropy };

inline std::string_view to_string(LossKind k) noexcept {
  return k == LossKind::mse ? "mse" : "cross_entropy";
}

inline LossKind parse_loss(std::string_view s) {
  if (s == "mse") return LossKind::mse;
  if (s == "cross_entropy") return LossKind::cross_entropy;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

struct StepSchedule {
  double gamma = 1.0;
  int step_epochs = 1;
};

struct TrainConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  StepSchedule scheduler;
  int epochs = 1;
  int batch_size = 64;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw std::invalid_argument("train config: betas must lie in (0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("train config: eps must be > 0");
    if (!(scheduler.gamma > 0.0 && scheduler.gamma <= 1.0))
      throw std::invalid_argument("train config: gamma must lie in (0, 1]");
    if (scheduler.step_epochs < 1)
      throw std::invalid_argument("train config: step_epochs must be >= 1");
    if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  }
};

/// Single-layer training protocol for MNIST classification.
inline TrainConfig mnist_train_config() {
  TrainConfig c;
  c.lr = 0.01;
  c.scheduler = {0.5, 5};
  c.epochs = 50;
  c.batch_size = 64;
  c.loss = LossKind::cross_entropy;
  return c;
}

/// Full-batch protocol for the sparse interpolation capacity experiment.
inline TrainConfig interpolation_train_config() {
  TrainConfig c;
  c.lr = 0.01;
  c.scheduler = {0.75, 500};
  c.epochs = 5000;
  c.batch_size = 1 << 30;
  c.loss = LossKind::mse;
  return c;
}

struct TrainReport {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // mean training loss during each epoch
  double final_loss = 0.0;           // full-dataset loss after the last update
  std::optional<double> accuracy;
  double wallclock_seconds = 0.0;
  std::uint64_t seed = 0;
  TrainConfig config;
};

// ---------------------------------------------------------------------------
// Schedule and optimizer

/// lr0 * gamma^floor(epoch / step_epochs).
inline double step_lr(double lr0, double gamma, int step_epochs, int epoch) {
  if (epoch < 0) throw std::invalid_argument("step_lr: negative epoch");
  if (step_epochs < 1) throw std::invalid_argument("step_lr: step_epochs must be >= 1");
  return lr0 * std::pow(gamma, epoch / step_epochs);
}

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;

  explicit AdamState(Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

/// One bias-corrected Adam update of `params` in place.
/// Throws std::domain_error on non-finite gradients.
inline void adam_step(AdamState& state, Vector& params, const Vector& grads, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw ShapeError("adam_step: state/parameter/gradient sizes differ");
  if (!grads.allFinite()) throw std::domain_error("adam_step: non-finite gradient");
  ++state.step;
  state.m = beta1 * state.m + (1.0 - beta1) * grads;
  state.v = beta2 * state.v + (1.0 - beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const double step_size = lr / bc1;
  params.array() -= step_size * state.m.array() / ((state.v.array() / bc2).sqrt() + eps);
}

// ---------------------------------------------------------------------------
// Losses

struct LossGrad {
  double loss = 0.0;
  Matrix grad;  // same shape as the prediction
};

/// Mean squared error over all elements; grad = 2 (pred - target) / N.
inline LossGrad mse(const Matrix& pred, const Matrix& target) {
  require_shape(target, shape_of(pred), "mse target");
  const Matrix diff = pred - target;
  const auto N = static_cast<double>(diff.size());
  if (diff.size() == 0) return {0.0, diff};
  return {diff.squaredNorm() / N, (2.0 / N) * diff};
}

namespace detail {

inline double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  const double mx = z.maxCoeff();
  return mx + std::log((z.array() - mx).exp().sum());
}

}  // namespace detail

/// -log softmax(logits)[label]; grad = softmax(logits) - onehot(label).
inline std::pair<double, Vector> cross_entropy(const Vector& logits, int label) {
  if (label < 0 || label >= logits.size())
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " out of range");
  const double lse = detail::log_sum_exp(logits.transpose());
  Vector grad = (logits.array() - lse).exp();
  grad[label] -= 1.0;
  return {lse - logits[label], grad};
}

/// Batch mean cross-entropy. Logits are B x classes, one row per sample.
inline LossGrad cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != logits.rows())
    throw ShapeError("cross_entropy: label count differs from batch size");
  LossGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  if (logits.rows() == 0) return out;
  const double inv_b = 1.0 / static_cast<double>(logits.rows());
  for (Index b = 0; b < logits.rows(); ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= logits.cols())
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " out of range");
    const double lse = detail::log_sum_exp(logits.row(b));
    out.loss += lse - logits(b, y);
    out.grad.row(b) = ((logits.row(b).array() - lse).exp() * inv_b).matrix();
    out.grad(b, y) -= inv_b;
  }
  out.loss *= inv_b;
  return out;
}

// ---------------------------------------------------------------------------
// Training a single adapted linear layer

/// Samples are rows of `inputs` (N x n). For mse, `targets` is N x m; for
/// cross-entropy, `labels` holds N class indices in [0, m).
struct LinearDataset {
  Matrix inputs;
  Matrix targets;
  std::vector<int> labels;

  Index size() const noexcept { return inputs.rows(); }
};

namespace detail {

inline LossGrad batch_loss(LossKind kind, const Matrix& out, const LinearDataset& data,
                           std::span<const Index> rows, const Matrix& targets_b) {
  if (kind == LossKind::mse) return mse(out, targets_b);
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    labels[i] = data.labels[static_cast<std::size_t>(rows[i])];
  return cross_entropy(out, labels);
}

/// Loss over the full dataset, evaluated in chunks.
inline double dataset_loss(const Adapter& a, const Matrix& base_out, const LinearDataset& data,
                           LossKind kind) {
  const Index N = data.size();
  if (N == 0) return 0.0;
  constexpr Index chunk = 4096;
  double total = 0.0;
  for (Index start = 0; start < N; start += chunk) {
    const Index len = std::min(chunk, N - start);
    const Matrix out = base_out.middleRows(start, len) +
                       adapter_forward(a, data.inputs.middleRows(start, len));
    if (kind == LossKind::mse) {
      total += (out - data.targets.middleRows(start, len)).squaredNorm();
    } else {
      for (Index b = 0; b < len; ++b)
        total += log_sum_exp(out.row(b)) - out(b, data.labels[static_cast<std::size_t>(start + b)]);
    }
  }
  const double denom =
      kind == LossKind::mse ? static_cast<double>(data.targets.size()) : static_cast<double>(N);
  return total / denom;
}

inline void validate_dataset(const Matrix& W0, const LinearDataset& data, LossKind kind) {
  if (data.inputs.cols() != W0.cols()) throw ShapeError("dataset input width differs from W0");
  if (kind == LossKind::mse) {
    if (data.targets.rows() != data.size() || data.targets.cols() != W0.rows())
      throw ShapeError("dataset targets must be N x m");
  } else {
    if (static_cast<Index>(data.labels.size()) != data.size())
      throw ShapeError("dataset label count differs from sample count");
    for (int y : data.labels)
      if (y < 0 || y >= W0.rows()) throw std::out_of_range("dataset label out of range");
  }
}

}  // namespace detail

/// Train the adapter's parameters against a frozen W0 with Adam and a step
/// schedule. Deterministic in config.seed: the epoch shuffle order is drawn
/// from derive_seed(seed, {epoch}).
inline TrainReport train_linear(const Matrix& W0, Adapter& adapter, const LinearDataset& data,
                                const TrainConfig& config) {
  config.validate();
  require_shape(W0, base_shape(adapter), "train_linear base weights");
  detail::validate_dataset(W0, data, config.loss);
  const auto t0 = std::chrono::steady_clock::now();

  // W0 is frozen, so the base activations never change.
  const Matrix base_out = data.inputs * W0.transpose();

  TrainReport report;
  report.seed = config.seed;
  report.config = config;
  report.initial_loss = detail::dataset_loss(adapter, base_out, data, config.loss);
  if (!std::isfinite(report.initial_loss)) throw TrainingError("non-finite initial loss", 0);

  const Index N = data.size();
  const Index batch = std::min<Index>(config.batch_size, std::max<Index>(N, 1));
  std::vector<Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), Index{0});

  Vector params = flatten(adapter);
  AdamState adam(params.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = step_lr(config.lr, config.scheduler.gamma, config.scheduler.step_epochs, epoch);
    if (batch < N) {
      Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(epoch)}));
      for (Index i = N - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[rng.below(static_cast<std::uint64_t>(i + 1))]);
    }
    double epoch_loss = 0.0;
    for (Index start = 0; start < N; start += batch) {
      const Index len = std::min(batch, N - start);
      const std::span<const Index> rows(order.data() + start, static_cast<std::size_t>(len));
      Matrix Xb, Bb, Tb;
      if (len == N && batch >= N) {
        Xb = data.inputs;
        Bb = base_out;
        if (config.loss == LossKind::mse) Tb = data.targets;
      } else {
        Xb = data.inputs(rows, Eigen::all);
        Bb = base_out(rows, Eigen::all);
        if (config.loss == LossKind::mse) Tb = data.targets(rows, Eigen::all);
      }
      const Matrix out = Bb + adapter_forward(adapter, Xb);
      const LossGrad lg = detail::batch_loss(config.loss, out, data, rows, Tb);
      if (!std::isfinite(lg.loss)) throw TrainingError("non-finite training loss", epoch);
      epoch_loss += lg.loss * static_cast<double>(len);
      const Vector g = grad_batch(adapter, Xb, lg.grad);
      try {
        adam_step(adam, params, g, lr, config.beta1, config.beta2, config.eps);
      } catch (const std::domain_error& e) {
        throw TrainingError(e.what(), epoch);
      }
      assign(adapter, params);
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(std::max<Index>(N, 1)));
  }

  report.final_loss = config.epochs == 0
                          ? report.initial_loss
                          : detail::dataset_loss(adapter, base_out, data, config.loss);
  if (!std::isfinite(report.final_loss))
    throw TrainingError("non-finite final loss", config.epochs);
  report.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

/// Fraction of rows whose argmax logit (first index on ties) equals the label.
inline double classification_accuracy(const Matrix& W0, const Adapter& adapter,
                                      const Matrix& inputs, std::span<const int> labels) {
  require_shape(W0, base_shape(adapter), "accuracy base weights");
  if (static_cast<Index>(labels.size()) != inputs.rows())
    throw ShapeError("accuracy: label count differs from sample count");
  if (inputs.rows() == 0) return 0.0;
  const Matrix W = merge(W0, adapter);
  Index correct = 0;
  constexpr Index chunk = 4096;
  for (Index start = 0; start < inputs.rows(); start += chunk) {
    const Index len = std::min(chunk, inputs.rows() - start);
    const Matrix logits = inputs.middleRows(start, len) * W.transpose();
    for (Index b = 0; b < len; ++b) {
      Index best = 0;
      for (Index c = 1; c < logits.cols(); ++c)
        if (logits(b, c) > logits(b, best)) best = c;
      correct += (best == labels[static_cast<std::size_t>(start + b)]);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(inputs.rows());
}

}  // namespace waveft
