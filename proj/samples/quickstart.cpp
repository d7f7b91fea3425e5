// SPDX-License-Identifier: Apache-2.0
// Recover a sparse wavelet-domain update of a frozen layer from input/output
// pairs, merge it into the base weights and save a checkpoint.

#include "waveft/adapter.hpp"
#include "waveft/io.hpp"
#include "waveft/trainer.hpp"

#include <iostream>

int main() {
  using namespace waveft;
  const Shape base{32, 48};
  const auto wavelet = make_wavelet(WaveletFamily::db2, 2);
  Rng rng(7);
  Matrix W0(base.rows, base.cols);
  for (Index i = 0; i < W0.size(); ++i) W0.data()[i] = rng.normal();

  // Ground truth: 96 random coefficients on the same support the adapter trains.
  const Adapter truth = make_spectral(base, 96, wavelet, /*seed=*/11, 1.0, {InitMode::gaussian, 0.5});
  LinearDataset data;
  data.inputs.resize(512, base.cols);
  for (Index i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = rng.normal();
  data.targets = data.inputs * merge(W0, truth).transpose();

  Adapter adapter = make_spectral(base, 96, wavelet, /*seed=*/11);  // zero init, so W = W0
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.scheduler = {0.5, 20};
  cfg.loss = LossKind::mse;
  const TrainReport rep = train_linear(W0, adapter, data, cfg);
  std::cout << "mse " << rep.initial_loss << " -> " << rep.final_loss << " with " << num_params(adapter)
            << " trainable coefficients\n";
  std::cout << "max |dW - dW_true| = " << (delta(adapter) - delta(truth)).cwiseAbs().maxCoeff() << '\n';

  const Matrix merged = merge(W0, adapter);
  const Vector x = data.inputs.row(0).transpose();
  std::cout << "merged vs adapter forward: " << (merged * x - forward(W0, adapter, x)).cwiseAbs().maxCoeff()
            << '\n';

  io::save_checkpoint("quickstart_adapter.json", {adapter, 11});
  io::write_weights("quickstart_base.bin", W0);
  std::cout << "wrote quickstart_adapter.json and quickstart_base.bin\n";
}
