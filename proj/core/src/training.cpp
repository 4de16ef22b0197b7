// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/training.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "vflmope/error.hpp"
#include "vflmope/rng.hpp"

namespace vfl {

TrainResult train_modules(const std::vector<Mlp2*>& modules, const HeadDataset& data,
                          const TrainConfig& config, const SampleGradient& sample_gradient) {
  if (data.empty()) throw ValidationError("training dataset is empty");
  if (config.batch == 0) throw ValidationError("batch size must be positive");
  data.validate();

  std::vector<AdamState> optimizers;
  std::vector<Mlp2> grads;
  optimizers.reserve(modules.size());
  for (const Mlp2* m : modules) {
    optimizers.push_back(AdamState::for_params(*m, config.adam));
    grads.push_back(m->zeros_like());
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(config.seed, 0x7261696e));

  TrainResult result;
  result.epoch_loss.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t stop = std::min(order.size(), start + config.batch);
      for (auto& g : grads) {
        for (auto t : g.tensors()) std::fill(t.begin(), t.end(), 0.0);
      }
      for (std::size_t b = start; b < stop; ++b) epoch_loss += sample_gradient(order[b], grads);

      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) {
        for (auto t : g.tensors()) {
          for (double& v : t) v *= scale;
          if (!all_finite(t)) {
            throw NonFiniteGradientError("non-finite gradient in epoch " + std::to_string(epoch));
          }
        }
      }
      for (std::size_t m = 0; m < modules.size(); ++m) adam_step(*modules[m], grads[m], optimizers[m]);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

}  // namespace vfl
