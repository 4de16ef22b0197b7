// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "vflmope/dataset.hpp"
#include "vflmope/nn.hpp"

namespace vfl {

struct TrainConfig {
  std::size_t epochs = 50;
  /// 256 for the vision-like setting, 25 for tabular-like runs.
  std::size_t batch = 25;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct TrainResult {
  /// Mean training loss per epoch.
  std::vector<double> epoch_loss;
};

/// Per-sample loss; adds that sample's parameter gradients into `grads`
/// (one entry per trainable module, same order as the module list).
using SampleGradient = std::function<double(std::size_t row, std::vector<Mlp2>& grads)>;

/// Mini-batch Adam shared by every head. Each epoch shuffles the rows with a
/// generator seeded from config.seed, averages gradients over the batch and
/// applies one Adam step per module. Single-threaded and deterministic.
TrainResult train_modules(const std::vector<Mlp2*>& modules, const HeadDataset& data,
                          const TrainConfig& config, const SampleGradient& sample_gradient);

}  // namespace vfl
