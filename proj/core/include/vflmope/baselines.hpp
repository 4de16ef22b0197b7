// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference heads trained with the same single-round harness as MoPE.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vflmope/dataset.hpp"
#include "vflmope/mope.hpp"
#include "vflmope/nn.hpp"
#include "vflmope/training.hpp"

namespace vfl {

enum class BaselineKind {
  Local,          // active block only
  SplitnnConcat,  // zero-padded concatenation
  SplitnnMean,    // elementwise mean of the present blocks
};

std::string_view to_string(BaselineKind kind);

struct BaselineHead {
  BaselineKind kind = BaselineKind::Local;
  Mlp2 classifier;
  BlockLayout layout;
  std::size_t classes = 0;

  bool operator==(const BaselineHead&) const = default;
};

/// Classifier width d -> 2d -> classes, where d is the active block width
/// (local), N (concat) or the common block width (mean). Throws ConfigError
/// for the mean head when block widths differ.
BaselineHead make_baseline_head(BaselineKind kind, const BlockLayout& layout, std::size_t classes,
                                std::uint64_t seed);

/// The classifier input for one sample given its padded z_agg and alignment.
std::vector<double> baseline_input(const BaselineHead& head, std::span<const double> z_agg,
                                   AlignmentSet alignment);

/// Class distribution from per-participant blocks (active block required).
std::vector<double> baseline_forward(const BaselineHead& head, std::span<const BlockView> blocks);

/// Class distribution from a padded z_agg and the sample's alignment.
std::vector<double> baseline_forward(const BaselineHead& head, std::span<const double> z_agg,
                                     AlignmentSet alignment);

TrainResult train_baseline(BaselineHead& head, const HeadDataset& data, const TrainConfig& config);

}  // namespace vfl
