// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/baselines.hpp"

#include <algorithm>

#include "vflmope/error.hpp"

namespace vfl {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Local:
      return "local";
    case BaselineKind::SplitnnConcat:
      return "splitnn-concat";
    case BaselineKind::SplitnnMean:
      return "splitnn-mean";
  }
  return "unknown";
}

namespace {

std::size_t input_width(BaselineKind kind, const BlockLayout& layout) {
  switch (kind) {
    case BaselineKind::Local:
      return layout.dims.back();
    case BaselineKind::SplitnnConcat:
      return layout.total;
    case BaselineKind::SplitnnMean: {
      const auto first = layout.dims.front();
      if (!std::all_of(layout.dims.begin(), layout.dims.end(), [&](auto d) { return d == first; })) {
        throw ConfigError("splitnn-mean needs equal embedding widths for every participant");
      }
      return first;
    }
  }
  throw ConfigError("unknown baseline kind");
}

}  // namespace

BaselineHead make_baseline_head(BaselineKind kind, const BlockLayout& layout, std::size_t classes,
                                std::uint64_t seed) {
  if (classes < 2) throw ValidationError("make_baseline_head: need at least two classes");
  const std::size_t in = input_width(kind, layout);
  return BaselineHead{kind, init_mlp(in, 2 * in, classes, seed), layout, classes};
}

std::vector<double> baseline_input(const BaselineHead& head, std::span<const double> z_agg,
                                   AlignmentSet alignment) {
  const BlockLayout& layout = head.layout;
  if (z_agg.size() != layout.total) throw ShapeError("baseline_input: z_agg width mismatch");
  if (!alignment.contains(layout.active())) {
    throw ContractError("baseline_input: active participant's block is missing");
  }
  switch (head.kind) {
    case BaselineKind::Local: {
      const auto start = z_agg.begin() + static_cast<std::ptrdiff_t>(layout.offsets.back());
      return {start, start + static_cast<std::ptrdiff_t>(layout.dims.back())};
    }
    case BaselineKind::SplitnnConcat:
      return {z_agg.begin(), z_agg.end()};
    case BaselineKind::SplitnnMean: {
      const std::size_t width = input_width(head.kind, layout);
      std::vector<double> mean(width, 0.0);
      std::size_t present = 0;
      for (std::size_t k = 0; k < layout.participants(); ++k) {
        if (!alignment.contains(k)) continue;
        ++present;
        for (std::size_t j = 0; j < width; ++j) mean[j] += z_agg[layout.offsets[k] + j];
      }
      for (double& v : mean) v /= static_cast<double>(present);
      return mean;
    }
  }
  throw ConfigError("unknown baseline kind");
}

std::vector<double> baseline_forward(const BaselineHead& head, std::span<const double> z_agg,
                                     AlignmentSet alignment) {
  const auto x = baseline_input(head, z_agg, alignment);
  return softmax(mlp_forward(head.classifier, x).logits);
}

std::vector<double> baseline_forward(const BaselineHead& head, std::span<const BlockView> blocks) {
  const auto z = pad_and_concat(blocks, head.layout);
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k]) mask |= 1U << k;
  }
  return baseline_forward(head, z, AlignmentSet(mask));
}

TrainResult train_baseline(BaselineHead& head, const HeadDataset& data, const TrainConfig& config) {
  if (!data.empty() && data.features.cols != head.layout.total) {
    throw ShapeError("train_baseline: dataset width does not match head");
  }
  if (!data.empty() && data.classes != head.classes) {
    throw ShapeError("train_baseline: dataset class count does not match head");
  }
  MlpCache cache;
  std::vector<double> logits;
  std::vector<double> dlogits(head.classes);
  return train_modules({&head.classifier}, data, config, [&](std::size_t row, std::vector<Mlp2>& grads) {
    const auto x = baseline_input(head, data.features.row(row), data.alignments[row]);
    mlp_forward_into(head.classifier, x, cache, logits);
    softmax_into(logits, dlogits);
    const std::size_t y = data.labels[row];
    const double loss = -clamped_log(dlogits[y]);
    dlogits[y] -= 1.0;  // softmax cross-entropy gradient
    mlp_accumulate_backward(head.classifier, cache, dlogits, grads[0]);
    return loss;
  });
}

}  // namespace vfl
