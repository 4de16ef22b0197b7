// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// Mixture of Predefined Experts head. One expert per interesting
// combination of participants; every expert sees only the embedding blocks
// of its own subset. A sigmoid router weighs all experts densely and the
// weighted sum of expert class distributions is divided by the total gate
// mass, so the output is again a distribution.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vflmope/alignment.hpp"
#include "vflmope/dataset.hpp"
#include "vflmope/nn.hpp"
#include "vflmope/training.hpp"

namespace vfl {

/// Per-participant embedding widths and their offsets inside z_agg.
struct BlockLayout {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;

  /// Throws ShapeError when `dims` is empty or contains a zero.
  static BlockLayout from_dims(std::vector<std::size_t> dims);

  [[nodiscard]] std::size_t participants() const { return dims.size(); }
  [[nodiscard]] std::size_t active() const { return dims.size() - 1; }
  [[nodiscard]] std::size_t subset_dim(AlignmentSet subset) const;
  /// Column indices of z_agg that belong to `subset`, in participant order.
  [[nodiscard]] std::vector<std::size_t> subset_columns(AlignmentSet subset) const;

  bool operator==(const BlockLayout&) const = default;
};

/// One participant's embedding for one sample; nullopt when the block is absent.
using BlockView = std::optional<std::span<const double>>;

/// Concatenates the blocks in participant order, writing zeros for absent
/// ones. The active block must be present.
std::vector<double> pad_and_concat(std::span<const BlockView> blocks, const BlockLayout& layout);

/// The blocks of `subset`, concatenated in participant order.
std::vector<double> decompose(std::span<const double> z_agg, AlignmentSet subset,
                              const BlockLayout& layout);

struct MopeOptions {
  std::size_t router_hidden = 128;
  /// Floor on the gate-mass denominator; guards underflow only.
  double gate_epsilon = 1e-12;
  std::uint64_t seed = 0;
};

struct MopeHead {
  BlockLayout layout;
  std::size_t classes = 0;
  /// Expert i owns subsets[i]; ascending bitmask order.
  std::vector<AlignmentSet> subsets;
  Mlp2 router;
  std::vector<Mlp2> experts;
  /// z_agg columns feeding expert i.
  std::vector<std::vector<std::size_t>> expert_columns;
  double gate_epsilon = 1e-12;

  [[nodiscard]] std::size_t expert_count() const { return experts.size(); }
  void validate() const;
  bool operator==(const MopeHead&) const = default;
};

/// Router N -> router_hidden -> |experts|; expert i is
/// d_i -> 2 d_i -> classes, where d_i is the width of its subset.
MopeHead make_mope_head(const BlockLayout& layout, std::size_t classes, const MopeOptions& options = {});

struct MopeOutput {
  std::vector<double> probs;
  std::vector<double> gates;
  std::vector<double> router_logits;
  std::vector<std::vector<double>> expert_probs;
};

/// Instrumentation for tests and profiling.
struct MopeHooks {
  std::function<void(std::size_t expert)> on_expert_eval;
};

MopeOutput mope_forward(const MopeHead& head, std::span<const double> z_agg,
                        const MopeHooks* hooks = nullptr);

struct MopeGrads {
  Mlp2 router;
  std::vector<Mlp2> experts;

  static MopeGrads zeros_like(const MopeHead& head);
};

struct MopeLoss {
  double loss = 0.0;
  MopeGrads grads;
};

/// Negative log-likelihood of the normalized mixture (probability floored at
/// 1e-12) and its exact gradient. No auxiliary balancing term.
MopeLoss mope_loss_and_backward(const MopeHead& head, std::span<const double> z_agg,
                                std::size_t label);

/// Same as mope_loss_and_backward but accumulates into existing gradients.
double mope_accumulate_gradient(const MopeHead& head, std::span<const double> z_agg,
                                std::size_t label, MopeGrads& grads);

TrainResult train_mope(MopeHead& head, const HeadDataset& data, const TrainConfig& config);

enum class ContributionMode {
  /// sum of gates of experts containing k, over the sum of all gates
  Normalized,
  /// Each term is w_e / w_e, so the result counts experts containing k.
  Literal,
};

struct ContributionOptions {
  ContributionMode mode = ContributionMode::Normalized;
  /// Drop the active-only expert from both sums.
  bool passive_only = false;
};

/// Contribution of participant k from one gate vector in canonical expert
/// order. The federation size is implied by gates.size() == 2^(K-1).
double contribution(std::span<const double> gates, ParticipantId k,
                    const ContributionOptions& options = {});

/// contribution() for every participant.
std::vector<double> contributions(std::span<const double> gates,
                                  const ContributionOptions& options = {});

struct SampleReport {
  std::uint64_t sample_id = 0;
  std::vector<double> gates;
  std::vector<double> contributions;
  std::size_t predicted = 0;
  std::optional<std::size_t> label;
  /// Participants whose block was zero-padded for this sample.
  std::vector<std::size_t> padded;
};

SampleReport per_sample_report(const MopeHead& head, std::span<const double> z_agg,
                               AlignmentSet alignment, std::uint64_t sample_id,
                               std::optional<std::size_t> label = std::nullopt);

/// One JSON object, keys in the order sample_id, gates, contributions,
/// predicted, label, padded. No trailing newline.
std::string report_to_json(const SampleReport& report);

/// Inverse of report_to_json. Throws FormatError.
SampleReport report_from_json(const std::string& line, std::uint64_t line_number = 0);

}  // namespace vfl
