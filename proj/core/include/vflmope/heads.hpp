// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "vflmope/baselines.hpp"
#include "vflmope/mope.hpp"

namespace vfl {

enum class HeadKind { Mope, Local, SplitnnConcat, SplitnnMean };

std::string_view to_string(HeadKind kind);
/// Accepts "mope", "local", "splitnn-concat", "splitnn-mean".
HeadKind parse_head_kind(std::string_view name);

using Head = std::variant<MopeHead, BaselineHead>;

Head make_head(HeadKind kind, const BlockLayout& layout, std::size_t classes, std::uint64_t seed,
               const MopeOptions& mope_options = {});

HeadKind kind_of(const Head& head);

TrainResult train_head(Head& head, const HeadDataset& data, const TrainConfig& config);

std::vector<double> predict_proba(const Head& head, std::span<const double> z_agg,
                                  AlignmentSet alignment);

}  // namespace vfl
