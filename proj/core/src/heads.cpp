// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/heads.hpp"

#include <string>

#include "vflmope/error.hpp"

namespace vfl {

std::string_view to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::Mope:
      return "mope";
    case HeadKind::Local:
      return "local";
    case HeadKind::SplitnnConcat:
      return "splitnn-concat";
    case HeadKind::SplitnnMean:
      return "splitnn-mean";
  }
  return "unknown";
}

HeadKind parse_head_kind(std::string_view name) {
  for (auto kind : {HeadKind::Mope, HeadKind::Local, HeadKind::SplitnnConcat, HeadKind::SplitnnMean}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown head kind '" + std::string(name) + "'");
}

namespace {

BaselineKind baseline_kind(HeadKind kind) {
  switch (kind) {
    case HeadKind::Local:
      return BaselineKind::Local;
    case HeadKind::SplitnnConcat:
      return BaselineKind::SplitnnConcat;
    case HeadKind::SplitnnMean:
      return BaselineKind::SplitnnMean;
    case HeadKind::Mope:
      break;
  }
  throw ConfigError("not a baseline head");
}

}  // namespace

Head make_head(HeadKind kind, const BlockLayout& layout, std::size_t classes, std::uint64_t seed,
               const MopeOptions& mope_options) {
  if (kind == HeadKind::Mope) {
    MopeOptions options = mope_options;
    options.seed = seed;
    return make_mope_head(layout, classes, options);
  }
  return make_baseline_head(baseline_kind(kind), layout, classes, seed);
}

HeadKind kind_of(const Head& head) {
  if (std::holds_alternative<MopeHead>(head)) return HeadKind::Mope;
  switch (std::get<BaselineHead>(head).kind) {
    case BaselineKind::Local:
      return HeadKind::Local;
    case BaselineKind::SplitnnConcat:
      return HeadKind::SplitnnConcat;
    case BaselineKind::SplitnnMean:
      return HeadKind::SplitnnMean;
  }
  throw ConfigError("unknown baseline kind");
}

TrainResult train_head(Head& head, const HeadDataset& data, const TrainConfig& config) {
  if (auto* mope = std::get_if<MopeHead>(&head)) return train_mope(*mope, data, config);
  return train_baseline(std::get<BaselineHead>(head), data, config);
}

std::vector<double> predict_proba(const Head& head, std::span<const double> z_agg,
                                  AlignmentSet alignment) {
  if (const auto* mope = std::get_if<MopeHead>(&head)) return mope_forward(*mope, z_agg).probs;
  return baseline_forward(std::get<BaselineHead>(head), z_agg, alignment);
}

}  // namespace vfl
