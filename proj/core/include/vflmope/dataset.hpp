// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vflmope/alignment.hpp"
#include "vflmope/nn.hpp"

namespace vfl {

/// Samples as the active participant sees them after the single round:
/// zero-padded concatenated embeddings, labels, and each row's alignment.
struct HeadDataset {
  Matrix features;  // n x N
  std::vector<std::size_t> labels;
  std::vector<AlignmentSet> alignments;
  std::vector<std::uint64_t> ids;
  std::size_t classes = 0;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] bool empty() const { return labels.empty(); }

  /// Throws ValidationError/ShapeError if the columns disagree in length or a
  /// label is out of range.
  void validate() const;

  /// Rows selected by `rows`, in that order.
  [[nodiscard]] HeadDataset subset(const std::vector<std::size_t>& rows) const;
};

}  // namespace vfl
