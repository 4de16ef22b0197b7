// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/dataset.hpp"

#include <algorithm>
#include <string>

#include "vflmope/error.hpp"

namespace vfl {

void HeadDataset::validate() const {
  const std::size_t n = labels.size();
  if (features.rows != n || alignments.size() != n || ids.size() != n) {
    throw ShapeError("HeadDataset: column lengths disagree");
  }
  if (classes < 2) throw ValidationError("HeadDataset: need at least two classes");
  for (auto y : labels) {
    if (y >= classes) throw ValidationError("HeadDataset: label " + std::to_string(y) + " out of range");
  }
}

HeadDataset HeadDataset::subset(const std::vector<std::size_t>& rows) const {
  HeadDataset out;
  out.classes = classes;
  out.features = Matrix(rows.size(), features.cols);
  out.labels.reserve(rows.size());
  out.alignments.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = features.row(rows[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[rows[r]]);
    out.alignments.push_back(alignments[rows[r]]);
    out.ids.push_back(ids[rows[r]]);
  }
  return out;
}

}  // namespace vfl
