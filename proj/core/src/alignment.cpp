// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/alignment.hpp"

#include <bit>
#include <unordered_map>
#include <unordered_set>

#include "vflmope/error.hpp"
#include "vflmope/rng.hpp"

namespace vfl {

AlignmentSet AlignmentSet::of(std::initializer_list<std::size_t> members) {
  std::uint32_t mask = 0;
  for (auto k : members) {
    if (k >= kMaxParticipants) throw ValidationError("AlignmentSet: participant index too large");
    mask |= 1U << k;
  }
  return AlignmentSet(mask);
}

std::size_t AlignmentSet::size() const { return static_cast<std::size_t>(std::popcount(mask_)); }

std::vector<std::size_t> AlignmentSet::members() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < 32; ++k) {
    if (contains(k)) out.push_back(k);
  }
  return out;
}

std::string AlignmentSet::to_string() const {
  std::string s = "{";
  bool first = true;
  for (auto k : members()) {
    if (!first) s += ',';
    s += std::to_string(k);
    first = false;
  }
  return s + "}";
}

std::vector<AlignmentSet> interesting_combinations(std::size_t participant_count) {
  if (participant_count == 0) throw EmptyFederationError("federation has no participants");
  if (participant_count > kMaxParticipants) {
    throw ValidationError("federation too large: " + std::to_string(participant_count) +
                          " participants");
  }
  const std::uint32_t active_bit = 1U << (participant_count - 1);
  const std::uint32_t passive_count = 1U << (participant_count - 1);
  std::vector<AlignmentSet> out;
  out.reserve(passive_count);
  // Passive subsets enumerated in ascending order keep the full masks ascending.
  for (std::uint32_t passive = 0; passive < passive_count; ++passive) {
    out.emplace_back(passive | active_bit);
  }
  return out;
}

std::size_t combination_index(AlignmentSet set, std::size_t participant_count) {
  if (participant_count == 0 || participant_count > kMaxParticipants) {
    throw ContractError("combination_index: bad participant count");
  }
  const std::uint32_t active_bit = 1U << (participant_count - 1);
  if ((set.mask() & active_bit) == 0 || set.mask() >= (active_bit << 1)) {
    throw ContractError("subset " + set.to_string() + " is not an interesting combination");
  }
  return set.mask() & (active_bit - 1);
}

PresenceMatrix::PresenceMatrix(std::size_t samples, std::size_t participants, bool fill)
    : samples_(samples), participants_(participants), cells_(samples * participants, fill ? 1 : 0) {}

AlignmentSet PresenceMatrix::alignment(std::size_t i) const { return alignment_of(row(i)); }

double PresenceMatrix::column_fraction(std::size_t k) const {
  if (samples_ == 0) return 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < samples_; ++i) count += at(i, k) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(samples_);
}

PresenceMatrix PresenceMatrix::intersect(const PresenceMatrix& other) const {
  if (other.samples_ != samples_ || other.participants_ != participants_) {
    throw ShapeError("PresenceMatrix::intersect: shape mismatch");
  }
  PresenceMatrix out = *this;
  for (std::size_t c = 0; c < cells_.size(); ++c) out.cells_[c] &= other.cells_[c];
  return out;
}

AlignedIds psi_align(std::span<const std::vector<std::uint64_t>> id_lists) {
  if (id_lists.empty()) throw EmptyFederationError("psi_align: no participants");
  const std::size_t participants = id_lists.size();
  const auto& active = id_lists.back();
  if (active.empty()) throw ValidationError("psi_align: active participant has no IDs");

  AlignedIds out;
  out.ids = active;
  out.presence = PresenceMatrix(active.size(), participants, false);
  out.source_row.assign(participants, std::vector<std::int64_t>(active.size(), -1));

  for (std::size_t k = 0; k < participants; ++k) {
    std::unordered_map<std::uint64_t, std::int64_t> position;
    position.reserve(id_lists[k].size());
    for (std::size_t r = 0; r < id_lists[k].size(); ++r) {
      if (!position.emplace(id_lists[k][r], static_cast<std::int64_t>(r)).second) {
        throw ValidationError("psi_align: duplicate ID " + std::to_string(id_lists[k][r]) +
                              " in participant " + std::to_string(k));
      }
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
      auto it = position.find(active[i]);
      if (it == position.end()) continue;
      out.presence.set(i, k, true);
      out.source_row[k][i] = it->second;
    }
  }
  return out;
}

PresenceMatrix mcar_mask(std::size_t samples, std::size_t participants, double p_miss,
                         std::uint64_t seed) {
  if (!(p_miss >= 0.0 && p_miss <= 1.0)) {
    throw ValidationError("mcar_mask: p_miss must lie in [0, 1]");
  }
  if (participants == 0) throw EmptyFederationError("mcar_mask: no participants");
  PresenceMatrix mask(samples, participants, true);
  Rng rng(seed);
  const std::size_t active = participants - 1;
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t k = 0; k < active; ++k) {
      // One draw per cell regardless of p_miss keeps masks nested across p_miss values.
      const bool dropped = rng.uniform() < p_miss;
      mask.set(i, k, !dropped);
    }
  }
  return mask;
}

AlignmentSet alignment_of(std::span<const std::uint8_t> row) {
  if (row.empty() || row.back() == 0) {
    throw ContractError("alignment_of: active participant absent from row");
  }
  if (row.size() > kMaxParticipants) throw ContractError("alignment_of: row too wide");
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] != 0) mask |= 1U << k;
  }
  return AlignmentSet(mask);
}

AlignmentSet alignment_of(std::span<const bool> row) {
  std::vector<std::uint8_t> bytes(row.begin(), row.end());
  return alignment_of(std::span<const std::uint8_t>(bytes));
}

}  // namespace vfl
