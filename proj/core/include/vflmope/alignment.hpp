// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// Participant-set algebra. Participants are indexed 0..K-1 and the highest
// index is always the active (label-holding) participant.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vfl {

/// Largest federation whose subsets fit the bitmask representation.
inline constexpr std::size_t kMaxParticipants = 24;

struct ParticipantId {
  std::size_t index = 0;
  auto operator<=>(const ParticipantId&) const = default;
};

inline ParticipantId active_participant(std::size_t participant_count) {
  return ParticipantId{participant_count - 1};
}

/// A subset of participants, stored as a bitmask (bit k = participant k).
class AlignmentSet {
 public:
  constexpr AlignmentSet() = default;
  constexpr explicit AlignmentSet(std::uint32_t mask) : mask_(mask) {}

  static AlignmentSet of(std::initializer_list<std::size_t> members);

  [[nodiscard]] constexpr std::uint32_t mask() const { return mask_; }
  [[nodiscard]] constexpr bool contains(std::size_t k) const { return (mask_ >> k) & 1U; }
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::vector<std::size_t> members() const;

  /// "{0,2}" style rendering.
  [[nodiscard]] std::string to_string() const;

  constexpr auto operator<=>(const AlignmentSet&) const = default;

 private:
  std::uint32_t mask_ = 0;
};

/// Every subset of [K] containing the active participant, in ascending
/// bitmask order. Length 2^(K-1). Throws EmptyFederationError for K = 0.
std::vector<AlignmentSet> interesting_combinations(std::size_t participant_count);

/// Position of `set` in interesting_combinations(K). Throws ContractError if
/// the set lacks the active participant or names a participant >= K.
std::size_t combination_index(AlignmentSet set, std::size_t participant_count);

/// Boolean [n_samples x K] matrix; entry (i, k) is true iff participant k
/// holds sample i.
class PresenceMatrix {
 public:
  PresenceMatrix() = default;
  PresenceMatrix(std::size_t samples, std::size_t participants, bool fill);

  [[nodiscard]] std::size_t samples() const { return samples_; }
  [[nodiscard]] std::size_t participants() const { return participants_; }

  [[nodiscard]] bool at(std::size_t i, std::size_t k) const {
    return cells_[i * participants_ + k] != 0;
  }
  void set(std::size_t i, std::size_t k, bool present) {
    cells_[i * participants_ + k] = present ? 1 : 0;
  }
  [[nodiscard]] std::span<const std::uint8_t> row(std::size_t i) const {
    return {cells_.data() + i * participants_, participants_};
  }

  /// Alignment set of row i.
  [[nodiscard]] AlignmentSet alignment(std::size_t i) const;

  /// Fraction of true entries in column k.
  [[nodiscard]] double column_fraction(std::size_t k) const;

  /// Elementwise AND; shapes must agree.
  [[nodiscard]] PresenceMatrix intersect(const PresenceMatrix& other) const;

  bool operator==(const PresenceMatrix&) const = default;

 private:
  std::size_t samples_ = 0;
  std::size_t participants_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Result of matching every participant's IDs against the active list.
struct AlignedIds {
  /// The active participant's IDs; row order of `presence`.
  std::vector<std::uint64_t> ids;
  PresenceMatrix presence;
  /// source_row[k][i]: row of sample i in participant k's own list, or -1.
  std::vector<std::vector<std::int64_t>> source_row;
};

/// Plaintext ID matching standing in for a private set intersection. The
/// last list belongs to the active participant.
AlignedIds psi_align(std::span<const std::vector<std::uint64_t>> id_lists);

/// Independent Bernoulli(p_miss) drop for every (sample, passive participant)
/// pair; the active column is all true.
PresenceMatrix mcar_mask(std::size_t samples, std::size_t participants, double p_miss,
                         std::uint64_t seed);

/// Alignment set of one presence row. Throws ContractError when the active
/// participant's bit is unset.
AlignmentSet alignment_of(std::span<const std::uint8_t> row);
AlignmentSet alignment_of(std::span<const bool> row);

}  // namespace vfl
