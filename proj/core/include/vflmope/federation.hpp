// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// Simulated federation. Participants are logical actors whose messages are
// executed in participant order; every embedding transfer goes through the
// wire encoding and is recorded in a CommLedger.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vflmope/alignment.hpp"
#include "vflmope/dataio.hpp"
#include "vflmope/dataset.hpp"
#include "vflmope/heads.hpp"
#include "vflmope/mope.hpp"
#include "vflmope/nn.hpp"
#include "vflmope/training.hpp"

namespace vfl {

enum class Role { Active, Passive, Noisy };
std::string_view to_string(Role role);

/// How the second parameter of N(0, param) is read.
enum class NoiseScale { Variance, StdDev };

struct NoiseConfig {
  double param = 100.0;
  NoiseScale scale = NoiseScale::Variance;

  [[nodiscard]] double stddev() const;
};

struct Participant {
  ParticipantId id;
  Role role = Role::Passive;
  std::vector<std::uint64_t> ids;
  /// One row per entry of `ids`. Empty for noisy participants, whose rows are
  /// drawn from the noise generator when they are sent.
  Matrix embeddings;
  std::size_t dim = 0;
  NoiseConfig noise;
  std::uint64_t noise_seed = 0;
};

struct Federation {
  /// Canonical order; the last participant is the active one.
  std::vector<Participant> participants;
  /// Labels and train/test flags, indexed like the active participant's IDs.
  std::vector<std::size_t> labels;
  std::vector<std::uint8_t> is_test;
  std::size_t classes = 0;

  [[nodiscard]] std::size_t size() const { return participants.size(); }
  [[nodiscard]] const Participant& active() const { return participants.back(); }
  [[nodiscard]] BlockLayout layout() const;

  /// Throws ConfigError unless exactly one participant, the last, is active
  /// and every participant's data is internally consistent.
  void validate() const;
};

Federation federation_from_synthetic(const SyntheticData& data);

/// Builds a federation from per-participant embedding files, ordered so the
/// file carrying labels comes last. Exactly one file may carry labels. The
/// active participant's rows are split train/test with `split_seed`.
Federation federation_from_files(std::vector<EmbeddingFile> files, double train_fraction,
                                 std::uint64_t split_seed);

/// n x z i.i.d. N(0, sigma^2) entries; sigma from `noise`. Deterministic in seed.
Matrix noisy_embeddings(std::size_t samples, std::size_t dim, std::uint64_t seed,
                        const NoiseConfig& noise = {});

/// Inserts `count` noisy participants right before the active one. They share
/// the active participant's ID list and the embedding width of participant 0.
Federation inject_noisy(const Federation& federation, std::size_t count, std::uint64_t seed,
                        const NoiseConfig& noise = {});

enum class Direction { Forward, Backward };

struct LedgerEntry {
  std::size_t sender = 0;
  std::size_t receiver = 0;
  Direction direction = Direction::Forward;
  std::uint64_t bytes = 0;
  std::uint64_t round = 0;

  bool operator==(const LedgerEntry&) const = default;
};

/// Payload bytes of an embedding message at 4-byte wire precision.
constexpr std::uint64_t embedding_payload_bytes(std::uint64_t samples, std::uint64_t dim) {
  return samples * dim * 4;
}

/// Append-only record of simulated transfers.
class CommLedger {
 public:
  void record(const LedgerEntry& entry);

  [[nodiscard]] std::span<const LedgerEntry> entries() const { return entries_; }
  [[nodiscard]] std::uint64_t total_bytes() const { return total_; }
  [[nodiscard]] std::uint64_t total_bytes(Direction direction) const;
  [[nodiscard]] std::size_t count(Direction direction) const;

  bool operator==(const CommLedger&) const = default;

 private:
  std::vector<LedgerEntry> entries_;
  std::uint64_t total_ = 0;
};

/// Psi matching of all ID lists combined with an MCAR mask over the
/// active participant's rows.
struct FederationAlignment {
  AlignedIds matched;
  PresenceMatrix presence;
};

FederationAlignment align_federation(const Federation& federation, double p_miss,
                                     std::uint64_t mask_seed);

struct RoundConfig {
  HeadKind head = HeadKind::Mope;
  TrainConfig train;
  MopeOptions mope;
  /// Seeds head initialization; the training shuffle uses train.seed.
  std::uint64_t seed = 0;
};

struct RoundResult {
  Head head;
  CommLedger ledger;
  HeadDataset train;
  HeadDataset test;
  TrainResult trace;
  MetricReport metrics;
};

/// Decoupled single-round protocol: every non-active participant sends its
/// aligned embeddings to the active participant exactly once (round 0), then
/// the active participant trains the head locally and evaluates it on every
/// test row.
RoundResult run_single_round(const Federation& federation, const FederationAlignment& alignment,
                             const RoundConfig& config);

/// Only the message exchange and padded-dataset assembly of run_single_round.
struct ExchangeResult {
  CommLedger ledger;
  HeadDataset train;
  HeadDataset test;
};
ExchangeResult exchange_embeddings(const Federation& federation, const FederationAlignment& alignment);

/// Closed-form end-to-end split-learning traffic:
/// 2 * (K - 1) * epochs * samples * dim * 4 bytes.
std::uint64_t simulate_end_to_end_cost(std::uint64_t participants, std::uint64_t samples,
                                       std::uint64_t dim, std::uint64_t epochs);

/// The end-to-end schedule enumerated message by message: per epoch, each
/// passive participant sends its embeddings forward and receives gradients of
/// the same size back. One round per epoch.
CommLedger simulate_end_to_end_schedule(std::uint64_t participants, std::uint64_t samples,
                                        std::uint64_t dim, std::uint64_t epochs);

/// Single-round traffic for a fully aligned federation: (K - 1) * samples * dim * 4.
std::uint64_t single_round_cost(std::uint64_t participants, std::uint64_t samples, std::uint64_t dim);

}  // namespace vfl
