// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/federation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "vflmope/error.hpp"
#include "vflmope/rng.hpp"

namespace vfl {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Active:
      return "active";
    case Role::Passive:
      return "passive";
    case Role::Noisy:
      return "noisy";
  }
  return "unknown";
}

double NoiseConfig::stddev() const {
  return scale == NoiseScale::Variance ? std::sqrt(param) : param;
}

BlockLayout Federation::layout() const {
  std::vector<std::size_t> dims;
  dims.reserve(participants.size());
  for (const auto& p : participants) dims.push_back(p.dim);
  return BlockLayout::from_dims(std::move(dims));
}

void Federation::validate() const {
  if (participants.empty()) throw ConfigError("federation has no participants");
  if (participants.size() > kMaxParticipants) throw ConfigError("federation has too many participants");
  for (std::size_t k = 0; k < participants.size(); ++k) {
    const auto& p = participants[k];
    const bool last = k + 1 == participants.size();
    if ((p.role == Role::Active) != last) {
      throw ConfigError("federation needs exactly one active participant, placed last");
    }
    if (p.id.index != k) throw ConfigError("participant " + std::to_string(k) + " has a mismatched id");
    if (p.dim == 0) throw ConfigError("participant " + std::to_string(k) + " has zero embedding width");
    if (p.role != Role::Noisy && (p.embeddings.rows != p.ids.size() || p.embeddings.cols != p.dim)) {
      throw ConfigError("participant " + std::to_string(k) + " embeddings do not match its IDs");
    }
    if (p.role == Role::Noisy && !(p.noise.param > 0.0)) {
      throw ConfigError("noisy participant " + std::to_string(k) + " has a non-positive noise parameter");
    }
  }
  const auto n = active().ids.size();
  if (labels.size() != n || is_test.size() != n) {
    throw ConfigError("labels/split flags must cover every active participant row");
  }
  if (classes < 2) throw ConfigError("federation needs at least two classes");
  for (auto y : labels) {
    if (y >= classes) throw ConfigError("label out of range");
  }
}

Federation federation_from_synthetic(const SyntheticData& data) {
  Federation fed;
  const std::size_t participants = data.blocks.size();
  for (std::size_t k = 0; k < participants; ++k) {
    Participant p;
    p.id = ParticipantId{k};
    p.role = k + 1 == participants ? Role::Active : Role::Passive;
    p.ids = data.ids;
    p.embeddings = data.blocks[k];
    p.dim = data.blocks[k].cols;
    fed.participants.push_back(std::move(p));
  }
  fed.labels = data.labels;
  fed.is_test = data.is_test;
  fed.classes = data.classes;
  fed.validate();
  return fed;
}

Federation federation_from_files(std::vector<EmbeddingFile> files, double train_fraction,
                                 std::uint64_t split_seed) {
  if (files.empty()) throw ConfigError("no embedding files given");
  std::size_t labelled = files.size();
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!files[i].labels) continue;
    if (labelled != files.size()) throw ConfigError("more than one embedding file carries labels");
    labelled = i;
  }
  if (labelled == files.size()) throw ConfigError("no embedding file carries labels (active participant)");
  std::rotate(files.begin() + static_cast<std::ptrdiff_t>(labelled),
              files.begin() + static_cast<std::ptrdiff_t>(labelled) + 1, files.end());

  Federation fed;
  for (std::size_t k = 0; k < files.size(); ++k) {
    Participant p;
    p.id = ParticipantId{k};
    p.role = k + 1 == files.size() ? Role::Active : Role::Passive;
    p.ids = std::move(files[k].ids);
    p.dim = files[k].embeddings.cols;
    p.embeddings = std::move(files[k].embeddings);
    fed.participants.push_back(std::move(p));
  }
  std::size_t classes = 0;
  for (auto y : *files.back().labels) {
    fed.labels.push_back(y);
    classes = std::max<std::size_t>(classes, std::size_t{y} + 1);
  }
  fed.classes = std::max<std::size_t>(classes, 2);
  fed.is_test = split_test_flags(fed.labels.size(), train_fraction, split_seed);
  fed.validate();
  return fed;
}

Matrix noisy_embeddings(std::size_t samples, std::size_t dim, std::uint64_t seed,
                        const NoiseConfig& noise) {
  if (samples == 0 || dim == 0) throw ValidationError("noisy_embeddings: sizes must be positive");
  if (!(noise.param > 0.0) || !std::isfinite(noise.param)) {
    throw ValidationError("noisy_embeddings: noise parameter must be positive");
  }
  const double sigma = noise.stddev();
  Matrix m(samples, dim);
  Rng rng(seed);
  for (double& v : m.data) v = sigma * rng.normal();
  return m;
}

Federation inject_noisy(const Federation& federation, std::size_t count, std::uint64_t seed,
                        const NoiseConfig& noise) {
  if (count == 0) return federation;
  Federation out = federation;
  Participant active = std::move(out.participants.back());
  out.participants.pop_back();
  const std::size_t dim = out.participants.empty() ? active.dim : out.participants.front().dim;
  for (std::size_t j = 0; j < count; ++j) {
    Participant p;
    p.id = ParticipantId{out.participants.size()};
    p.role = Role::Noisy;
    p.ids = active.ids;
    p.dim = dim;
    p.noise = noise;
    p.noise_seed = mix_seed(seed, j);
    out.participants.push_back(std::move(p));
  }
  active.id = ParticipantId{out.participants.size()};
  out.participants.push_back(std::move(active));
  out.validate();
  return out;
}

void CommLedger::record(const LedgerEntry& entry) {
  entries_.push_back(entry);
  total_ += entry.bytes;
}

std::uint64_t CommLedger::total_bytes(Direction direction) const {
  std::uint64_t total = 0;
  for (const auto& e : entries_) {
    if (e.direction == direction) total += e.bytes;
  }
  return total;
}

std::size_t CommLedger::count(Direction direction) const {
  std::size_t c = 0;
  for (const auto& e : entries_) c += e.direction == direction ? 1 : 0;
  return c;
}

FederationAlignment align_federation(const Federation& federation, double p_miss,
                                     std::uint64_t mask_seed) {
  federation.validate();
  std::vector<std::vector<std::uint64_t>> lists;
  lists.reserve(federation.size());
  for (const auto& p : federation.participants) lists.push_back(p.ids);
  FederationAlignment out;
  out.matched = psi_align(lists);
  const auto mask = mcar_mask(out.matched.ids.size(), federation.size(), p_miss, mask_seed);
  out.presence = out.matched.presence.intersect(mask);
  return out;
}

namespace {

/// The message participant k sends: its rows for every active row it holds.
EmbeddingFile outgoing_message(const Participant& sender, const FederationAlignment& alignment) {
  const auto& presence = alignment.presence;
  const auto& source = alignment.matched.source_row[sender.id.index];
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < presence.samples(); ++i) {
    if (presence.at(i, sender.id.index)) rows.push_back(static_cast<std::size_t>(source[i]));
  }

  EmbeddingFile msg;
  msg.participant = static_cast<std::uint32_t>(sender.id.index);
  msg.embeddings = Matrix(rows.size(), sender.dim);
  if (sender.role == Role::Noisy) {
    // The whole noise table is drawn so a row's values do not depend on the mask.
    const Matrix table = noisy_embeddings(std::max<std::size_t>(sender.ids.size(), 1), sender.dim,
                                          sender.noise_seed, sender.noise);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = table.row(rows[r]);
      std::copy(src.begin(), src.end(), msg.embeddings.row(r).begin());
    }
  } else {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = sender.embeddings.row(rows[r]);
      std::copy(src.begin(), src.end(), msg.embeddings.row(r).begin());
    }
  }
  msg.ids.reserve(rows.size());
  for (auto r : rows) msg.ids.push_back(sender.ids[r]);
  return msg;
}

}  // namespace

ExchangeResult exchange_embeddings(const Federation& federation, const FederationAlignment& alignment) {
  federation.validate();
  const auto& presence = alignment.presence;
  const std::size_t n = presence.samples();
  if (presence.participants() != federation.size() || n != federation.active().ids.size()) {
    throw ConfigError("alignment does not belong to this federation");
  }
  const BlockLayout layout = federation.layout();
  const std::size_t active = federation.size() - 1;

  Matrix features(n, layout.total);
  {
    const auto& own = federation.active();
    const auto& source = alignment.matched.source_row[active];
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = own.embeddings.row(static_cast<std::size_t>(source[i]));
      std::copy(src.begin(), src.end(), features.row(i).begin() + static_cast<std::ptrdiff_t>(layout.offsets[active]));
    }
  }

  ExchangeResult out;
  std::unordered_map<std::uint64_t, std::size_t> active_row;
  active_row.reserve(n);
  for (std::size_t i = 0; i < n; ++i) active_row.emplace(alignment.matched.ids[i], i);

  for (std::size_t k = 0; k < active; ++k) {
    const auto& sender = federation.participants[k];
    const auto wire = encode_embeddings(outgoing_message(sender, alignment));
    const auto received = decode_embeddings(wire);
    out.ledger.record(LedgerEntry{k, active, Direction::Forward,
                                  embedding_payload_bytes(received.ids.size(), received.embeddings.cols), 0});
    for (std::size_t r = 0; r < received.ids.size(); ++r) {
      const std::size_t i = active_row.at(received.ids[r]);
      const auto src = received.embeddings.row(r);
      std::copy(src.begin(), src.end(), features.row(i).begin() + static_cast<std::ptrdiff_t>(layout.offsets[k]));
    }
  }

  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  HeadDataset all;
  all.features = std::move(features);
  all.classes = federation.classes;
  for (std::size_t i = 0; i < n; ++i) {
    all.labels.push_back(federation.labels[i]);
    all.alignments.push_back(presence.alignment(i));
    all.ids.push_back(alignment.matched.ids[i]);
    (federation.is_test[i] ? test_rows : train_rows).push_back(i);
  }
  out.train = all.subset(train_rows);
  out.test = all.subset(test_rows);
  return out;
}

RoundResult run_single_round(const Federation& federation, const FederationAlignment& alignment,
                             const RoundConfig& config) {
  auto exchange = exchange_embeddings(federation, alignment);
  Head head = make_head(config.head, federation.layout(), federation.classes, config.seed, config.mope);
  TrainResult trace;
  if (config.train.epochs > 0) trace = train_head(head, exchange.train, config.train);
  MetricReport metrics = evaluate(head, exchange.test);
  return RoundResult{std::move(head), std::move(exchange.ledger), std::move(exchange.train),
                     std::move(exchange.test), std::move(trace), std::move(metrics)};
}

std::uint64_t simulate_end_to_end_cost(std::uint64_t participants, std::uint64_t samples,
                                       std::uint64_t dim, std::uint64_t epochs) {
  if (participants == 0) return 0;
  return 2 * (participants - 1) * epochs * samples * dim * 4;
}

CommLedger simulate_end_to_end_schedule(std::uint64_t participants, std::uint64_t samples,
                                        std::uint64_t dim, std::uint64_t epochs) {
  CommLedger ledger;
  if (participants == 0) return ledger;
  const std::size_t active = participants - 1;
  for (std::uint64_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t k = 0; k < active; ++k) {
      ledger.record({k, active, Direction::Forward, embedding_payload_bytes(samples, dim), epoch});
      ledger.record({active, k, Direction::Backward, embedding_payload_bytes(samples, dim), epoch});
    }
  }
  return ledger;
}

std::uint64_t single_round_cost(std::uint64_t participants, std::uint64_t samples, std::uint64_t dim) {
  if (participants == 0) return 0;
  return (participants - 1) * embedding_payload_bytes(samples, dim);
}

}  // namespace vfl
