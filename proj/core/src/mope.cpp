// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/mope.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <nlohmann/json.hpp>

#include "vflmope/error.hpp"
#include "vflmope/rng.hpp"

namespace vfl {

BlockLayout BlockLayout::from_dims(std::vector<std::size_t> dims) {
  if (dims.empty()) throw ShapeError("BlockLayout: no participants");
  if (dims.size() > kMaxParticipants) throw ShapeError("BlockLayout: too many participants");
  BlockLayout layout;
  layout.offsets.reserve(dims.size());
  for (auto d : dims) {
    if (d == 0) throw ShapeError("BlockLayout: zero-width block");
    layout.offsets.push_back(layout.total);
    layout.total += d;
  }
  layout.dims = std::move(dims);
  return layout;
}

std::size_t BlockLayout::subset_dim(AlignmentSet subset) const {
  std::size_t d = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (subset.contains(k)) d += dims[k];
  }
  return d;
}

std::vector<std::size_t> BlockLayout::subset_columns(AlignmentSet subset) const {
  std::vector<std::size_t> cols;
  cols.reserve(subset_dim(subset));
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (!subset.contains(k)) continue;
    for (std::size_t j = 0; j < dims[k]; ++j) cols.push_back(offsets[k] + j);
  }
  return cols;
}

std::vector<double> pad_and_concat(std::span<const BlockView> blocks, const BlockLayout& layout) {
  if (blocks.size() != layout.participants()) {
    throw ShapeError("pad_and_concat: expected " + std::to_string(layout.participants()) +
                     " blocks, got " + std::to_string(blocks.size()));
  }
  if (!blocks.back().has_value()) {
    throw ContractError("pad_and_concat: active participant's block is missing");
  }
  std::vector<double> z(layout.total, 0.0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (!blocks[k]) continue;
    if (blocks[k]->size() != layout.dims[k]) {
      throw ShapeError("pad_and_concat: block " + std::to_string(k) + " has width " +
                       std::to_string(blocks[k]->size()) + ", layout says " +
                       std::to_string(layout.dims[k]));
    }
    std::copy(blocks[k]->begin(), blocks[k]->end(), z.begin() + static_cast<std::ptrdiff_t>(layout.offsets[k]));
  }
  return z;
}

std::vector<double> decompose(std::span<const double> z_agg, AlignmentSet subset,
                              const BlockLayout& layout) {
  if (z_agg.size() != layout.total) {
    throw ShapeError("decompose: z_agg has width " + std::to_string(z_agg.size()) +
                     ", layout says " + std::to_string(layout.total));
  }
  combination_index(subset, layout.participants());
  std::vector<double> out;
  out.reserve(layout.subset_dim(subset));
  for (auto c : layout.subset_columns(subset)) out.push_back(z_agg[c]);
  return out;
}

void MopeHead::validate() const {
  const auto expected = interesting_combinations(layout.participants());
  if (subsets != expected || experts.size() != expected.size() ||
      expert_columns.size() != expected.size()) {
    throw ShapeError("MopeHead: expert set does not match the interesting combinations");
  }
  router.validate();
  if (router.in_dim() != layout.total || router.out_dim() != experts.size()) {
    throw ShapeError("MopeHead: router shape does not match layout");
  }
  for (std::size_t i = 0; i < experts.size(); ++i) {
    experts[i].validate();
    if (experts[i].in_dim() != layout.subset_dim(subsets[i]) || experts[i].out_dim() != classes) {
      throw ShapeError("MopeHead: expert " + std::to_string(i) + " has the wrong shape");
    }
  }
}

MopeHead make_mope_head(const BlockLayout& layout, std::size_t classes, const MopeOptions& options) {
  if (classes < 2) throw ValidationError("make_mope_head: need at least two classes");
  if (options.router_hidden == 0) throw ShapeError("make_mope_head: router_hidden must be positive");
  MopeHead head;
  head.layout = layout;
  head.classes = classes;
  head.gate_epsilon = options.gate_epsilon;
  head.subsets = interesting_combinations(layout.participants());
  head.router = init_mlp(layout.total, options.router_hidden, head.subsets.size(),
                         mix_seed(options.seed, 0));
  for (std::size_t i = 0; i < head.subsets.size(); ++i) {
    const std::size_t in = layout.subset_dim(head.subsets[i]);
    head.experts.push_back(init_mlp(in, 2 * in, classes, mix_seed(options.seed, i + 1)));
    head.expert_columns.push_back(layout.subset_columns(head.subsets[i]));
  }
  return head;
}

MopeGrads MopeGrads::zeros_like(const MopeHead& head) {
  MopeGrads g;
  g.router = head.router.zeros_like();
  for (const auto& e : head.experts) g.experts.push_back(e.zeros_like());
  return g;
}

namespace {

struct MopeTrace {
  MlpCache router_cache;
  std::vector<double> router_logits;
  std::vector<double> gates;
  std::vector<MlpCache> expert_caches;
  std::vector<std::vector<double>> expert_logits;
  std::vector<std::vector<double>> expert_probs;
  std::vector<double> probs;
  std::vector<double> sub;
  double mass = 0.0;
  bool floored = false;
};

void forward_trace(const MopeHead& head, std::span<const double> z_agg, MopeTrace& t,
                   const MopeHooks* hooks) {
  if (z_agg.size() != head.layout.total) {
    throw ShapeError("mope_forward: z_agg has width " + std::to_string(z_agg.size()) +
                     ", head expects " + std::to_string(head.layout.total));
  }
  if (!all_finite(z_agg)) throw NumericError("mope_forward: non-finite input");

  const std::size_t experts = head.experts.size();
  mlp_forward_into(head.router, z_agg, t.router_cache, t.router_logits);
  t.gates.resize(experts);
  t.mass = 0.0;
  for (std::size_t i = 0; i < experts; ++i) {
    t.gates[i] = sigmoid(t.router_logits[i]);
    t.mass += t.gates[i];
  }
  // A floor rather than an offset, so the mixture stays exactly normalized
  // unless the gate mass underflows.
  t.floored = t.mass < head.gate_epsilon;
  if (t.floored) t.mass = head.gate_epsilon;

  t.expert_caches.resize(experts);
  t.expert_logits.resize(experts);
  t.expert_probs.resize(experts);
  t.probs.assign(head.classes, 0.0);
  for (std::size_t i = 0; i < experts; ++i) {
    const auto& cols = head.expert_columns[i];
    t.sub.resize(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) t.sub[j] = z_agg[cols[j]];
    mlp_forward_into(head.experts[i], t.sub, t.expert_caches[i], t.expert_logits[i]);
    if (hooks != nullptr && hooks->on_expert_eval) hooks->on_expert_eval(i);
    t.expert_probs[i].resize(head.classes);
    softmax_into(t.expert_logits[i], t.expert_probs[i]);
    for (std::size_t c = 0; c < head.classes; ++c) t.probs[c] += t.gates[i] * t.expert_probs[i][c];
  }
  for (double& p : t.probs) p /= t.mass;
}

}  // namespace

MopeOutput mope_forward(const MopeHead& head, std::span<const double> z_agg, const MopeHooks* hooks) {
  MopeTrace t;
  forward_trace(head, z_agg, t, hooks);
  return MopeOutput{std::move(t.probs), std::move(t.gates), std::move(t.router_logits),
                    std::move(t.expert_probs)};
}

namespace {

double accumulate_gradient(const MopeHead& head, std::span<const double> z_agg, std::size_t label,
                           Mlp2& router_grads, std::span<Mlp2> expert_grads) {
  if (label >= head.classes) {
    throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(head.classes) + ")");
  }
  thread_local MopeTrace t;
  forward_trace(head, z_agg, t, nullptr);

  const double py = t.probs[label];
  if (py < kLogFloor) return -clamped_log(py);  // flat region of the clamped loss

  const std::size_t experts = head.experts.size();
  thread_local std::vector<double> drouter;
  thread_local std::vector<double> dlogits;
  drouter.assign(experts, 0.0);
  dlogits.resize(head.classes);
  const double inv = 1.0 / (t.mass * py);
  for (std::size_t i = 0; i < experts; ++i) {
    const auto& p = t.expert_probs[i];
    const double g = t.gates[i];
    // A floored mass no longer depends on the gates.
    const double dgate = -(t.floored ? p[label] : p[label] - py) * inv;
    drouter[i] = dgate * g * (1.0 - g);

    // d loss / d p_i[label] = -g_i / (mass * py), pushed through softmax.
    const double a = -g * inv * p[label];
    if (a == 0.0) continue;
    for (std::size_t c = 0; c < head.classes; ++c) {
      dlogits[c] = a * ((c == label ? 1.0 : 0.0) - p[c]);
    }
    mlp_accumulate_backward(head.experts[i], t.expert_caches[i], dlogits, expert_grads[i]);
  }
  mlp_accumulate_backward(head.router, t.router_cache, drouter, router_grads);
  return -std::log(py);
}

}  // namespace

double mope_accumulate_gradient(const MopeHead& head, std::span<const double> z_agg,
                                std::size_t label, MopeGrads& grads) {
  if (grads.experts.size() != head.experts.size()) {
    throw ShapeError("mope_accumulate_gradient: gradient buffer has the wrong expert count");
  }
  return accumulate_gradient(head, z_agg, label, grads.router, grads.experts);
}

MopeLoss mope_loss_and_backward(const MopeHead& head, std::span<const double> z_agg,
                                std::size_t label) {
  MopeLoss out{0.0, MopeGrads::zeros_like(head)};
  out.loss = mope_accumulate_gradient(head, z_agg, label, out.grads);
  return out;
}

TrainResult train_mope(MopeHead& head, const HeadDataset& data, const TrainConfig& config) {
  if (data.features.cols != head.layout.total && !data.empty()) {
    throw ShapeError("train_mope: dataset width does not match head");
  }
  if (data.classes != head.classes && !data.empty()) {
    throw ShapeError("train_mope: dataset class count does not match head");
  }
  std::vector<Mlp2*> modules{&head.router};
  for (auto& e : head.experts) modules.push_back(&e);

  return train_modules(modules, data, config, [&](std::size_t row, std::vector<Mlp2>& grads) {
    return accumulate_gradient(head, data.features.row(row), data.labels[row], grads[0],
                               std::span<Mlp2>(grads).subspan(1));
  });
}

namespace {

std::size_t participants_from_gates(std::size_t gate_count) {
  if (gate_count == 0 || !std::has_single_bit(gate_count)) {
    throw ValidationError("contribution: gate count " + std::to_string(gate_count) +
                          " is not a power of two");
  }
  return static_cast<std::size_t>(std::countr_zero(gate_count)) + 1;
}

}  // namespace

double contribution(std::span<const double> gates, ParticipantId k, const ContributionOptions& options) {
  const std::size_t participants = participants_from_gates(gates.size());
  if (k.index >= participants) {
    throw ValidationError("contribution: participant " + std::to_string(k.index) + " out of range");
  }
  for (double g : gates) {
    if (!std::isfinite(g) || g < 0.0) {
      throw ValidationError("contribution: gates must be finite and non-negative");
    }
  }
  const auto subsets = interesting_combinations(participants);
  const std::size_t first = options.passive_only ? 1 : 0;  // expert 0 is {active}

  if (options.mode == ContributionMode::Literal) {
    double count = 0.0;
    for (std::size_t e = first; e < gates.size(); ++e) {
      if (subsets[e].contains(k.index) && gates[e] != 0.0) count += gates[e] / gates[e];
    }
    return count;
  }

  double mass = 0.0;
  double owned = 0.0;
  for (std::size_t e = first; e < gates.size(); ++e) {
    mass += gates[e];
    if (subsets[e].contains(k.index)) owned += gates[e];
  }
  if (mass == 0.0) throw UndefinedContributionError("contribution: all gates are zero");
  return owned / mass;
}

std::vector<double> contributions(std::span<const double> gates, const ContributionOptions& options) {
  const std::size_t participants = participants_from_gates(gates.size());
  std::vector<double> out;
  out.reserve(participants);
  for (std::size_t k = 0; k < participants; ++k) out.push_back(contribution(gates, ParticipantId{k}, options));
  return out;
}

SampleReport per_sample_report(const MopeHead& head, std::span<const double> z_agg,
                               AlignmentSet alignment, std::uint64_t sample_id,
                               std::optional<std::size_t> label) {
  auto out = mope_forward(head, z_agg);
  SampleReport r;
  r.sample_id = sample_id;
  r.contributions = contributions(out.gates);
  r.gates = std::move(out.gates);
  r.predicted = argmax(out.probs);
  r.label = label;
  for (std::size_t k = 0; k < head.layout.participants(); ++k) {
    if (!alignment.contains(k)) r.padded.push_back(k);
  }
  return r;
}

std::string report_to_json(const SampleReport& report) {
  nlohmann::ordered_json j;
  j["sample_id"] = report.sample_id;
  j["gates"] = report.gates;
  j["contributions"] = report.contributions;
  j["predicted"] = report.predicted;
  if (report.label) {
    j["label"] = *report.label;
  } else {
    j["label"] = nullptr;
  }
  j["padded"] = report.padded;
  return j.dump();
}

SampleReport report_from_json(const std::string& line, std::uint64_t line_number) {
  try {
    const auto j = nlohmann::json::parse(line);
    SampleReport r;
    r.sample_id = j.at("sample_id").get<std::uint64_t>();
    r.gates = j.at("gates").get<std::vector<double>>();
    r.contributions = j.at("contributions").get<std::vector<double>>();
    r.predicted = j.at("predicted").get<std::size_t>();
    if (!j.at("label").is_null()) r.label = j.at("label").get<std::size_t>();
    if (j.contains("padded")) r.padded = j.at("padded").get<std::vector<std::size_t>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report line: ") + e.what(), line_number);
  }
}

}  // namespace vfl
