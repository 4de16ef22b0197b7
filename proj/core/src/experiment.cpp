// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vflmope/error.hpp"
#include "vflmope/rng.hpp"

namespace vfl {

namespace {

using nlohmann::json;

// Stream tags for deriving per-cell seeds.
constexpr std::uint64_t kMaskStream = 101;
constexpr std::uint64_t kNoiseStream = 102;
constexpr std::uint64_t kHeadStream = 103;
constexpr std::uint64_t kTrainStream = 104;

class FieldErrors {
 public:
  void add(std::string field, std::string why) { errors_.push_back(std::move(field) + ": " + std::move(why)); }

  void throw_if_any(const std::string& what) const {
    if (errors_.empty()) return;
    std::string msg = "invalid " + what + ":";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw ValidationError(msg);
  }

 private:
  std::vector<std::string> errors_;
};

template <typename T>
void read_field(const json& doc, const char* key, T& out, FieldErrors& errors, const std::string& prefix) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception&) {
    errors.add(prefix + key, "wrong type");
  }
}

std::string fmt6(double v) { return fmt::format("{:.6g}", v); }

}  // namespace

SyntheticSpec parse_synthetic_spec(const json& doc) {
  FieldErrors errors;
  SyntheticSpec spec;
  if (!doc.is_object()) throw ValidationError("synthetic spec must be a JSON object");
  read_field(doc, "classes", spec.classes, errors, "synthetic.");
  read_field(doc, "samples", spec.samples, errors, "synthetic.");
  read_field(doc, "train_fraction", spec.train_fraction, errors, "synthetic.");
  read_field(doc, "dims", spec.dims, errors, "synthetic.");
  read_field(doc, "separation", spec.separation, errors, "synthetic.");
  read_field(doc, "offset", spec.offset, errors, "synthetic.");
  read_field(doc, "within_std", spec.within_std, errors, "synthetic.");
  read_field(doc, "seed", spec.seed, errors, "synthetic.");
  if (spec.dims.empty()) errors.add("synthetic.dims", "required, one width per participant");
  if (spec.separation.size() != spec.dims.size()) errors.add("synthetic.separation", "needs one value per participant");
  errors.throw_if_any("synthetic spec");
  spec.validate();
  return spec;
}

json synthetic_spec_to_json(const SyntheticSpec& spec) {
  json j;
  j["classes"] = spec.classes;
  j["samples"] = spec.samples;
  j["train_fraction"] = spec.train_fraction;
  j["dims"] = spec.dims;
  j["separation"] = spec.separation;
  if (!spec.offset.empty()) j["offset"] = spec.offset;
  j["within_std"] = spec.within_std;
  j["seed"] = spec.seed;
  return j;
}

ExperimentConfig parse_experiment_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("experiment config must be a JSON object");
  FieldErrors errors;
  ExperimentConfig config;

  if (!doc.contains("data") || !doc.at("data").is_object()) {
    errors.add("data", "required object with 'synthetic' or 'files'");
  } else {
    const auto& data = doc.at("data");
    const bool has_synth = data.contains("synthetic");
    const bool has_files = data.contains("files");
    if (has_synth == has_files) errors.add("data", "give exactly one of 'synthetic' or 'files'");
    if (has_synth) {
      try {
        config.synthetic = parse_synthetic_spec(data.at("synthetic"));
      } catch (const ValidationError& e) {
        errors.add("data.synthetic", e.what());
      }
    }
    if (has_files) {
      std::vector<std::string> files;
      read_field(data, "files", files, errors, "data.");
      if (files.empty()) errors.add("data.files", "needs at least one path");
      for (auto& f : files) config.embedding_files.emplace_back(f);
      read_field(data, "train_fraction", config.train_fraction, errors, "data.");
      read_field(data, "split_seed", config.split_seed, errors, "data.");
      if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
        errors.add("data.train_fraction", "must lie in (0, 1)");
      }
    }
  }

  std::vector<std::string> heads;
  read_field(doc, "heads", heads, errors, "");
  if (heads.empty()) errors.add("heads", "needs at least one head");
  for (const auto& h : heads) {
    try {
      config.heads.push_back(parse_head_kind(h));
    } catch (const ValidationError& e) {
      errors.add("heads", e.what());
    }
  }

  read_field(doc, "p_miss", config.p_miss, errors, "");
  if (config.p_miss.empty()) errors.add("p_miss", "needs at least one value");
  for (double p : config.p_miss) {
    if (!(p >= 0.0 && p <= 1.0)) errors.add("p_miss", "value " + fmt6(p) + " outside [0, 1]");
  }
  config.noisy = {0};
  read_field(doc, "noisy", config.noisy, errors, "");
  if (config.noisy.empty()) errors.add("noisy", "needs at least one value");
  read_field(doc, "seeds", config.seeds, errors, "");
  if (config.seeds.empty()) errors.add("seeds", "needs at least one seed");

  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    read_field(t, "epochs", config.train.epochs, errors, "train.");
    read_field(t, "batch", config.train.batch, errors, "train.");
    read_field(t, "lr", config.train.adam.lr, errors, "train.");
    read_field(t, "beta1", config.train.adam.beta1, errors, "train.");
    read_field(t, "beta2", config.train.adam.beta2, errors, "train.");
    read_field(t, "epsilon", config.train.adam.epsilon, errors, "train.");
    if (config.train.batch == 0) errors.add("train.batch", "must be positive");
    if (!(config.train.adam.lr > 0.0)) errors.add("train.lr", "must be positive");
  }
  if (doc.contains("mope")) {
    read_field(doc.at("mope"), "router_hidden", config.mope.router_hidden, errors, "mope.");
    if (config.mope.router_hidden == 0) errors.add("mope.router_hidden", "must be positive");
  }
  if (doc.contains("noise")) {
    const auto& n = doc.at("noise");
    read_field(n, "param", config.noise.param, errors, "noise.");
    std::string scale = "variance";
    read_field(n, "scale", scale, errors, "noise.");
    if (scale == "variance") {
      config.noise.scale = NoiseScale::Variance;
    } else if (scale == "stddev") {
      config.noise.scale = NoiseScale::StdDev;
    } else {
      errors.add("noise.scale", "must be 'variance' or 'stddev'");
    }
    if (!(config.noise.param > 0.0)) errors.add("noise.param", "must be positive");
  }
  std::string out = config.output_dir.string();
  read_field(doc, "output_dir", out, errors, "");
  config.output_dir = out;
  read_field(doc, "write_reports", config.write_reports, errors, "");
  read_field(doc, "threads", config.threads, errors, "");
  if (config.threads == 0) errors.add("threads", "must be positive");

  errors.throw_if_any("experiment config");
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc);
}

namespace {

struct Job {
  CellKey key;
  std::size_t slot = 0;
};

CellResult run_cell(const CellKey& key, const Federation& base, const ExperimentConfig& config) {
  const Federation fed = inject_noisy(base, key.noisy, mix_seed(key.seed, kNoiseStream), config.noise);
  const auto alignment = align_federation(fed, key.p_miss, mix_seed(key.seed, kMaskStream));

  RoundConfig round;
  round.head = key.head;
  round.train = config.train;
  round.train.seed = mix_seed(key.seed, kTrainStream);
  round.mope = config.mope;
  round.seed = mix_seed(key.seed, kHeadStream);
  auto r = run_single_round(fed, alignment, round);

  CellResult cell;
  cell.key = key;
  cell.metrics = r.metrics;
  cell.comm_bytes = r.ledger.total_bytes();
  if (const auto* mope = std::get_if<MopeHead>(&r.head); mope != nullptr && config.write_reports) {
    cell.reports.reserve(r.test.size());
    for (std::size_t i = 0; i < r.test.size(); ++i) {
      cell.reports.push_back(per_sample_report(*mope, r.test.features.row(i), r.test.alignments[i],
                                               r.test.ids[i], r.test.labels[i]));
    }
  }
  return cell;
}

std::string cell_label(const CellKey& key) {
  return fmt::format("head={} p_miss={} noisy={} seed={}", to_string(key.head), fmt6(key.p_miss), key.noisy,
                     key.seed);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  Federation base;
  if (config.synthetic) {
    base = federation_from_synthetic(gen_synthetic(*config.synthetic));
  } else {
    std::vector<EmbeddingFile> files;
    for (const auto& path : config.embedding_files) files.push_back(read_embedding_file(path));
    base = federation_from_files(std::move(files), config.train_fraction, config.split_seed);
  }

  std::vector<Job> jobs;
  for (auto head : config.heads) {
    for (double p : config.p_miss) {
      for (auto noisy : config.noisy) {
        for (auto seed : config.seeds) jobs.push_back({CellKey{head, p, noisy, seed}, jobs.size()});
      }
    }
  }

  ExperimentResult result;
  result.cells.resize(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto& key = jobs[j].key;
      spdlog::debug("running cell {}", cell_label(key));
      try {
        result.cells[j] = run_cell(key, base, config);
        spdlog::info("{} accuracy={} f1={}", cell_label(key), fmt6(result.cells[j].metrics.accuracy),
                     fmt6(result.cells[j].metrics.headline_f1()));
      } catch (const std::exception& e) {
        failures[j] = e.what();
      }
    }
  };
  const std::size_t threads = std::min(config.threads, std::max<std::size_t>(jobs.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!failures[j].empty()) throw Error("cell " + cell_label(jobs[j].key) + " failed: " + failures[j]);
  }
  return result;
}

std::string results_csv(const ExperimentResult& result) {
  std::string out = "head,p_miss,noisy,seed,accuracy,f1,comm_bytes\n";
  for (const auto& c : result.cells) {
    out += fmt::format("{},{},{},{},{},{},{}\n", to_string(c.key.head), fmt6(c.key.p_miss), c.key.noisy,
                       c.key.seed, fmt6(c.metrics.accuracy), fmt6(c.metrics.headline_f1()), c.comm_bytes);
  }
  return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

std::string aggregated_csv(const ExperimentResult& result) {
  std::string out = "head,p_miss,noisy,runs,accuracy_mean,accuracy_std,f1_mean,f1_std,comm_bytes_mean\n";
  std::size_t i = 0;
  while (i < result.cells.size()) {
    const auto& key = result.cells[i].key;
    std::vector<double> acc, f1, bytes;
    std::size_t j = i;
    for (; j < result.cells.size(); ++j) {
      const auto& k = result.cells[j].key;
      if (k.head != key.head || k.p_miss != key.p_miss || k.noisy != key.noisy) break;
      acc.push_back(result.cells[j].metrics.accuracy);
      f1.push_back(result.cells[j].metrics.headline_f1());
      bytes.push_back(static_cast<double>(result.cells[j].comm_bytes));
    }
    const auto [am, as] = mean_std(acc);
    const auto [fm, fs] = mean_std(f1);
    const auto [bm, bs] = mean_std(bytes);
    (void)bs;
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(key.head), fmt6(key.p_miss), key.noisy, acc.size(),
                       fmt6(am), fmt6(as), fmt6(fm), fmt6(fs), fmt6(bm));
    i = j;
  }
  return out;
}

std::string report_file_name(const CellKey& key) {
  return fmt::format("{}_p{}_n{}_s{}.jsonl", to_string(key.head), fmt6(key.p_miss), key.noisy, key.seed);
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  std::filesystem::create_directories(config.output_dir);
  write_text(config.output_dir / "results.csv", results_csv(result));
  write_text(config.output_dir / "aggregated.csv", aggregated_csv(result));
  if (!config.write_reports) return;
  const auto report_dir = config.output_dir / "reports";
  for (const auto& cell : result.cells) {
    if (cell.key.head != HeadKind::Mope) continue;
    std::filesystem::create_directories(report_dir);
    std::string text;
    for (const auto& r : cell.reports) text += report_to_json(r) + "\n";
    write_text(report_dir / report_file_name(cell.key), text);
  }
}

CommReport comm_report(std::uint64_t participants, std::uint64_t samples, std::uint64_t dim,
                       std::uint64_t epochs) {
  if (participants < 2 || samples == 0 || dim == 0 || epochs == 0) {
    throw ValidationError("comm-report needs at least two participants and positive sizes");
  }
  CommReport r;
  r.end_to_end_bytes = simulate_end_to_end_cost(participants, samples, dim, epochs);
  r.single_round_bytes = single_round_cost(participants, samples, dim);
  r.ratio = static_cast<double>(r.end_to_end_bytes) / static_cast<double>(r.single_round_bytes);
  return r;
}

ContributionSummary summarize_reports(std::istream& in) {
  ContributionSummary s;
  std::string line;
  std::uint64_t line_number = 0;
  std::vector<double> gate_sum;
  std::vector<double> contribution_sum;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto report = report_from_json(line, line_number);
    std::vector<double> c;
    try {
      c = contributions(report.gates);
    } catch (const Error& e) {
      throw FormatError(std::string("bad gate vector: ") + e.what(), line_number);
    }
    if (s.samples == 0) {
      s.experts = interesting_combinations(c.size());
      gate_sum.assign(report.gates.size(), 0.0);
      contribution_sum.assign(c.size(), 0.0);
    }
    if (report.gates.size() != gate_sum.size()) {
      throw FormatError("gate vector length changes between reports", line_number);
    }
    for (std::size_t e = 0; e < gate_sum.size(); ++e) gate_sum[e] += report.gates[e];
    for (std::size_t k = 0; k < c.size(); ++k) contribution_sum[k] += c[k];
    ++s.samples;
  }
  if (s.samples == 0) throw FormatError("report contains no samples", line_number);
  const double n = static_cast<double>(s.samples);
  for (double v : gate_sum) s.mean_gates.push_back(v / n);
  for (double v : contribution_sum) s.mean_contributions.push_back(v / n);
  return s;
}

ContributionSummary summarize_report_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  return summarize_reports(in);
}

std::vector<std::filesystem::path> write_synthetic_files(const SyntheticSpec& spec,
                                                         const std::filesystem::path& out_dir) {
  const auto data = gen_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> paths;
  const std::size_t participants = data.blocks.size();
  for (std::size_t k = 0; k < participants; ++k) {
    EmbeddingFile file;
    file.participant = static_cast<std::uint32_t>(k);
    file.ids = data.ids;
    file.embeddings = data.blocks[k];
    if (k + 1 == participants) {
      file.labels.emplace();
      for (auto y : data.labels) file.labels->push_back(static_cast<std::uint32_t>(y));
    }
    auto path = out_dir / fmt::format("participant_{}.vfle", k);
    write_embedding_file(path, file);
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace vfl
