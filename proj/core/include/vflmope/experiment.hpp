// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind the vflsim tool: sweeps heads x p_miss x noisy
// count x seed, writes per-cell and seed-aggregated CSVs plus per-sample
// MoPE reports.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vflmope/dataio.hpp"
#include "vflmope/federation.hpp"
#include "vflmope/heads.hpp"
#include "vflmope/mope.hpp"
#include "vflmope/training.hpp"

namespace vfl {

struct ExperimentConfig {
  /// Exactly one of `synthetic` / `embedding_files` is set.
  std::optional<SyntheticSpec> synthetic;
  std::vector<std::filesystem::path> embedding_files;
  /// Train/test split for file-based data.
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;

  std::vector<HeadKind> heads;
  std::vector<double> p_miss;
  std::vector<std::size_t> noisy;
  std::vector<std::uint64_t> seeds;

  TrainConfig train;
  MopeOptions mope;
  NoiseConfig noise;

  std::filesystem::path output_dir = "results";
  bool write_reports = true;
  std::size_t threads = 1;
};

/// Parses and validates a config document. Throws ValidationError listing
/// every offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec parse_synthetic_spec(const nlohmann::json& doc);

struct CellKey {
  HeadKind head = HeadKind::Mope;
  double p_miss = 0.0;
  std::size_t noisy = 0;
  std::uint64_t seed = 0;
};

struct CellResult {
  CellKey key;
  MetricReport metrics;
  std::uint64_t comm_bytes = 0;
  /// Test-set reports; MoPE cells only.
  std::vector<SampleReport> reports;
};

struct ExperimentResult {
  /// Canonical order: head, then p_miss, then noisy, then seed (config order).
  std::vector<CellResult> cells;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// head,p_miss,noisy,seed,accuracy,f1,comm_bytes
std::string results_csv(const ExperimentResult& result);

/// head,p_miss,noisy,runs,accuracy_mean,accuracy_std,f1_mean,f1_std,comm_bytes_mean
/// Standard deviations use the n-1 denominator (0 for a single run).
std::string aggregated_csv(const ExperimentResult& result);

/// File name of a cell's per-sample report, relative to the output dir.
std::string report_file_name(const CellKey& key);

/// Writes results.csv, aggregated.csv and reports/*.jsonl.
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result);

struct CommReport {
  std::uint64_t end_to_end_bytes = 0;
  std::uint64_t single_round_bytes = 0;
  double ratio = 0.0;
};

CommReport comm_report(std::uint64_t participants, std::uint64_t samples, std::uint64_t dim,
                       std::uint64_t epochs);

struct ContributionSummary {
  std::size_t samples = 0;
  /// Canonical expert order.
  std::vector<AlignmentSet> experts;
  std::vector<double> mean_gates;
  std::vector<double> mean_contributions;
};

/// Averages a newline-delimited JSON report stream. Throws FormatError.
ContributionSummary summarize_reports(std::istream& in);
ContributionSummary summarize_report_file(const std::filesystem::path& path);

/// Generates a synthetic federation and writes participant_<k>.vfle files;
/// the active participant's file carries the labels. Returns the paths.
std::vector<std::filesystem::path> write_synthetic_files(const SyntheticSpec& spec,
                                                         const std::filesystem::path& out_dir);

}  // namespace vfl
