// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// vflsim: run vertical federated learning experiments and inspect their
// communication cost and per-participant contributions.
//
// Log level comes from VFLSIM_LOG (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vflmope/error.hpp"
#include "vflmope/experiment.hpp"

namespace {

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("VFLSIM_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

int cmd_run(const std::string& config_path) {
  const auto config = vfl::load_experiment_config(config_path);
  const auto result = vfl::run_experiment(config);
  vfl::write_experiment_outputs(config, result);
  std::cout << "wrote " << result.cells.size() << " cells to " << config.output_dir.string() << "\n";
  return 0;
}

int cmd_comm_report(std::uint64_t participants, std::uint64_t samples, std::uint64_t dim,
                    std::uint64_t epochs) {
  const auto r = vfl::comm_report(participants, samples, dim, epochs);
  std::cout << "participants,samples,dim,epochs,end_to_end_bytes,single_round_bytes,ratio\n";
  std::cout << fmt::format("{},{},{},{},{},{},{:.6g}\n", participants, samples, dim, epochs, r.end_to_end_bytes,
                           r.single_round_bytes, r.ratio);
  return 0;
}

int cmd_contributions(const std::string& report_path) {
  const auto s = vfl::summarize_report_file(report_path);
  std::cout << "samples," << s.samples << "\n";
  std::cout << "expert,mean_gate\n";
  for (std::size_t e = 0; e < s.experts.size(); ++e) {
    std::cout << '"' << s.experts[e].to_string() << "\"," << fmt::format("{:.6g}", s.mean_gates[e]) << "\n";
  }
  std::cout << "participant,mean_contribution\n";
  for (std::size_t k = 0; k < s.mean_contributions.size(); ++k) {
    std::cout << k << "," << fmt::format("{:.6g}", s.mean_contributions[k]) << "\n";
  }
  return 0;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw vfl::ValidationError("cannot open spec " + spec_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw vfl::ValidationError(std::string("spec is not valid JSON: ") + e.what());
  }
  const auto paths = vfl::write_synthetic_files(vfl::parse_synthetic_spec(doc), out_dir);
  for (const auto& p : paths) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Vertical federated learning simulator (MoPE and SplitNN heads)"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment sweep from a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();

  std::uint64_t participants = 0, samples = 0, dim = 0, epochs = 0;
  auto* comm = app.add_subcommand("comm-report", "Compare end-to-end and single-round traffic");
  comm->add_option("--participants", participants, "Federation size K")->required();
  comm->add_option("--samples", samples, "Aligned samples |D|")->required();
  comm->add_option("--dim", dim, "Embedding width z")->required();
  comm->add_option("--epochs", epochs, "Training epochs")->required();

  std::string report_path;
  auto* contrib = app.add_subcommand("contributions", "Average gates and contributions of a report");
  contrib->add_option("--report", report_path, "Per-sample report (JSON lines)")->required();

  std::string spec_path, out_dir;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic federation as embedding files");
  gen->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path);
    if (*comm) return cmd_comm_report(participants, samples, dim, epochs);
    if (*contrib) return cmd_contributions(report_path);
    if (*gen) return cmd_gen_data(spec_path, out_dir);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
