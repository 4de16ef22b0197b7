// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// Drives the vflsim binary end to end.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

#ifndef VFLSIM_PATH
#error "VFLSIM_PATH must point at the vflsim executable"
#endif

namespace {

struct Outcome {
  int status = -1;
  std::string out;
};

Outcome vflsim(const std::string& args) {
  const std::string cmd = std::string(VFLSIM_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return o;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

void write(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

// Value column of a "key,value" line in contributions output.
double lookup(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + ",", 0) == 0) return std::stod(line.substr(key.size() + 1));
  }
  ADD_FAILURE() << key << " not found in:\n" << out;
  return -1.0;
}

TEST(Cli, CommReportPrintsClosedForm) {
  const auto o = vflsim("comm-report --participants 2 --samples 25000 --dim 384 --epochs 100");
  ASSERT_EQ(o.status, 0) << o.out;
  EXPECT_NE(o.out.find("2,25000,384,100,7680000000,38400000,200"), std::string::npos) << o.out;
  const auto small = vflsim("comm-report --participants 3 --samples 10 --dim 4 --epochs 1");
  EXPECT_NE(small.out.find("3,10,4,1,640,320,2"), std::string::npos) << small.out;
}

TEST(Cli, BadArgumentsFail) {
  EXPECT_NE(vflsim("").status, 0);
  EXPECT_NE(vflsim("comm-report --participants 2").status, 0);
  EXPECT_NE(vflsim("comm-report --participants 1 --samples 1 --dim 1 --epochs 1").status, 0);
  EXPECT_NE(vflsim("run --config /nonexistent/config.json").status, 0);
}

TEST(Cli, InvalidConfigNamesFields) {
  vfl::testing::ScratchDir dir("cli_bad");
  const auto cfg = dir.path() / "bad.json";
  write(cfg, R"({"data": {"synthetic": {"dims": [2, 2], "separation": [1, 1]}},
                 "heads": ["mope", "nope"], "p_miss": [2.0], "seeds": [0]})");
  const auto o = vflsim("run --config " + cfg.string());
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.out.find("heads"), std::string::npos) << o.out;
  EXPECT_NE(o.out.find("p_miss"), std::string::npos) << o.out;
}

TEST(Cli, GenDataThenRunFromFiles) {
  vfl::testing::ScratchDir dir("cli_files");
  write(dir.path() / "spec.json",
        R"({"classes": 2, "samples": 200, "dims": [3, 3], "separation": [1.5, 1.5], "seed": 4})");
  const auto gen = vflsim("gen-data --spec " + (dir.path() / "spec.json").string() + " --out " +
                          (dir.path() / "data").string());
  ASSERT_EQ(gen.status, 0) << gen.out;
  ASSERT_TRUE(std::filesystem::exists(dir.path() / "data" / "participant_1.vfle"));

  const auto out = dir.path() / "out";
  write(dir.path() / "run.json", R"({"data": {"files": [")" + (dir.path() / "data" / "participant_0.vfle").string() +
                                      R"(", ")" + (dir.path() / "data" / "participant_1.vfle").string() +
                                      R"("]}, "heads": ["mope", "splitnn-mean"], "p_miss": [0.5],
                                      "seeds": [0], "train": {"epochs": 2}, "output_dir": ")" +
                                      out.string() + R"("})");
  const auto run = vflsim("run --config " + (dir.path() / "run.json").string());
  ASSERT_EQ(run.status, 0) << run.out;
  const auto csv = vfl::testing::slurp(out / "results.csv");
  EXPECT_NE(csv.find("\nmope,0.5,0,0,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\nsplitnn-mean,0.5,0,0,"), std::string::npos) << csv;

  const auto report = out / "reports" / "mope_p0.5_n0_s0.jsonl";
  const auto c = vflsim("contributions --report " + report.string());
  ASSERT_EQ(c.status, 0) << c.out;
  EXPECT_DOUBLE_EQ(lookup(c.out, "samples"), 40.0);
  EXPECT_DOUBLE_EQ(lookup(c.out, "1"), 1.0);
}

TEST(Cli, MalformedReportFails) {
  vfl::testing::ScratchDir dir("cli_report");
  write(dir.path() / "r.jsonl", "{\"sample_id\": 0}\n");
  const auto o = vflsim("contributions --report " + (dir.path() / "r.jsonl").string());
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.out.find("line"), std::string::npos);
}

// A trained clean two-party run routes almost everything through the {P,A}
// expert when the passive block is informative.
TEST(Cli, CleanRunFavoursFullExpert) {
  vfl::testing::ScratchDir dir("cli_gates");
  const auto out = dir.path() / "out";
  write(dir.path() / "run.json",
        R"({"data": {"synthetic": {"classes": 10, "samples": 5000, "dims": [16, 16],
                                   "separation": [2.0, 2.0], "within_std": 1.0, "seed": 7}},
            "heads": ["mope"], "p_miss": [0.0], "seeds": [0],
            "train": {"epochs": 30, "batch": 25, "lr": 0.0001}, "output_dir": ")" +
            out.string() + R"("})");
  ASSERT_EQ(vflsim("run --config " + (dir.path() / "run.json").string()).status, 0);
  const auto c = vflsim("contributions --report " + (out / "reports" / "mope_p0_n0_s0.jsonl").string());
  ASSERT_EQ(c.status, 0) << c.out;
  EXPECT_LE(lookup(c.out, "\"{1}\""), 0.1);
  EXPECT_GE(lookup(c.out, "\"{0,1}\""), 0.9);
}

}  // namespace
