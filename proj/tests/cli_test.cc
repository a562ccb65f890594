// Copyright 2026 The MIA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct Result {
  int status;
  std::string output;
};

Result Mia(const std::string& args) {
  const std::string cmd = std::string(MIA_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  Result r{-1, ""};
  if (!pipe) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mia_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string WriteConfig(const std::string& body) {
    const fs::path p = dir_ / "config.json";
    std::ofstream(p) << body;
    return p.string();
  }

  fs::path dir_;
};

constexpr const char* kSmall = R"({
  "dimension": 40, "subpopulations": 2,
  "split": {"train": 150, "reference": 120, "test_members": 60, "test_nonmembers": 60},
  "target": {"kind": "oracle", "beta": 0.5},
  "attacks": ["one_way", "two_way", "robust_homer", "bayes_oracle"],
  "n_runs": 1,
  "diagnostics": {"memorization_total": 5000, "memorization_batch": 1000,
                  "mmd_sample": 40, "mmd_permutations": 19}
})";

TEST_F(CliTest, MissingConfigIsValidationError) {
  const Result r = Mia("run --config /nonexistent/path.json");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("/nonexistent/path.json"), std::string::npos) << r.output;
}

TEST_F(CliTest, UnknownAttackIsValidationError) {
  const Result r = Mia("run --config " + WriteConfig(R"({"attacks": ["nope"]})"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("valid attacks"), std::string::npos) << r.output;
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Mia("").status, 2);
  EXPECT_EQ(Mia("frobnicate").status, 2);
  EXPECT_EQ(Mia("run").status, 2);
  EXPECT_EQ(Mia("gen-data --run 5 --config " + WriteConfig(kSmall)).status, 2);
}

TEST_F(CliTest, MissingArtifactIsRuntimeError) {
  const Result r = Mia("attack --config " + WriteConfig(kSmall) + " --out " + (dir_ / "empty").string());
  EXPECT_EQ(r.status, 1) << r.output;
}

TEST_F(CliTest, StagedPipelineMatchesRun) {
  const std::string cfg = WriteConfig(kSmall);
  const std::string staged = (dir_ / "staged").string(), whole = (dir_ / "whole").string();
  for (const char* sub : {"gen-data", "train-target", "attack", "evaluate"}) {
    const Result r = Mia(std::string(sub) + " --config " + cfg + " --out " + staged);
    ASSERT_EQ(r.status, 0) << sub << ": " << r.output;
  }
  const Result r = Mia("run --config " + cfg + " --out " + whole);
  ASSERT_EQ(r.status, 0) << r.output;
  ASSERT_TRUE(fs::exists(fs::path(staged) / "results.csv"));
  EXPECT_EQ(ReadAll(fs::path(staged) / "results.csv"), ReadAll(fs::path(whole) / "results.csv"));
  EXPECT_EQ(ReadAll(fs::path(staged) / "run_0" / "scores.csv"), ReadAll(fs::path(whole) / "scores.csv"));
  for (const char* f : {"results.json", "roc_loglog.svg", "pca_scree.csv", "pca_top_components.csv",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(whole) / f)) << f;
  }
}

TEST_F(CliTest, DiagnoseReportsFullMemorization) {
  const std::string cfg = WriteConfig(R"({
    "dimension": 30, "split": {"train": 80, "reference": 60, "test_members": 30, "test_nonmembers": 30},
    "target": {"kind": "oracle", "beta": 1.0}, "attacks": ["one_way"], "n_runs": 1,
    "diagnostics": {"memorization_total": 4000, "memorization_batch": 1000,
                    "mmd_sample": 30, "mmd_permutations": 9}})");
  const std::string out = (dir_ / "out").string();
  ASSERT_EQ(Mia("gen-data --config " + cfg + " --out " + out).status, 0);
  ASSERT_EQ(Mia("train-target --config " + cfg + " --out " + out).status, 0);
  const Result r = Mia("diagnose --config " + cfg + " --out " + out);
  ASSERT_EQ(r.status, 0) << r.output;
  const std::string diag = ReadAll(fs::path(out) / "run_0" / "diagnostics.json");
  EXPECT_NE(diag.find("\"zero_fraction\": 1.0"), std::string::npos) << diag;
}

TEST_F(CliTest, SeedOverrideChangesScores) {
  const std::string cfg = WriteConfig(kSmall);
  const std::string a = (dir_ / "a").string(), b = (dir_ / "b").string(), c = (dir_ / "c").string();
  ASSERT_EQ(Mia("run --config " + cfg + " --out " + a).status, 0);
  ASSERT_EQ(Mia("run --config " + cfg + " --out " + b + " --seed 7").status, 0);
  ASSERT_EQ(Mia("run --config " + cfg + " --out " + c + " --seed 7").status, 0);
  EXPECT_NE(ReadAll(fs::path(a) / "scores.csv"), ReadAll(fs::path(b) / "scores.csv"));
  EXPECT_EQ(ReadAll(fs::path(b) / "scores.csv"), ReadAll(fs::path(c) / "scores.csv"));
}

}  // namespace
