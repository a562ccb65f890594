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

// Command-line front end: gen-data, train-target, attack, evaluate, diagnose
// and run. Exit codes: 0 success, 2 invalid input, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mia/datagen.h"
#include "mia/errors.h"
#include "mia/evaluation.h"
#include "mia/experiment.h"
#include "mia/io.h"
#include "mia/report.h"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  size_t run = 0;
};

mia::ExperimentConfig Load(const CommonOptions& o) {
  mia::ExperimentConfig c = mia::LoadConfig(o.config_path);
  if (o.seed) c.master_seed = *o.seed;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  if (o.run >= c.n_runs) {
    throw mia::InvalidInputError("--run " + std::to_string(o.run) + " is outside n_runs = " +
                                 std::to_string(c.n_runs));
  }
  return c;
}

std::string RunDir(const mia::ExperimentConfig& c, size_t run) {
  return c.output_dir + "/" + mia::RunId(run);
}

void AddCommon(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Experiment config (JSON)")->required();
  cmd->add_option("--seed", o.seed, "Override master_seed");
  cmd->add_option("--out", o.out_dir, "Override output_dir");
}

int GenData(const CommonOptions& o) {
  const mia::ExperimentConfig c = Load(o);
  const mia::SnpDistributionSpec spec = mia::PopulationSpec(c);
  const mia::DatasetSplit data =
      mia::GenerateRunData(c, spec, mia::RunSeed(c.master_seed, o.run));
  const std::string dir = RunDir(c, o.run) + "/data";
  mia::SaveData(data, spec, dir);
  std::printf("wrote %s (train %zu, reference %zu, members %zu, non-members %zu)\n", dir.c_str(),
              data.train.rows(), data.reference.rows(), data.test_members.rows(),
              data.test_nonmembers.rows());
  return 0;
}

int TrainTargetCmd(const CommonOptions& o, std::string data_dir) {
  const mia::ExperimentConfig c = Load(o);
  if (data_dir.empty()) data_dir = RunDir(c, o.run) + "/data";
  const mia::BitMatrix train = mia::LoadCsv(data_dir + "/train.csv");
  const mia::SnpDistributionSpec spec =
      mia::SpecFromJson(nlohmann::json::parse(mia::ReadFile(data_dir + "/spec.json")));
  const mia::GeneratorHandle target =
      mia::TrainTarget(c, spec, train, mia::RunSeed(c.master_seed, o.run));
  const std::string dir = RunDir(c, o.run) + "/target";
  mia::SaveTarget(target, dir);
  std::printf("wrote %s\n", dir.c_str());
  return 0;
}

int AttackCmd(const CommonOptions& o, std::string target_dir, std::string reference,
              std::string members, std::string nonmembers) {
  const mia::ExperimentConfig c = Load(o);
  const std::string run_dir = RunDir(c, o.run);
  if (target_dir.empty()) target_dir = run_dir + "/target";
  if (reference.empty()) reference = run_dir + "/data/reference.csv";
  if (members.empty()) members = run_dir + "/data/members.csv";
  if (nonmembers.empty()) nonmembers = run_dir + "/data/nonmembers.csv";
  const mia::GeneratorHandle target = mia::LoadTarget(target_dir);
  const mia::Candidates cand =
      mia::MakeCandidates(mia::LoadCsv(members), mia::LoadCsv(nonmembers));
  const std::vector<mia::AttackScores> scores =
      mia::RunAttacks(c, target, mia::LoadCsv(reference), cand,
                      mia::RunSeed(c.master_seed, o.run), mia::RunId(o.run));
  mia::EnsureDirectory(run_dir);
  mia::AtomicWriteFile(run_dir + "/scores.csv", mia::FormatScoresCsv(scores));
  std::printf("wrote %s/scores.csv (%zu attacks x %zu candidates)\n", run_dir.c_str(),
              scores.size(), cand.labels.size());
  return 0;
}

int EvaluateCmd(const CommonOptions& o, std::vector<std::string> score_files) {
  const mia::ExperimentConfig c = Load(o);
  if (score_files.empty()) {
    for (size_t r = 0; r < c.n_runs; ++r) score_files.push_back(RunDir(c, r) + "/scores.csv");
  }
  std::vector<mia::AttackScores> all;
  for (const std::string& f : score_files) {
    for (auto& s : mia::ParseScoresCsv(mia::ReadFile(f))) all.push_back(std::move(s));
  }
  const mia::EvalReport report =
      mia::BuildReport(all, c.dataset, mia::MakeFprGrid(c.fpr_grid));
  mia::EmitReport(report, c.output_dir);
  std::fputs(mia::FormatResultsCsv(report).c_str(), stdout);
  return 0;
}

int DiagnoseCmd(const CommonOptions& o) {
  const mia::ExperimentConfig c = Load(o);
  const std::string run_dir = RunDir(c, o.run);
  const mia::DatasetSplit data = mia::LoadData(run_dir + "/data");
  const mia::GeneratorHandle target = mia::LoadTarget(run_dir + "/target");
  const nlohmann::json d = mia::Diagnose(c, target, data, mia::RunSeed(c.master_seed, o.run));
  mia::AtomicWriteFile(run_dir + "/diagnostics.json", d.dump(2) + "\n");
  const auto& mem = d["memorization"];
  std::printf("memorization: %zu of %zu synthetic rows are exact training copies (%.2f%%)\n",
              mem["zero_distance_count"].get<size_t>(), mem["total"].get<size_t>(),
              100.0 * mem["zero_fraction"].get<double>());
  if (d["mre_gap"].contains("gap")) {
    std::printf("mre-gap: %.6f\n", d["mre_gap"]["gap"].get<double>());
  } else {
    std::printf("mre-gap: %s\n", d["mre_gap"]["error"].get<std::string>().c_str());
  }
  if (d.contains("mmd")) {
    std::printf("mmd2: %.6g (p = %.4f)\n", d["mmd"]["mmd2_unbiased"].get<double>(),
                d["mmd"]["p_value"].get<double>());
  }
  std::printf("wrote %s/diagnostics.json\n", run_dir.c_str());
  return 0;
}

int RunCmd(const CommonOptions& o) {
  const mia::ExperimentConfig c = Load(o);
  const mia::ExperimentResult r = mia::RunExperiment(c);
  std::fputs(mia::FormatResultsCsv(r.report).c_str(), stdout);
  for (const auto& f : r.failures) {
    std::fprintf(stderr, "failure: %s %s: %s\n", f["run"].get<std::string>().c_str(),
                 f["stage"].get<std::string>().c_str(), f["error"].get<std::string>().c_str());
  }
  return r.scores.empty() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box membership inference attacks against generative models"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, attack_o, eval_o, diag_o, run_o;
  std::string train_data, attack_target, attack_ref, attack_members, attack_nonmembers;
  std::vector<std::string> eval_scores;

  auto* gen = app.add_subcommand("gen-data", "Sample a population and write the split as CSV");
  AddCommon(gen, gen_o);
  gen->add_option("--run", gen_o.run, "Run index");

  auto* train = app.add_subcommand("train-target", "Fit the target generator and persist it");
  AddCommon(train, train_o);
  train->add_option("--run", train_o.run, "Run index");
  train->add_option("--data", train_data, "Directory written by gen-data");

  auto* attack = app.add_subcommand("attack", "Score candidates against a persisted target");
  AddCommon(attack, attack_o);
  attack->add_option("--run", attack_o.run, "Run index");
  attack->add_option("--target", attack_target, "Directory written by train-target");
  attack->add_option("--reference", attack_ref, "Reference CSV");
  attack->add_option("--members", attack_members, "Member candidates CSV");
  attack->add_option("--nonmembers", attack_nonmembers, "Non-member candidates CSV");

  auto* evaluate = app.add_subcommand("evaluate", "Build the report from scores CSV files");
  AddCommon(evaluate, eval_o);
  evaluate->add_option("--scores", eval_scores, "Scores CSV files (default: every run)");

  auto* diagnose = app.add_subcommand("diagnose", "Memorization, MRE-gap, MMD and PCA checks");
  AddCommon(diagnose, diag_o);
  diagnose->add_option("--run", diag_o.run, "Run index");

  auto* run = app.add_subcommand("run", "Full pipeline over every run");
  AddCommon(run, run_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return GenData(gen_o);
    if (train->parsed()) return TrainTargetCmd(train_o, train_data);
    if (attack->parsed()) {
      return AttackCmd(attack_o, attack_target, attack_ref, attack_members, attack_nonmembers);
    }
    if (evaluate->parsed()) return EvaluateCmd(eval_o, eval_scores);
    if (diagnose->parsed()) return DiagnoseCmd(diag_o);
    if (run->parsed()) return RunCmd(run_o);
  } catch (const mia::InvalidInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const mia::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
