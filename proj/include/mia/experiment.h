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

#ifndef MIA_EXPERIMENT_H_
#define MIA_EXPERIMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mia/attacks.h"
#include "mia/datagen.h"
#include "mia/generators.h"
#include "mia/nn.h"
#include "mia/report.h"

namespace mia {

struct TargetConfig {
  enum class Kind { kOracle, kVanillaGan };
  Kind kind = Kind::kVanillaGan;
  double beta = 0.5;  // oracle only
  GanConfig gan;      // vanilla_gan only

  bool operator==(const TargetConfig& o) const;
};

struct AttackSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  bool operator==(const AttackSpec&) const = default;
};

struct DiagnosticsConfig {
  bool enabled = true;
  size_t memorization_total = 100000;
  size_t memorization_batch = 3500;
  size_t mmd_sample = 200;
  size_t mmd_permutations = 199;
  size_t pca_scatter_rows = 200;
  bool operator==(const DiagnosticsConfig&) const = default;
};

// JSON schema (all keys optional; defaults are the desk-scale profile):
//   dataset, dimension, subpopulations, frequency_beta_a, frequency_beta_b,
//   split {train, reference, test_members, test_nonmembers},
//   target {kind: "oracle"|"vanilla_gan", beta, gan {...}},
//   attacks [{name, params}], detector {...}, synthetic_size, fpr_grid,
//   n_runs, master_seed, output_dir, threads, diagnostics {...}
struct ExperimentConfig {
  std::string dataset = "synthetic";
  size_t dimension = 200;
  size_t subpopulations = 3;
  double frequency_beta_a = 0.8;
  double frequency_beta_b = 0.8;
  SplitPlan split = {500, 400, 200, 200};
  TargetConfig target;
  std::vector<AttackSpec> attacks;
  TrainConfig detector;
  size_t synthetic_size = 0;  // 0: match the reference size
  std::vector<double> fpr_grid;  // added to the four standard points
  size_t n_runs = 11;
  uint64_t master_seed = 2026;
  std::string output_dir = "mia_out";
  size_t threads = 1;
  DiagnosticsConfig diagnostics;

  ExperimentConfig();
  // Throws InvalidInputError; unknown attacks are reported with the valid list.
  void Validate() const;
  size_t effective_synthetic_size() const {
    return synthetic_size ? synthetic_size : split.reference_size;
  }
  bool operator==(const ExperimentConfig& o) const;
};

const std::vector<std::string>& KnownAttackNames();

nlohmann::json ConfigToJson(const ExperimentConfig& config);
// Rejects unknown keys and validates the result.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);
// Reads the file, applies MIA_OUTPUT_DIR when set and validates.
ExperimentConfig LoadConfig(const std::string& path);

nlohmann::json SpecToJson(const SnpDistributionSpec& spec);
SnpDistributionSpec SpecFromJson(const nlohmann::json& j);

uint64_t RunSeed(uint64_t master_seed, size_t run);
SnpDistributionSpec PopulationSpec(const ExperimentConfig& config);

// Stages shared by `run` and the individual subcommands.
DatasetSplit GenerateRunData(const ExperimentConfig& config, const SnpDistributionSpec& spec,
                             uint64_t run_seed);
GeneratorHandle TrainTarget(const ExperimentConfig& config, const SnpDistributionSpec& spec,
                            const BitMatrix& train, uint64_t run_seed);
std::vector<AttackScores> RunAttacks(const ExperimentConfig& config,
                                     const GeneratorHandle& target, const BitMatrix& reference,
                                     const Candidates& candidates, uint64_t run_seed,
                                     const std::string& run_id,
                                     nlohmann::json* failures = nullptr);
nlohmann::json Diagnose(const ExperimentConfig& config, const GeneratorHandle& target,
                        const DatasetSplit& data, uint64_t run_seed,
                        PcaDiagnostics* pca = nullptr);

void SaveData(const DatasetSplit& data, const SnpDistributionSpec& spec, const std::string& dir);
DatasetSplit LoadData(const std::string& dir);
void SaveTarget(const GeneratorHandle& target, const std::string& dir);
GeneratorHandle LoadTarget(const std::string& dir);

struct ExperimentResult {
  EvalReport report;
  std::vector<AttackScores> scores;
  nlohmann::json failures = nlohmann::json::array();  // [{run, stage, error}]
};

// Runs every configured run, collecting per-run failures instead of
// aborting, and writes the report plus scores.csv and manifest.json.
ExperimentResult RunExperiment(const ExperimentConfig& config, bool write_artifacts = true);

std::string RunId(size_t run);

}  // namespace mia

#endif  // MIA_EXPERIMENT_H_
