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

#ifndef MIA_REPORT_H_
#define MIA_REPORT_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mia/evaluation.h"

namespace mia {

struct AttackResult {
  std::string attack;
  std::string dataset;
  std::vector<double> auc_per_run;
  std::vector<std::vector<double>> tpr_per_run;  // [run][fpr grid index]
  std::vector<RocCurve> curves;
  AveragedRoc mean_curve;  // on the 200-point log grid

  bool operator==(const AttackResult&) const = default;
};

struct PcaDiagnostics {
  struct Point {
    std::string set;  // "synthetic" or "reference"
    double pc1 = 0;
    double pc2 = 0;
    bool operator==(const Point&) const = default;
  };
  std::vector<double> explained_variance;
  std::vector<Point> scatter;
  bool operator==(const PcaDiagnostics&) const = default;
};

struct EvalReport {
  std::vector<double> fpr_grid;
  std::vector<AttackResult> attacks;
  nlohmann::json metadata = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  std::optional<PcaDiagnostics> pca;

  bool operator==(const EvalReport&) const = default;
};

// The four standard FPR points plus `extra`, sorted and de-duplicated.
std::vector<double> MakeFprGrid(std::span<const double> extra = {});

AttackResult SummarizeAttack(const std::string& attack, const std::string& dataset,
                             std::vector<RocCurve> curves, std::span<const double> fpr_grid);

// Groups scores by attack name (first-seen order) and summarizes each.
EvalReport BuildReport(std::span<const AttackScores> scores, const std::string& dataset,
                       std::span<const double> fpr_grid);

nlohmann::json ReportToJson(const EvalReport& report);
EvalReport ReportFromJson(const nlohmann::json& j);

std::string FormatResultsCsv(const EvalReport& report);
std::string RenderRocSvg(const EvalReport& report);

// results.csv, results.json, roc_loglog.svg, pca_scree.csv and
// pca_top_components.csv under `out_dir` (created if missing).
void EmitReport(const EvalReport& report, const std::string& out_dir);

}  // namespace mia

#endif  // MIA_REPORT_H_
