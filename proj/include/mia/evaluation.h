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

#ifndef MIA_EVALUATION_H_
#define MIA_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mia/bit_matrix.h"
#include "mia/generators.h"

namespace mia {

struct AttackScores {
  std::string attack;
  std::string run_id;
  std::vector<double> scores;
  std::vector<int> labels;  // 1 = member, 0 = non-member

  void Validate() const;
  bool operator==(const AttackScores&) const = default;
};

// CSV columns: run_id,attack,candidate_index,label,score (17 significant
// digits), with a header row.
std::string FormatScoresCsv(std::span<const AttackScores> scores);
std::vector<AttackScores> ParseScoresCsv(std::string_view text);

// Empirical ROC as a step function over distinct thresholds. Point 0 is
// (0, 0); point i > 0 accepts every candidate scoring >= thresholds[i - 1].
// Tied scores form one threshold, so ties appear as diagonal segments.
// Cumulative masses are kept unnormalized so AUC can be formed exactly.
struct RocCurve {
  std::vector<double> thresholds;  // descending, size = points - 1
  std::vector<double> tp_mass;     // cumulative member mass per point
  std::vector<double> fp_mass;     // cumulative non-member mass per point
  double member_total = 0;
  double nonmember_total = 0;

  size_t size() const { return tp_mass.size(); }
  double fpr(size_t i) const { return fp_mass[i] / nonmember_total; }
  double tpr(size_t i) const { return tp_mass[i] / member_total; }
  bool operator==(const RocCurve&) const = default;
};

RocCurve BuildRoc(const AttackScores& scores);
// ROC over a weighted population: each score carries a member mass and a
// non-member mass (used for exact curves over an enumerated domain).
RocCurve WeightedRoc(std::span<const double> scores, std::span<const double> member_mass,
                     std::span<const double> nonmember_mass);

// Trapezoidal area; equals the Mann-Whitney U statistic with ties at 1/2.
double Auc(const RocCurve& curve);
// Max TPR over thresholds whose FPR <= target; no interpolation.
double TprAtFpr(const RocCurve& curve, double target_fpr);
// Piecewise-linear TPR at an arbitrary FPR (randomized-threshold semantics).
double InterpolatedTpr(const RocCurve& curve, double fpr);

inline const std::vector<double>& StandardFprGrid() {
  static const std::vector<double> grid = {0.001, 0.005, 0.01, 0.1};
  return grid;
}

std::vector<double> LogSpacedGrid(size_t points = 200, double lo = 1e-3, double hi = 1.0);

struct AveragedRoc {
  std::vector<double> fpr;
  std::vector<double> mean_tpr;
  std::vector<double> stderr_tpr;
  bool operator==(const AveragedRoc&) const = default;
};

// Vertical averaging of per-run TprAtFpr values on `fpr_grid`.
AveragedRoc AverageRuns(std::span<const RocCurve> curves, std::span<const double> fpr_grid);
AveragedRoc AverageRuns(std::span<const RocCurve> curves);

struct MemorizationReport {
  size_t total = 0;
  size_t zero_distance_count = 0;
  std::vector<size_t> histogram;            // index = min Hamming distance to train
  std::vector<size_t> reference_histogram;  // same, against X_R (empty if absent)
  double zero_fraction() const {
    return total ? static_cast<double>(zero_distance_count) / static_cast<double>(total) : 0.0;
  }
};

// Draws `total` synthetic rows in batches and records each row's minimum
// Hamming distance to the training set (and to `reference` when given).
MemorizationReport MemorizationCheck(const Sampler& generator, const BitMatrix& train,
                                     size_t total, size_t batch_size, uint64_t seed,
                                     const BitMatrix* reference = nullptr);

struct MreGapResult {
  double mre_train = 0;
  double mre_reference = 0;
  double gap = 0;
};

// (MRE_ref - MRE_train) / MRE_ref; throws NumericalError when MRE_ref == 0.
double MreGapFromMedians(double mre_reference, double mre_train);
// Median over rows of the minimum squared distance to the synthetic sample.
MreGapResult MreGap(const BitMatrix& synthetic, const BitMatrix& train,
                    const BitMatrix& reference);

struct Kernel {
  enum class Kind { kLinear, kRbf };
  Kind kind = Kind::kLinear;
  double bandwidth = 1.0;  // rbf: exp(-|x - y|^2 / (2 bandwidth^2))

  static Kernel Linear() { return {Kind::kLinear, 1.0}; }
  static Kernel Rbf(double bandwidth) { return {Kind::kRbf, bandwidth}; }
  double operator()(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const;
};

// Median pairwise Euclidean distance over the pooled rows (subsampled
// deterministically to at most 1000 rows).
double MedianHeuristicBandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Unbiased U-statistic estimate of MMD^2; may be negative.
double Mmd2Unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Kernel& kernel);

// (1 + #{permuted MMD^2 >= observed}) / (permutations + 1). Permutation i
// uses an RNG seeded from (seed, i), so results do not depend on `threads`.
double PermutationPValue(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const Kernel& kernel, size_t permutations, uint64_t seed,
                         size_t threads = 1);

}  // namespace mia

#endif  // MIA_EVALUATION_H_
