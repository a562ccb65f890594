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

#ifndef MIA_DATAGEN_H_
#define MIA_DATAGEN_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mia/bit_matrix.h"

namespace mia {

inline constexpr double kMinAlleleFrequency = 0.01;
inline constexpr double kMaxAlleleFrequency = 0.99;

// Product-Bernoulli mixture over {0,1}^d: K subpopulations, each with its own
// per-site allele frequencies.
struct SnpDistributionSpec {
  size_t dimension = 0;
  Eigen::MatrixXd frequencies;     // K x d, clamped to [0.01, 0.99]
  Eigen::VectorXd mixing_weights;  // K, sums to 1
  uint64_t seed = 0;

  size_t subpopulations() const { return static_cast<size_t>(frequencies.rows()); }

  // Frequencies ~ Beta(a, b), uniform mixing weights.
  static SnpDistributionSpec Random(size_t dimension, size_t subpopulations,
                                    uint64_t seed, double beta_a = 0.8,
                                    double beta_b = 0.8);
  // Explicit parameters; frequencies are clamped and weights normalized.
  static SnpDistributionSpec FromParameters(Eigen::MatrixXd frequencies,
                                            Eigen::VectorXd mixing_weights,
                                            uint64_t seed = 0);

  // log P(x), marginalized over subpopulations.
  double LogDensity(BitRow x) const;

  bool operator==(const SnpDistributionSpec& o) const {
    return dimension == o.dimension && seed == o.seed && frequencies == o.frequencies &&
           mixing_weights == o.mixing_weights;
  }
};

// Rows i.i.d.: subpopulation k ~ weights, then site j ~ Bernoulli(freq[k][j]).
BitMatrix SampleDistribution(const SnpDistributionSpec& spec, size_t n, uint64_t seed);

struct SplitPlan {
  size_t train_size = 3000;
  size_t reference_size = 2008;
  size_t test_member_size = 500;
  size_t test_nonmember_size = 500;
};

struct DatasetSplit {
  BitMatrix train;
  BitMatrix reference;
  BitMatrix test_members;
  BitMatrix test_nonmembers;
  // Row indices into the source matrix, for audit.
  std::vector<size_t> train_rows, reference_rows, member_rows, nonmember_rows;
};

// Train, reference and non-member rows are disjoint; members are a random
// subset of train. Requires train + reference + non-members <= data.rows().
DatasetSplit SplitDataset(const BitMatrix& data, const SplitPlan& plan, uint64_t seed);

// Comma-separated 0/1 tokens, one row per line, no header, LF endings and a
// trailing newline. An empty file is an empty (0-row) matrix.
std::string FormatCsv(const BitMatrix& data);
BitMatrix ParseCsv(std::string_view text);
void SaveCsv(const BitMatrix& data, const std::string& path);
BitMatrix LoadCsv(const std::string& path);

}  // namespace mia

#endif  // MIA_DATAGEN_H_
