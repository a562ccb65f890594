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

#include "mia/datagen.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mia/errors.h"
#include "mia/io.h"
#include "mia/math_util.h"
#include "mia/rng.h"

namespace mia {

using Eigen::Index;

SnpDistributionSpec SnpDistributionSpec::Random(size_t dimension, size_t subpopulations,
                                                uint64_t seed, double beta_a,
                                                double beta_b) {
  if (dimension == 0 || subpopulations == 0) {
    throw InvalidInputError("SnpDistributionSpec: dimension and K must be >= 1");
  }
  Rng rng(DeriveSeed(seed, "allele_frequencies"));
  Eigen::MatrixXd freq(static_cast<Index>(subpopulations), static_cast<Index>(dimension));
  for (Index k = 0; k < freq.rows(); ++k) {
    for (Index j = 0; j < freq.cols(); ++j) freq(k, j) = rng.Beta(beta_a, beta_b);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Index>(subpopulations),
                                                1.0 / static_cast<double>(subpopulations));
  return FromParameters(std::move(freq), std::move(w), seed);
}

SnpDistributionSpec SnpDistributionSpec::FromParameters(Eigen::MatrixXd frequencies,
                                                        Eigen::VectorXd mixing_weights,
                                                        uint64_t seed) {
  if (frequencies.rows() == 0 || frequencies.cols() == 0 ||
      frequencies.rows() != mixing_weights.size()) {
    throw InvalidInputError("SnpDistributionSpec: need K x d frequencies and K weights");
  }
  if ((mixing_weights.array() < 0).any() || !(mixing_weights.sum() > 0)) {
    throw InvalidInputError("SnpDistributionSpec: mixing weights must be non-negative");
  }
  SnpDistributionSpec s;
  s.dimension = static_cast<size_t>(frequencies.cols());
  s.frequencies = frequencies.cwiseMax(kMinAlleleFrequency).cwiseMin(kMaxAlleleFrequency);
  s.mixing_weights = mixing_weights / mixing_weights.sum();
  s.seed = seed;
  return s;
}

double SnpDistributionSpec::LogDensity(BitRow x) const {
  if (x.cols != dimension) throw InvalidInputError("LogDensity: dimension mismatch");
  std::vector<double> terms(subpopulations());
  for (Index k = 0; k < frequencies.rows(); ++k) {
    double lp = std::log(mixing_weights[k]);
    for (size_t j = 0; j < dimension; ++j) {
      const double p = frequencies(k, static_cast<Index>(j));
      lp += x.Get(j) ? std::log(p) : std::log1p(-p);
    }
    terms[static_cast<size_t>(k)] = lp;
  }
  return LogSumExp(terms);
}

BitMatrix SampleDistribution(const SnpDistributionSpec& spec, size_t n, uint64_t seed) {
  Rng rng(seed);
  BitMatrix out(n, spec.dimension);
  std::span<const double> weights(spec.mixing_weights.data(),
                                  static_cast<size_t>(spec.mixing_weights.size()));
  for (size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Index>(rng.Categorical(weights));
    for (size_t j = 0; j < spec.dimension; ++j) {
      out.Set(i, j, rng.Bernoulli(spec.frequencies(k, static_cast<Index>(j))));
    }
  }
  return out;
}

DatasetSplit SplitDataset(const BitMatrix& data, const SplitPlan& plan, uint64_t seed) {
  const size_t disjoint = plan.train_size + plan.reference_size + plan.test_nonmember_size;
  if (disjoint > data.rows()) {
    throw InvalidInputError("SplitDataset: plan needs " + std::to_string(disjoint) +
                            " disjoint rows, data has " + std::to_string(data.rows()));
  }
  if (plan.test_member_size > plan.train_size) {
    throw InvalidInputError("SplitDataset: test members must be drawn from train");
  }
  Rng rng(seed);
  const std::vector<size_t> perm = rng.Permutation(data.rows());
  DatasetSplit s;
  auto take = [&](size_t begin, size_t count) {
    return std::vector<size_t>(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                               perm.begin() + static_cast<std::ptrdiff_t>(begin + count));
  };
  s.train_rows = take(0, plan.train_size);
  s.reference_rows = take(plan.train_size, plan.reference_size);
  s.nonmember_rows = take(plan.train_size + plan.reference_size, plan.test_nonmember_size);
  std::vector<size_t> pick = rng.Permutation(plan.train_size);
  pick.resize(plan.test_member_size);
  for (size_t p : pick) s.member_rows.push_back(s.train_rows[p]);

  s.train = data.SelectRows(s.train_rows);
  s.reference = data.SelectRows(s.reference_rows);
  s.test_members = data.SelectRows(s.member_rows);
  s.test_nonmembers = data.SelectRows(s.nonmember_rows);
  return s;
}

std::string FormatCsv(const BitMatrix& data) {
  std::string out;
  out.reserve(data.rows() * (2 * data.cols() + 1));
  for (size_t i = 0; i < data.rows(); ++i) {
    for (size_t j = 0; j < data.cols(); ++j) {
      if (j) out.push_back(',');
      out.push_back(data.Get(i, j) ? '1' : '0');
    }
    out.push_back('\n');
  }
  return out;
}

BitMatrix ParseCsv(std::string_view text) {
  BitMatrix m;
  std::vector<int> row;
  size_t line = 0;
  size_t pos = 0;
  size_t width = 0;
  while (pos < text.size()) {
    ++line;
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view content = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
    if (content.empty()) {
      if (pos >= text.size()) break;
      throw ParseError("empty line " + std::to_string(line), line, 1);
    }
    row.clear();
    size_t col = 0;
    size_t start = 0;
    while (true) {
      ++col;
      size_t comma = content.find(',', start);
      std::string_view tok = content.substr(start, comma == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : comma - start);
      if (tok != "0" && tok != "1") {
        throw ParseError("non-binary token '" + std::string(tok) + "' at row " +
                             std::to_string(line) + " col " + std::to_string(col),
                         line, col);
      }
      row.push_back(tok == "1");
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (line == 1) {
      width = row.size();
      m = BitMatrix(0, width);
    } else if (row.size() != width) {
      throw ParseError("row " + std::to_string(line) + " has " + std::to_string(row.size()) +
                           " columns, expected " + std::to_string(width),
                       line, std::min(row.size(), width) + 1);
    }
    BitMatrix one(1, width);
    for (size_t j = 0; j < width; ++j) one.Set(0, j, row[j] == 1);
    m.AppendRow(one.Row(0));
  }
  return m;
}

void SaveCsv(const BitMatrix& data, const std::string& path) {
  AtomicWriteFile(path, FormatCsv(data));
}

BitMatrix LoadCsv(const std::string& path) { return ParseCsv(ReadFile(path)); }

}  // namespace mia
