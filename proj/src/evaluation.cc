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

#include "mia/evaluation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "mia/attacks.h"
#include "mia/errors.h"
#include "mia/io.h"
#include "mia/math_util.h"
#include "mia/rng.h"

namespace mia {

using Eigen::Index;
using Eigen::MatrixXd;

void AttackScores::Validate() const {
  if (scores.size() != labels.size()) {
    throw InvalidInputError("AttackScores: " + std::to_string(scores.size()) + " scores but " +
                            std::to_string(labels.size()) + " labels");
  }
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericalError("AttackScores(" + attack + "): non-finite score at index " +
                           std::to_string(i));
    }
    if (labels[i] != 0 && labels[i] != 1) throw InvalidInputError("AttackScores: labels must be 0/1");
  }
}

std::string FormatScoresCsv(std::span<const AttackScores> scores) {
  std::string out = "run_id,attack,candidate_index,label,score\n";
  for (const auto& s : scores) {
    s.Validate();
    for (size_t i = 0; i < s.scores.size(); ++i) {
      out += s.run_id + "," + s.attack + "," + std::to_string(i) + "," +
             std::to_string(s.labels[i]) + "," + FormatDouble(s.scores[i]) + "\n";
    }
  }
  return out;
}

std::vector<AttackScores> ParseScoresCsv(std::string_view text) {
  std::vector<AttackScores> out;
  size_t pos = 0;
  size_t line = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view row = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (line == 1) {
      if (row != "run_id,attack,candidate_index,label,score") {
        throw ParseError("scores CSV: unexpected header", 1, 1);
      }
      continue;
    }
    if (row.empty()) continue;
    std::vector<std::string> f;
    size_t start = 0;
    while (true) {
      const size_t c = row.find(',', start);
      f.emplace_back(row.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
    if (f.size() != 5) throw ParseError("scores CSV: expected 5 fields", line, f.size());
    if (out.empty() || out.back().run_id != f[0] || out.back().attack != f[1]) {
      out.push_back({f[1], f[0], {}, {}});
    }
    auto& s = out.back();
    try {
      if (std::stoull(f[2]) != s.scores.size()) {
        throw ParseError("scores CSV: candidate_index out of order", line, 3);
      }
      s.labels.push_back(std::stoi(f[3]));
      s.scores.push_back(std::stod(f[4]));
    } catch (const std::logic_error&) {
      throw ParseError("scores CSV: malformed number", line, 1);
    }
  }
  for (const auto& s : out) s.Validate();
  return out;
}

RocCurve WeightedRoc(std::span<const double> scores, std::span<const double> member_mass,
                     std::span<const double> nonmember_mass) {
  if (scores.size() != member_mass.size() || scores.size() != nonmember_mass.size()) {
    throw InvalidInputError("ROC: scores and masses must have equal length");
  }
  RocCurve c;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidInputError("ROC: non-finite score");
    c.member_total += member_mass[i];
    c.nonmember_total += nonmember_mass[i];
  }
  if (!(c.member_total > 0) || !(c.nonmember_total > 0)) {
    throw InvalidInputError("ROC: both members and non-members are required");
  }
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  c.tp_mass.push_back(0);
  c.fp_mass.push_back(0);
  double tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += member_mass[order[i]];
      fp += nonmember_mass[order[i]];
      ++i;
    }
    c.thresholds.push_back(s);
    c.tp_mass.push_back(tp);
    c.fp_mass.push_back(fp);
  }
  // Accumulated masses can drift from the totals by rounding; pin the end.
  c.tp_mass.back() = c.member_total;
  c.fp_mass.back() = c.nonmember_total;
  return c;
}

RocCurve BuildRoc(const AttackScores& scores) {
  scores.Validate();
  std::vector<double> member(scores.labels.size()), nonmember(scores.labels.size());
  for (size_t i = 0; i < scores.labels.size(); ++i) {
    member[i] = scores.labels[i] == 1 ? 1.0 : 0.0;
    nonmember[i] = 1.0 - member[i];
  }
  return WeightedRoc(scores.scores, member, nonmember);
}

double Auc(const RocCurve& curve) {
  double area2 = 0;
  for (size_t i = 1; i < curve.size(); ++i) {
    area2 += (curve.fp_mass[i] - curve.fp_mass[i - 1]) * (curve.tp_mass[i] + curve.tp_mass[i - 1]);
  }
  return area2 / (2.0 * curve.member_total * curve.nonmember_total);
}

double TprAtFpr(const RocCurve& curve, double target_fpr) {
  if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) {
    throw InvalidInputError("TprAtFpr: target must lie in [0, 1]");
  }
  double best = 0;
  for (size_t i = 0; i < curve.size(); ++i) {
    if (curve.fp_mass[i] <= target_fpr * curve.nonmember_total * (1 + 1e-12)) {
      best = std::max(best, curve.tpr(i));
    }
  }
  return best;
}

double InterpolatedTpr(const RocCurve& curve, double fpr) {
  const double target = fpr * curve.nonmember_total;
  double best = 0;
  for (size_t i = 0; i < curve.size(); ++i) {
    if (curve.fp_mass[i] <= target) best = std::max(best, curve.tp_mass[i]);
    if (i > 0 && curve.fp_mass[i - 1] < target && target < curve.fp_mass[i]) {
      const double t = (target - curve.fp_mass[i - 1]) / (curve.fp_mass[i] - curve.fp_mass[i - 1]);
      best = std::max(best, curve.tp_mass[i - 1] + t * (curve.tp_mass[i] - curve.tp_mass[i - 1]));
    }
  }
  return best / curve.member_total;
}

std::vector<double> LogSpacedGrid(size_t points, double lo, double hi) {
  if (points < 2 || !(lo > 0) || !(hi > lo)) throw InvalidInputError("LogSpacedGrid: bad range");
  std::vector<double> g(points);
  const double a = std::log10(lo), b = std::log10(hi);
  for (size_t i = 0; i < points; ++i) {
    g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

AveragedRoc AverageRuns(std::span<const RocCurve> curves, std::span<const double> fpr_grid) {
  if (curves.empty()) throw InvalidInputError("AverageRuns: no curves");
  AveragedRoc out;
  out.fpr.assign(fpr_grid.begin(), fpr_grid.end());
  std::vector<double> vals(curves.size());
  for (double f : fpr_grid) {
    for (size_t r = 0; r < curves.size(); ++r) vals[r] = TprAtFpr(curves[r], f);
    const MeanStderr ms = MeanAndStderr(vals);
    out.mean_tpr.push_back(ms.mean);
    out.stderr_tpr.push_back(ms.standard_error);
  }
  return out;
}

AveragedRoc AverageRuns(std::span<const RocCurve> curves) {
  const std::vector<double> grid = LogSpacedGrid();
  return AverageRuns(curves, grid);
}

MemorizationReport MemorizationCheck(const Sampler& generator, const BitMatrix& train,
                                     size_t total, size_t batch_size, uint64_t seed,
                                     const BitMatrix* reference) {
  if (train.empty()) throw InvalidInputError("MemorizationCheck: empty training set");
  if (batch_size == 0) throw InvalidInputError("MemorizationCheck: batch_size must be >= 1");
  MemorizationReport rep;
  rep.histogram.assign(train.cols() + 1, 0);
  if (reference) rep.reference_histogram.assign(train.cols() + 1, 0);
  for (size_t batch = 0; rep.total < total; ++batch) {
    const size_t n = std::min(batch_size, total - rep.total);
    const BitMatrix s = generator.Sample(n, DeriveSeed(seed, "memorization", batch));
    for (size_t i = 0; i < s.rows(); ++i) {
      const size_t h = MinHammingDistance(s.Row(i), train);
      ++rep.histogram[h];
      if (h == 0) ++rep.zero_distance_count;
      if (reference) ++rep.reference_histogram[MinHammingDistance(s.Row(i), *reference)];
    }
    rep.total += n;
  }
  return rep;
}

double MreGapFromMedians(double mre_reference, double mre_train) {
  if (mre_reference == 0) {
    throw NumericalError("MRE-gap undefined: reference median recovery error is zero");
  }
  return (mre_reference - mre_train) / mre_reference;
}

MreGapResult MreGap(const BitMatrix& synthetic, const BitMatrix& train,
                    const BitMatrix& reference) {
  auto mre = [&](const BitMatrix& rows) {
    std::vector<double> d(rows.rows());
    // Squared Euclidean distance between bit rows is the Hamming distance.
    for (size_t i = 0; i < rows.rows(); ++i) {
      d[i] = static_cast<double>(MinHammingDistance(rows.Row(i), synthetic));
    }
    return Median(std::move(d));
  };
  if (train.empty() || reference.empty()) throw InvalidInputError("MreGap: empty input");
  MreGapResult r;
  r.mre_train = mre(train);
  r.mre_reference = mre(reference);
  r.gap = MreGapFromMedians(r.mre_reference, r.mre_train);
  return r;
}

double Kernel::operator()(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
  if (kind == Kind::kLinear) return a.dot(b);
  return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
}

namespace {

MatrixXd KernelMatrix(const MatrixXd& z, const Kernel& k) {
  const Index n = z.rows();
  MatrixXd gram = z * z.transpose();
  if (k.kind == Kernel::Kind::kLinear) return gram;
  const Eigen::VectorXd sq = gram.diagonal();
  const double inv = 1.0 / (2.0 * k.bandwidth * k.bandwidth);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      gram(i, j) = std::exp(-std::max(0.0, sq[i] + sq[j] - 2.0 * gram(i, j)) * inv);
    }
  }
  return gram;
}

// MMD^2 for the split "is_x[i]" over a precomputed pooled kernel matrix.
double Mmd2FromKernel(const MatrixXd& km, const std::vector<char>& is_x) {
  double sxx = 0, syy = 0, sxy = 0;
  double m = 0, n = 0;
  const Index total = km.rows();
  for (Index i = 0; i < total; ++i) (is_x[static_cast<size_t>(i)] ? m : n) += 1;
  for (Index i = 0; i < total; ++i) {
    const bool xi = is_x[static_cast<size_t>(i)];
    for (Index j = 0; j < total; ++j) {
      if (i == j) continue;
      const bool xj = is_x[static_cast<size_t>(j)];
      if (xi && xj) sxx += km(i, j);
      else if (!xi && !xj) syy += km(i, j);
      else if (xi) sxy += km(i, j);
    }
  }
  return sxx / (m * (m - 1)) + syy / (n * (n - 1)) - 2.0 * sxy / (m * n);
}

MatrixXd Pool(const MatrixXd& x, const MatrixXd& y) {
  if (x.cols() != y.cols()) throw InvalidInputError("MMD: column counts differ");
  MatrixXd z(x.rows() + y.rows(), x.cols());
  z << x, y;
  return z;
}

}  // namespace

double MedianHeuristicBandwidth(const MatrixXd& x, const MatrixXd& y) {
  MatrixXd z = Pool(x, y);
  constexpr Index kMaxRows = 1000;
  if (z.rows() > kMaxRows) {
    Rng rng(DeriveSeed(0, "median_heuristic"));
    std::vector<size_t> p = rng.Permutation(static_cast<size_t>(z.rows()));
    MatrixXd sub(kMaxRows, z.cols());
    for (Index i = 0; i < kMaxRows; ++i) sub.row(i) = z.row(static_cast<Index>(p[static_cast<size_t>(i)]));
    z = std::move(sub);
  }
  std::vector<double> d;
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = i + 1; j < z.rows(); ++j) d.push_back((z.row(i) - z.row(j)).norm());
  }
  const double med = Median(std::move(d));
  return med > 0 ? med : 1.0;
}

double Mmd2Unbiased(const MatrixXd& x, const MatrixXd& y, const Kernel& kernel) {
  if (x.rows() < 2 || y.rows() < 2) throw InvalidInputError("MMD: need at least 2 rows per sample");
  std::vector<char> is_x(static_cast<size_t>(x.rows() + y.rows()), 0);
  std::fill(is_x.begin(), is_x.begin() + x.rows(), 1);
  return Mmd2FromKernel(KernelMatrix(Pool(x, y), kernel), is_x);
}

double PermutationPValue(const MatrixXd& x, const MatrixXd& y, const Kernel& kernel,
                         size_t permutations, uint64_t seed, size_t threads) {
  if (x.rows() < 2 || y.rows() < 2) throw InvalidInputError("MMD: need at least 2 rows per sample");
  const MatrixXd km = KernelMatrix(Pool(x, y), kernel);
  const size_t total = static_cast<size_t>(km.rows());
  const size_t m = static_cast<size_t>(x.rows());
  std::vector<char> is_x(total, 0);
  std::fill(is_x.begin(), is_x.begin() + static_cast<std::ptrdiff_t>(m), 1);
  const double observed = Mmd2FromKernel(km, is_x);

  std::vector<char> exceed(permutations, 0);
  auto work = [&](size_t begin, size_t end) {
    std::vector<char> lab(total);
    for (size_t p = begin; p < end; ++p) {
      Rng rng(DeriveSeed(seed, "permutation", p));
      const std::vector<size_t> perm = rng.Permutation(total);
      std::fill(lab.begin(), lab.end(), 0);
      for (size_t i = 0; i < m; ++i) lab[perm[i]] = 1;
      exceed[p] = Mmd2FromKernel(km, lab) >= observed;
    }
  };
  threads = std::max<size_t>(1, std::min(threads, permutations));
  if (threads == 1) {
    work(0, permutations);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (permutations + threads - 1) / threads;
    for (size_t t = 0; t < threads; ++t) {
      pool.emplace_back(work, t * chunk, std::min(permutations, (t + 1) * chunk));
    }
    for (auto& th : pool) th.join();
  }
  const size_t count = static_cast<size_t>(std::count(exceed.begin(), exceed.end(), 1));
  return static_cast<double>(1 + count) / static_cast<double>(permutations + 1);
}

}  // namespace mia
