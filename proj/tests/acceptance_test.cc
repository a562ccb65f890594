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

// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if
// any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_check.h"
#include "mia/attacks.h"
#include "mia/datagen.h"
#include "mia/density.h"
#include "mia/evaluation.h"
#include "mia/experiment.h"
#include "mia/generators.h"
#include "mia/math_util.h"
#include "mia/report.h"
#include "mia/rng.h"

namespace {

using namespace mia;
namespace fs = std::filesystem;
using Eigen::MatrixXd;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BitMatrix AllPoints(size_t d) {
  BitMatrix m(size_t{1} << d, d);
  for (size_t x = 0; x < m.rows(); ++x) {
    for (size_t j = 0; j < d; ++j) m.Set(x, j, (x >> j) & 1U);
  }
  return m;
}

std::vector<double> UnionFprs(const RocCurve& a, const RocCurve& b) {
  std::vector<double> f;
  for (size_t i = 0; i < a.size(); ++i) f.push_back(a.fpr(i));
  for (size_t i = 0; i < b.size(); ++i) f.push_back(b.fpr(i));
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

// Hanley-McNeil standard error of an empirical AUC.
double AucStandardError(double a, double m, double n) {
  const double q1 = a / (2 - a), q2 = 2 * a * a / (1 + a);
  const double v = (a * (1 - a) + (m - 1) * (q1 - a * a) + (n - 1) * (q2 - a * a)) / (m * n);
  return std::sqrt(std::max(0.0, v));
}

Outcome ExactOptimality() {
  const size_t d = 10;
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(d, 1, 101);
  const BitMatrix train = SampleDistribution(spec, 32, 102);
  const OracleMixtureGenerator g(0.5, train, spec);

  AttackContext ctx;
  ctx.synthetic = g.Sample(200, 103);
  ctx.reference = SampleDistribution(spec, 200, 104);
  ctx.seed = 105;

  const BitMatrix points = AllPoints(d);
  std::vector<double> mass_g, mass_p;
  for (size_t x = 0; x < points.rows(); ++x) {
    mass_g.push_back(g.DensityG(points.Row(x)));
    mass_p.push_back(g.DensityP(points.Row(x)));
  }

  std::vector<std::unique_ptr<MembershipScorer>> scorers;
  scorers.push_back(std::make_unique<OneWayAttack>(ctx, Metric::kHamming));
  scorers.push_back(std::make_unique<OneWayAttack>(ctx, Metric::kEuclidean));
  scorers.push_back(std::make_unique<TwoWayAttack>(ctx, Metric::kHamming));
  scorers.push_back(std::make_unique<TwoWayAttack>(ctx, Metric::kEuclidean));
  scorers.push_back(std::make_unique<WeightedAttack>(
      ctx, std::map<Metric, double>{{Metric::kHamming, 0.5}, {Metric::kEuclidean, 0.5}}));
  scorers.push_back(std::make_unique<RobustHomerAttack>(RobustHomerAttack::FromContext(ctx)));
  scorers.push_back(std::make_unique<DomiasAttack>(DomiasAttack::Fit(ctx, DomiasOptions{})));
  DetectorOptions det;
  det.train.epochs = 30;
  det.seed = 106;
  scorers.push_back(std::make_unique<DetectorAttack>(DetectorAttack::Train(ctx.reference, g, det)));

  const BayesOracleAttack oracle(g);
  const RocCurve best = WeightedRoc(oracle.ScoreAll(points), mass_g, mass_p);
  double worst_margin = INFINITY;
  std::string worst;
  for (const auto& s : scorers) {
    const RocCurve c = WeightedRoc(s->ScoreAll(points), mass_g, mass_p);
    for (double f : UnionFprs(best, c)) {
      const double margin = InterpolatedTpr(best, f) - InterpolatedTpr(c, f);
      if (margin < worst_margin) {
        worst_margin = margin;
        worst = s->name();
      }
    }
  }
  return {worst_margin >= -1e-12,
          Fmt("%zu statistics on 2^%zu points; min TPR margin of f* %.3g (%s); exact AUC f* %.6f",
              scorers.size(), d, worst_margin, worst.c_str(), Auc(best))};
}

Outcome DetectorApproachesOracle() {
  ExperimentConfig c;
  c.dimension = 100;
  c.split = {300, 1500, 200, 200};
  c.target.kind = TargetConfig::Kind::kOracle;
  c.target.beta = 0.5;
  c.attacks = {{"detector", nlohmann::json::object()}};
  const SnpDistributionSpec spec = PopulationSpec(c);
  std::vector<double> det_auc, oracle_auc;
  bool within_upper = true;
  std::string per_seed;
  for (size_t r = 0; r < 5; ++r) {
    const uint64_t seed = RunSeed(c.master_seed, r);
    const DatasetSplit data = GenerateRunData(c, spec, seed);
    const GeneratorHandle target = TrainTarget(c, spec, data.train, seed);
    const auto& g = std::get<OracleMixtureGenerator>(target);
    const Candidates cand = MakeCandidates(data.test_members, data.test_nonmembers);
    DetectorOptions o;  // 150 epochs, batch 100, lr 1e-3
    o.seed = DeriveSeed(seed, "detector");
    const DetectorAttack det = DetectorAttack::Train(data.reference, g, o);
    AttackScores sd{"detector", "s", det.ScoreAll(cand.rows), cand.labels};
    AttackScores so{"bayes_oracle", "s", BayesOracleAttack(g).ScoreAll(cand.rows), cand.labels};
    det_auc.push_back(Auc(BuildRoc(sd)));
    oracle_auc.push_back(Auc(BuildRoc(so)));
    const double se = AucStandardError(det_auc.back(), 200, 200);
    within_upper &= det_auc.back() <= oracle_auc.back() + 3 * se;
    per_seed += Fmt(" %.4f/%.4f", det_auc.back(), oracle_auc.back());
  }
  const double md = MeanAndStderr(det_auc).mean, mo = MeanAndStderr(oracle_auc).mean;
  return {md >= mo - 0.07 && within_upper,
          Fmt("mean detector AUC %.4f vs oracle %.4f (need >= %.4f); per seed det/oracle:%s", md, mo,
              mo - 0.07, per_seed.c_str())};
}

Outcome MixtureIdentity() {
  const size_t d = 40, n = 10000;
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(d, 2, 201);
  const BitMatrix train = SampleDistribution(spec, 100, 202);
  Rng rng(203);
  double worst = 0;
  size_t checks = 0, passed = 0;
  for (int fi = 0; fi < 10; ++fi) {
    Eigen::VectorXd w(d);
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = rng.Normal();
    const double bias = rng.Normal(), scale = 0.1 + rng.Uniform();
    auto f = [&](const BitMatrix& x) {
      Eigen::VectorXd v(x.rows());
      for (size_t i = 0; i < x.rows(); ++i) {
        double s = bias;
        for (size_t j = 0; j < d; ++j) s += x.Get(i, j) ? w[static_cast<Eigen::Index>(j)] : 0.0;
        v[static_cast<Eigen::Index>(i)] = std::tanh(scale * s);
      }
      return v;
    };
    std::vector<size_t> t_idx(n);
    for (auto& i : t_idx) i = rng.Below(train.rows());
    const Eigen::VectorXd ft = f(train.SelectRows(t_idx));
    const Eigen::VectorXd fp = f(SampleDistribution(spec, n, rng.Next()));
    auto stats = [](const Eigen::VectorXd& v) {
      const double m = v.mean();
      return std::pair{m, (v.array() - m).square().sum() / static_cast<double>(v.size() - 1)};
    };
    const auto [mt, vt] = stats(ft);
    const auto [mp, vp] = stats(fp);
    for (double beta : {0.0, 0.3, 0.7, 1.0}) {
      const OracleMixtureGenerator g(beta, train, spec);
      const auto [mg, vg] = stats(f(g.Sample(n, rng.Next())));
      const double se = std::sqrt((vg + beta * beta * vt + (1 - beta) * (1 - beta) * vp) / n);
      const double z = std::abs(mg - (beta * mt + (1 - beta) * mp)) / se;
      worst = std::max(worst, z);
      ++checks;
      passed += z <= 4;
    }
  }
  return {passed == checks, Fmt("%zu/%zu within 4 SE; max deviation %.2f SE", passed, checks, worst)};
}

ExperimentConfig OracleDesk(double beta, std::vector<std::string> attacks) {
  ExperimentConfig c;
  c.target.kind = TargetConfig::Kind::kOracle;
  c.target.beta = beta;
  c.attacks.clear();
  for (auto& a : attacks) c.attacks.push_back({a, nlohmann::json::object()});
  c.diagnostics.enabled = false;
  return c;
}

double MeanTpr(const AttackResult& r, size_t grid_index) {
  std::vector<double> v;
  for (const auto& run : r.tpr_per_run) v.push_back(run[grid_index]);
  return MeanAndStderr(v).mean;
}

// Null runs, shared with the ordering check.
const EvalReport& NullReport() {
  static const EvalReport report =
      RunExperiment(OracleDesk(0.0, {"one_way", "two_way", "weighted", "robust_homer", "detector",
                                     "adis", "domias"}),
                    false)
          .report;
  return report;
}

size_t GridIndex(const EvalReport& r, double f) {
  return static_cast<size_t>(std::find(r.fpr_grid.begin(), r.fpr_grid.end(), f) - r.fpr_grid.begin());
}

Outcome RandomBaseline() {
  const EvalReport& r = NullReport();
  const size_t i01 = GridIndex(r, 0.01), i1 = GridIndex(r, 0.1);
  bool ok = r.attacks.size() == 7;
  std::string detail;
  std::string interp;
  for (const auto& a : r.attacks) {
    const double t01 = MeanTpr(a, i01), t1 = MeanTpr(a, i1);
    const bool good = a.tpr_per_run.size() == 11 && std::abs(t01 - 0.01) <= 0.015 &&
                      std::abs(t1 - 0.1) <= 0.03;
    ok &= good;
    detail += Fmt(" %s %.4f/%.4f%s", a.attack.c_str(), t01, t1, good ? "" : "(!)");
    // Linear interpolation across tied scores, reported for comparison only.
    std::vector<double> lin;
    for (const auto& c : a.curves) lin.push_back(InterpolatedTpr(c, 0.1));
    interp += Fmt(" %s %.4f", a.attack.c_str(), MeanAndStderr(lin).mean);
  }
  return {ok, "step TPR@0.01/TPR@0.1 over 11 runs:" + detail + "; interpolated TPR@0.1:" + interp};
}

bool MonotoneWithOneInversion(const std::vector<double>& v) {
  size_t inversions = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1]) {
      ++inversions;
      if (v[i - 1] - v[i] > 0.02) return false;
    }
  }
  return inversions <= 1;
}

Outcome LeakageOrdering() {
  std::map<std::string, std::vector<double>> tpr;
  for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const EvalReport r = beta == 0.0 ? NullReport()
                                     : RunExperiment(OracleDesk(beta, {"two_way", "detector"}), false).report;
    const size_t i1 = GridIndex(r, 0.1);
    for (const auto& a : r.attacks) {
      if (a.attack == "two_way" || a.attack == "detector") tpr[a.attack].push_back(MeanTpr(a, i1));
    }
  }
  bool ok = tpr.size() == 2;
  std::string detail;
  for (const auto& [name, v] : tpr) {
    ok &= v.size() == 5 && MonotoneWithOneInversion(v);
    detail += " " + name + ":";
    for (double t : v) detail += Fmt(" %.4f", t);
  }
  return {ok, "TPR@0.1 over beta {0,.25,.5,.75,1}:" + detail};
}

Outcome Memorization() {
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(200, 3, 301);
  const BitMatrix train = SampleDistribution(spec, 500, 302);
  const OracleMixtureGenerator g(0.3, train, spec);
  const double frac = MemorizationCheck(g, train, 10000, 3500, 303).zero_fraction();

  const ExperimentConfig desk;
  const SnpDistributionSpec dspec = PopulationSpec(desk);
  const uint64_t seed = RunSeed(desk.master_seed, 0);
  const DatasetSplit data = GenerateRunData(desk, dspec, seed);
  const GeneratorHandle gan = TrainTarget(desk, dspec, data.train, seed);
  const MemorizationReport mr = MemorizationCheck(AsSampler(gan), data.train, 100000, 3500, 304);
  return {std::abs(frac - 0.3) <= 0.02,
          Fmt("oracle beta=0.3 zero-distance fraction %.4f; desk GAN exact copies %zu of %zu (reported only)",
              frac, mr.zero_distance_count, mr.total)};
}

Outcome NumericalSubstrate() {
  double grad = 0;
  for (uint64_t s = 0; s < 100; ++s) grad = std::max(grad, testing::RandomGradientCheck(s));

  Rng rng(401);
  bool em_ok = true;
  for (int trial = 0; trial < 30; ++trial) {
    MatrixXd x(100 + static_cast<Eigen::Index>(rng.Below(300)), 1 + static_cast<Eigen::Index>(rng.Below(6)));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
    x.col(0).array() += (x.col(0).array() > 0).cast<double>() * 4.0;
    GmmFitOptions o;
    o.components = 1 + rng.Below(6);
    o.seed = rng.Next();
    const GmmFitDiagnostics dg = FitGmm(x, o).diagnostics;
    for (size_t i = 1; i < dg.log_likelihood.size(); ++i) {
      if (dg.reseed_iteration && i == *dg.reseed_iteration) continue;
      em_ok &= dg.log_likelihood[i] >= dg.log_likelihood[i - 1] - 1e-9;
    }
  }

  double pca_residual = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const SnpDistributionSpec spec = SnpDistributionSpec::Random(50 + 50 * trial, 3, rng.Next());
    const MatrixXd x = SampleDistribution(spec, 300, rng.Next()).ToReal();
    const PcaModel m = FitPca(x, 20);
    const MatrixXd q = m.components * m.components.transpose();
    pca_residual = std::max(pca_residual, (q - MatrixXd::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff());
  }

  MatrixXd hx(2, 1), hy(2, 1);
  hx << 0, 2;
  hy << 1, 1;
  const double mmd = Mmd2Unbiased(hx, hy, Kernel::Linear());

  size_t rejections = 0;
  for (int t = 0; t < 500; ++t) {
    MatrixXd x(20, 2), y(20, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = rng.Normal();
      y.data()[i] = rng.Normal();
    }
    rejections += PermutationPValue(x, y, Kernel::Rbf(1.0), 199, rng.Next()) <= 0.05;
  }
  const double level = rejections / 500.0;
  const bool ok = grad < 1e-4 && em_ok && pca_residual < 1e-8 && mmd == -1.0 && std::abs(level - 0.05) <= 0.02;
  return {ok, Fmt("grad rel err %.2e; EM monotone %s; PCA residual %.2e; MMD2 hand %.17g; level %.3f", grad,
                  em_ok ? "yes" : "no", pca_residual, mmd, level)};
}

double PairCountAuc(const std::vector<double>& m, const std::vector<double>& n) {
  double u = 0;
  for (double a : m) {
    for (double b : n) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return u / (static_cast<double>(m.size()) * static_cast<double>(n.size()));
}

Outcome BruteForce() {
  Rng rng(501);
  size_t hamming_ok = 0;
  for (int t = 0; t < 1000; ++t) {
    const size_t d = 1 + rng.Below(300), n = 1 + rng.Below(30);
    BitMatrix s(n, d), tau(1, d);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < d; ++j) s.Set(i, j, rng.Bernoulli(0.5));
    }
    for (size_t j = 0; j < d; ++j) tau.Set(0, j, rng.Bernoulli(0.5));
    size_t naive = SIZE_MAX;
    for (size_t i = 0; i < n; ++i) {
      size_t dist = 0;
      for (size_t j = 0; j < d; ++j) dist += s.Get(i, j) != tau.Get(0, j);
      naive = std::min(naive, dist);
    }
    hamming_ok += ReconstructionLoss(tau.Row(0), s, Metric::kHamming) == static_cast<double>(naive);
  }
  size_t auc_ok = 0;
  for (int t = 0; t < 200; ++t) {
    AttackScores s{"a", "r", {}, {}};
    std::vector<double> m(1 + rng.Below(80)), n(1 + rng.Below(80));
    const int levels = t % 2 ? 0 : 1 + static_cast<int>(rng.Below(8));
    for (auto* v : {&m, &n}) {
      for (auto& x : *v) x = levels ? static_cast<double>(rng.Below(levels)) : rng.Uniform();
    }
    for (double x : m) { s.scores.push_back(x); s.labels.push_back(1); }
    for (double x : n) { s.scores.push_back(x); s.labels.push_back(0); }
    auc_ok += Auc(BuildRoc(s)) == PairCountAuc(m, n);
  }
  return {hamming_ok == 1000 && auc_ok == 200,
          Fmt("Hamming %zu/1000 exact; AUC %zu/200 exact", hamming_ok, auc_ok)};
}

int Shell(const std::string& cmd) {
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome EndToEndDeterminism() {
  const fs::path root = fs::temp_directory_path() / "mia_acceptance_e2e";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "config.json") << "{}\n";
  int status = 0;
  for (const char* sub : {"a", "b"}) {
    status |= Shell(std::string(MIA_CLI_PATH) + " run --config " + (root / "config.json").string() +
                    " --out " + (root / sub).string() + " > " + (root / sub).string() + ".log 2>&1");
  }
  const bool csv = ReadAll(root / "a" / "results.csv") == ReadAll(root / "b" / "results.csv") &&
                   !ReadAll(root / "a" / "results.csv").empty();
  const bool js = ReadAll(root / "a" / "results.json") == ReadAll(root / "b" / "results.json") &&
                  !ReadAll(root / "a" / "results.json").empty();
  fs::remove_all(root);
  return {status == 0 && csv && js, Fmt("exit %d; results.csv identical %s; results.json identical %s", status,
                                        csv ? "yes" : "no", js ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double time_limit_s;  // 0: none
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact optimality of f* on 2^10 points", ExactOptimality, 30},
      {2, "detector approaches oracle", DetectorApproachesOracle, 300},
      {3, "mixture decomposition identity", MixtureIdentity, 0},
      {4, "random-baseline calibration", RandomBaseline, 0},
      {5, "leakage ordering in beta", LeakageOrdering, 0},
      {6, "memorization diagnostic", Memorization, 0},
      {7, "numerical substrate", NumericalSubstrate, 0},
      {8, "brute-force equivalences", BruteForce, 0},
      {9, "end-to-end determinism", EndToEndDeterminism, 600},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += Fmt("; over time limit %.0f s", c.time_limit_s);
    }
    failed += !o.pass;
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
