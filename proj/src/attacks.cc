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

#include "mia/attacks.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "mia/errors.h"
#include "mia/rng.h"

namespace mia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Eigen::RowVectorXd RowToReal(BitRow r) {
  Eigen::RowVectorXd v(static_cast<Index>(r.cols));
  for (size_t j = 0; j < r.cols; ++j) v[static_cast<Index>(j)] = r.Get(j) ? 1.0 : 0.0;
  return v;
}

BitMatrix SingleRow(BitRow r) {
  BitMatrix m;
  m.AppendRow(r);
  return m;
}

void CheckRow(BitRow tau, const BitMatrix& samples) {
  if (samples.empty()) throw InvalidInputError("reconstruction loss: empty sample set");
  if (tau.cols != samples.cols()) {
    throw InvalidInputError("reconstruction loss: candidate has " + std::to_string(tau.cols) +
                            " columns, samples have " + std::to_string(samples.cols()));
  }
}

double LossFromHamming(size_t h, Metric metric) {
  return metric == Metric::kHamming ? static_cast<double>(h)
                                    : std::sqrt(static_cast<double>(h));
}

size_t ResolvePcaComponents(size_t requested, size_t dimension, size_t rows) {
  const size_t k = requested ? requested : DefaultPcaComponents(dimension);
  return std::max<size_t>(1, std::min({k, dimension, rows - 1}));
}

GmmFitOptions CapComponents(GmmFitOptions o, size_t rows) {
  o.components = std::max<size_t>(1, std::min(o.components, rows));
  return o;
}

// Minimum Euclidean distance from each row of `a` to any row of `b`.
VectorXd MinEuclidean(const MatrixXd& a, const MatrixXd& b) {
  const VectorXd an = a.rowwise().squaredNorm();
  const VectorXd bn = b.rowwise().squaredNorm();
  const MatrixXd cross = a * b.transpose();
  VectorXd out(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < b.rows(); ++j) best = std::min(best, an[i] + bn[j] - 2.0 * cross(i, j));
    out[i] = std::sqrt(std::max(0.0, best));
  }
  return out;
}

double Accuracy(const Mlp& model, const MatrixXd& x, const VectorXd& y) {
  const MatrixXd p = model.Forward(x);
  Index correct = 0;
  for (Index i = 0; i < p.rows(); ++i) correct += ((p(i, 0) >= 0.5) == (y[i] > 0.5));
  return static_cast<double>(correct) / static_cast<double>(p.rows());
}

struct ReferenceSplit {
  BitMatrix train;
  BitMatrix test;
};

ReferenceSplit SplitReference(const BitMatrix& ref, double test_fraction, Rng& rng) {
  if (!(test_fraction >= 0 && test_fraction < 1)) {
    throw InvalidInputError("detector: test_fraction must lie in [0, 1)");
  }
  const std::vector<size_t> perm = rng.Permutation(ref.rows());
  size_t n_test = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(ref.rows())));
  if (n_test >= ref.rows()) n_test = ref.rows() - 1;
  std::vector<size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  return {ref.SelectRows(train), ref.SelectRows(test)};
}

MatrixXd Stack(const MatrixXd& top, const MatrixXd& bottom) {
  MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

VectorXd StackLabels(Index zeros, Index ones) {
  VectorXd y(zeros + ones);
  y.head(zeros).setZero();
  y.tail(ones).setOnes();
  return y;
}

}  // namespace

const char* MetricName(Metric m) { return m == Metric::kHamming ? "hamming" : "euclidean"; }

Metric ParseMetric(const std::string& name) {
  if (name == "hamming") return Metric::kHamming;
  if (name == "euclidean") return Metric::kEuclidean;
  throw InvalidInputError("unknown metric '" + name + "' (valid: hamming, euclidean)");
}

size_t MinHammingDistance(BitRow tau, const BitMatrix& samples) {
  CheckRow(tau, samples);
  size_t best = std::numeric_limits<size_t>::max();
  for (size_t i = 0; i < samples.rows() && best > 0; ++i) {
    best = std::min(best, HammingDistance(tau, samples.Row(i)));
  }
  return best;
}

double ReconstructionLoss(BitRow tau, const BitMatrix& samples, Metric metric) {
  return LossFromHamming(MinHammingDistance(tau, samples), metric);
}

void AttackContext::Validate() const {
  if (synthetic.empty() || reference.empty()) {
    throw InvalidInputError("AttackContext: synthetic and reference sets must be non-empty");
  }
  if (synthetic.cols() != reference.cols()) {
    throw InvalidInputError("AttackContext: synthetic/reference column counts differ");
  }
}

std::vector<double> MembershipScorer::ScoreAll(const BitMatrix& candidates, size_t threads) const {
  std::vector<double> out(candidates.rows());
  const size_t n = candidates.rows();
  threads = std::max<size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (size_t i = 0; i < n; ++i) out[i] = Score(candidates.Row(i));
    return out;
  }
  std::vector<std::thread> pool;
  const size_t chunk = (n + threads - 1) / threads;
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) {
        out[i] = Score(candidates.Row(i));
      }
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

OneWayAttack::OneWayAttack(const AttackContext& ctx, Metric metric)
    : synthetic_(ctx.synthetic), metric_(metric) {
  if (synthetic_.empty()) throw InvalidInputError("one_way: empty synthetic set");
}

double OneWayAttack::Score(BitRow candidate) const {
  return -ReconstructionLoss(candidate, synthetic_, metric_);
}

TwoWayAttack::TwoWayAttack(const AttackContext& ctx, Metric metric)
    : synthetic_(ctx.synthetic), reference_(ctx.reference), metric_(metric) {
  ctx.Validate();
}

double TwoWayAttack::Score(BitRow candidate) const {
  return ReconstructionLoss(candidate, reference_, metric_) -
         ReconstructionLoss(candidate, synthetic_, metric_);
}

WeightedAttack::WeightedAttack(const AttackContext& ctx, std::map<Metric, double> weights)
    : synthetic_(ctx.synthetic), reference_(ctx.reference), weights_(std::move(weights)) {
  ctx.Validate();
  bool any_positive = false;
  for (const auto& [metric, w] : weights_) {
    if (!(w >= 0) || !std::isfinite(w)) {
      throw InvalidInputError("weighted: weights must be finite and non-negative");
    }
    any_positive |= w > 0;
  }
  if (!any_positive) throw InvalidInputError("weighted: at least one weight must be positive");
}

double WeightedAttack::Score(BitRow candidate) const {
  const size_t h_ref = MinHammingDistance(candidate, reference_);
  const size_t h_syn = MinHammingDistance(candidate, synthetic_);
  double s = 0;
  for (const auto& [metric, w] : weights_) {
    s += w * (LossFromHamming(h_ref, metric) - LossFromHamming(h_syn, metric));
  }
  return s;
}

RobustHomerAttack::RobustHomerAttack(const BitMatrix& synthetic, const BitMatrix& reference,
                                     BitRow fresh, double epsilon) {
  if (synthetic.empty() || reference.empty()) {
    throw InvalidInputError("robust_homer: synthetic and reference sets must be non-empty");
  }
  if (synthetic.cols() != reference.cols() || fresh.cols != reference.cols()) {
    throw InvalidInputError("robust_homer: dimension mismatch");
  }
  if (!(epsilon >= 0)) throw InvalidInputError("robust_homer: epsilon must be >= 0");
  const double eta = Eta(reference.rows(), epsilon);
  const VectorXd diff = synthetic.ColumnMeans() - reference.ColumnMeans();
  truncated_ = diff.cwiseMax(-eta).cwiseMin(eta);
  fresh_ = RowToReal(fresh).transpose();
  fresh_dot_ = fresh_.dot(truncated_);
}

RobustHomerAttack RobustHomerAttack::FromContext(const AttackContext& ctx, double epsilon) {
  ctx.Validate();
  if (ctx.reference.rows() < 2) {
    throw InvalidInputError("robust_homer: need >= 2 reference rows (one is held out)");
  }
  Rng rng(DeriveSeed(ctx.seed, "homer_fresh"));
  const size_t fresh = static_cast<size_t>(rng.Below(ctx.reference.rows()));
  std::vector<size_t> rest;
  for (size_t i = 0; i < ctx.reference.rows(); ++i) {
    if (i != fresh) rest.push_back(i);
  }
  // Equal numbers of synthetic and reference rows enter the two means.
  std::vector<size_t> syn(std::min(ctx.synthetic.rows(), rest.size()));
  for (size_t i = 0; i < syn.size(); ++i) syn[i] = i;
  return RobustHomerAttack(ctx.synthetic.SelectRows(syn), ctx.reference.SelectRows(rest),
                           ctx.reference.Row(fresh), epsilon);
}

double RobustHomerAttack::Score(BitRow candidate) const {
  double s = 0;
  for (size_t j = 0; j < candidate.cols; ++j) {
    if (candidate.Get(j)) s += truncated_[static_cast<Index>(j)];
  }
  return s - fresh_dot_;
}

double RobustHomerAttack::Eta(size_t reference_size, double epsilon) {
  if (reference_size == 0) throw InvalidInputError("robust_homer: empty reference set");
  return 2.0 * (1.0 / std::sqrt(static_cast<double>(reference_size)) + epsilon);
}

double RobustHomerAttack::Rho(const VectorXd& tau, const VectorXd& fresh, const VectorXd& mu_g,
                              const VectorXd& mu_r, double eta) {
  return (tau - fresh).dot((mu_g - mu_r).cwiseMax(-eta).cwiseMin(eta));
}

double DomiasScore(BitRow x, const PcaModel& pca, const GmmModel& gmm_synthetic,
                   const GmmModel& gmm_reference) {
  if (x.cols != pca.input_dim()) throw InvalidInputError("domias: dimension mismatch");
  const VectorXd z = pca.Transform(RowToReal(x)).row(0).transpose();
  return gmm_synthetic.LogDensity(z) - gmm_reference.LogDensity(z);
}

DomiasAttack::DomiasAttack(PcaModel pca, GmmModel gmm_synthetic, GmmModel gmm_reference)
    : pca_(std::move(pca)), gmm_g_(std::move(gmm_synthetic)), gmm_r_(std::move(gmm_reference)) {
  if (gmm_g_.dimension() != pca_.num_components() ||
      gmm_r_.dimension() != pca_.num_components()) {
    throw InvalidInputError("domias: GMM dimension must equal PCA component count");
  }
}

DomiasAttack DomiasAttack::Fit(const AttackContext& ctx, const DomiasOptions& options) {
  ctx.Validate();
  const MatrixXd syn = ctx.synthetic.ToReal();
  const MatrixXd ref = ctx.reference.ToReal();
  const MatrixXd pooled = Stack(syn, ref);
  const size_t k = ResolvePcaComponents(options.pca_components, ctx.synthetic.cols(),
                                        static_cast<size_t>(pooled.rows()));
  PcaModel pca = FitPca(pooled, k);
  GmmFitOptions go = options.gmm;
  go.seed = DeriveSeed(options.gmm.seed, "domias_gmm_synthetic");
  GmmModel g = FitGmm(pca.Transform(syn), CapComponents(go, static_cast<size_t>(syn.rows()))).model;
  go.seed = DeriveSeed(options.gmm.seed, "domias_gmm_reference");
  GmmModel r = FitGmm(pca.Transform(ref), CapComponents(go, static_cast<size_t>(ref.rows()))).model;
  return DomiasAttack(std::move(pca), std::move(g), std::move(r));
}

double DomiasAttack::Score(BitRow candidate) const {
  return DomiasScore(candidate, pca_, gmm_g_, gmm_r_);
}

std::vector<double> DomiasAttack::ScoreAll(const BitMatrix& candidates, size_t) const {
  if (candidates.empty()) return {};
  if (candidates.cols() != pca_.input_dim()) throw InvalidInputError("domias: dimension mismatch");
  const MatrixXd z = pca_.Transform(candidates.ToReal());
  const VectorXd s = gmm_g_.LogDensities(z) - gmm_r_.LogDensities(z);
  return std::vector<double>(s.data(), s.data() + s.size());
}

DetectorAttack DetectorAttack::Train(const BitMatrix& reference, const Sampler& generator,
                                     const DetectorOptions& options) {
  if (reference.rows() < 2) throw InvalidInputError("detector: need >= 2 reference rows");
  if (generator.dimension() != reference.cols()) {
    throw InvalidInputError("detector: generator/reference dimension mismatch");
  }
  Rng rng(DeriveSeed(options.seed, "detector_split"));
  const ReferenceSplit split = SplitReference(reference, options.test_fraction, rng);
  const size_t n_syn = options.synthetic_per_draw ? options.synthetic_per_draw : split.train.rows();
  auto draw = [&](size_t index) {
    return generator.Sample(n_syn, DeriveSeed(options.seed, "detector_draw", index)).ToReal();
  };

  const MatrixXd ref_train = split.train.ToReal();
  LabeledData data{Stack(ref_train, draw(0)),
                   StackLabels(ref_train.rows(), static_cast<Index>(n_syn))};
  TrainConfig cfg = options.train;
  cfg.seed = DeriveSeed(options.seed, "detector_train", options.train.seed);
  TrainedClassifier trained = TrainClassifier(data, cfg, [&](size_t epoch) { return draw(epoch); });

  DetectorDiagnostics diag;
  diag.history = std::move(trained.history);
  if (!split.test.empty()) {
    const MatrixXd test_syn =
        generator.Sample(split.test.rows(), DeriveSeed(options.seed, "detector_test")).ToReal();
    const MatrixXd test_ref = split.test.ToReal();
    diag.test_accuracy = Accuracy(trained.model, Stack(test_ref, test_syn),
                                  StackLabels(test_ref.rows(), test_syn.rows()));
    diag.test_size = static_cast<size_t>(2 * test_ref.rows());
  }
  return DetectorAttack(std::move(trained.model), std::move(diag));
}

double DetectorAttack::Score(BitRow candidate) const {
  return model_.Forward(RowToReal(candidate))(0, 0);
}

std::vector<double> DetectorAttack::ScoreAll(const BitMatrix& candidates, size_t) const {
  if (candidates.empty()) return {};
  const MatrixXd p = model_.Forward(candidates.ToReal());
  return std::vector<double>(p.data(), p.data() + p.rows());
}

AdisFeaturizer::AdisFeaturizer(PcaModel pca, BitMatrix held_out_synthetic,
                               BitMatrix held_out_reference, GmmModel gmm_synthetic,
                               GmmModel gmm_reference, bool augment)
    : pca_(std::move(pca)),
      held_syn_(std::move(held_out_synthetic)),
      held_ref_(std::move(held_out_reference)),
      gmm_g_(std::move(gmm_synthetic)),
      gmm_r_(std::move(gmm_reference)),
      augment_(augment) {
  if (augment_) {
    if (held_syn_.empty() || held_ref_.empty()) {
      throw InvalidInputError("adis: held-out sets must be non-empty");
    }
    held_syn_pca_ = pca_.Transform(held_syn_.ToReal());
    held_ref_pca_ = pca_.Transform(held_ref_.ToReal());
  }
}

size_t AdisFeaturizer::dimension() const { return pca_.num_components() + (augment_ ? 4 : 0); }

MatrixXd AdisFeaturizer::Features(const BitMatrix& rows) const {
  const MatrixXd z = pca_.Transform(rows.ToReal());
  const Index k = z.cols();
  MatrixXd f(z.rows(), static_cast<Index>(dimension()));
  f.leftCols(k) = z;
  if (!augment_) return f;
  const VectorXd l2_syn = MinEuclidean(z, held_syn_pca_);
  const VectorXd l2_ref = MinEuclidean(z, held_ref_pca_);
  const VectorXd domias = gmm_g_.LogDensities(z) - gmm_r_.LogDensities(z);
  for (Index i = 0; i < z.rows(); ++i) {
    const BitRow r = rows.Row(static_cast<size_t>(i));
    const double h_syn = static_cast<double>(MinHammingDistance(r, held_syn_));
    const double h_ref = static_cast<double>(MinHammingDistance(r, held_ref_));
    f(i, k) = -h_syn;
    f(i, k + 1) = h_ref - h_syn;
    f(i, k + 2) = l2_ref[i] - l2_syn[i];
    f(i, k + 3) = domias[i];
  }
  return f;
}

AdisAttack AdisAttack::Train(const BitMatrix& reference, const Sampler& generator,
                             const AdisOptions& options) {
  if (generator.dimension() != reference.cols()) {
    throw InvalidInputError("adis: generator/reference dimension mismatch");
  }
  const size_t held = options.augment ? options.held_out : 0;
  if (held + 2 > reference.rows()) {
    throw InvalidInputError("adis: held-out request of " + std::to_string(held) +
                            " rows exceeds the reference pool of " +
                            std::to_string(reference.rows()) + " (need 2 rows left for training)");
  }
  const uint64_t seed = options.detector.seed;
  Rng rng(DeriveSeed(seed, "adis_split"));
  const std::vector<size_t> perm = rng.Permutation(reference.rows());
  std::vector<size_t> held_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<size_t> rest_idx(perm.begin() + static_cast<std::ptrdiff_t>(held), perm.end());
  const BitMatrix held_ref = reference.SelectRows(held_idx);
  const ReferenceSplit split =
      SplitReference(reference.SelectRows(rest_idx), options.detector.test_fraction, rng);
  const BitMatrix held_syn =
      held ? generator.Sample(held, DeriveSeed(seed, "adis_held_out")) : BitMatrix(0, reference.cols());

  const size_t n_syn = options.detector.synthetic_per_draw ? options.detector.synthetic_per_draw
                                                           : split.train.rows();
  auto draw = [&](size_t index) {
    return generator.Sample(n_syn, DeriveSeed(seed, "adis_draw", index));
  };
  const BitMatrix syn0 = draw(0);
  const MatrixXd syn_real = syn0.ToReal();
  const MatrixXd ref_real = split.train.ToReal();
  const MatrixXd pooled = Stack(ref_real, syn_real);
  const size_t k = ResolvePcaComponents(options.pca_components, reference.cols(),
                                        static_cast<size_t>(pooled.rows()));
  PcaModel pca = FitPca(pooled, k);
  GmmModel gmm_g, gmm_r;
  if (options.augment) {
    GmmFitOptions go = options.gmm;
    go.seed = DeriveSeed(options.gmm.seed, "adis_gmm_synthetic");
    gmm_g = FitGmm(pca.Transform(syn_real), CapComponents(go, syn0.rows())).model;
    go.seed = DeriveSeed(options.gmm.seed, "adis_gmm_reference");
    gmm_r = FitGmm(pca.Transform(ref_real), CapComponents(go, split.train.rows())).model;
  } else {
    gmm_g = gmm_r = GmmModel{VectorXd::Ones(1), MatrixXd::Zero(1, static_cast<Index>(k)),
                             MatrixXd::Ones(1, static_cast<Index>(k))};
  }
  AdisFeaturizer featurizer(std::move(pca), held_syn, held_ref, std::move(gmm_g), std::move(gmm_r),
                            options.augment);

  const MatrixXd f_ref = featurizer.Features(split.train);
  const MatrixXd f_syn = featurizer.Features(syn0);
  const MatrixXd pooled_f = Stack(f_ref, f_syn);
  const VectorXd mean = pooled_f.colwise().mean().transpose();
  VectorXd scale = ((pooled_f.rowwise() - mean.transpose()).array().square().colwise().mean())
                       .sqrt()
                       .matrix()
                       .transpose();
  for (Index j = 0; j < scale.size(); ++j) {
    if (!(scale[j] > 1e-12)) scale[j] = 1.0;
  }
  auto standardize = [&](MatrixXd f) {
    return MatrixXd((f.rowwise() - mean.transpose()).array().rowwise() /
                    scale.transpose().array());
  };

  LabeledData data{standardize(pooled_f), StackLabels(f_ref.rows(), f_syn.rows())};
  TrainConfig cfg = options.detector.train;
  cfg.seed = DeriveSeed(seed, "adis_train", options.detector.train.seed);
  TrainedClassifier trained = TrainClassifier(
      data, cfg, [&](size_t epoch) { return standardize(featurizer.Features(draw(epoch))); });

  AdisDiagnostics diag;
  diag.feature_dim = featurizer.dimension();
  diag.detector.history = std::move(trained.history);
  if (!split.test.empty()) {
    const BitMatrix test_syn = generator.Sample(split.test.rows(), DeriveSeed(seed, "adis_test"));
    const MatrixXd x = Stack(standardize(featurizer.Features(split.test)),
                             standardize(featurizer.Features(test_syn)));
    diag.detector.test_accuracy = Accuracy(
        trained.model, x, StackLabels(static_cast<Index>(split.test.rows()),
                                      static_cast<Index>(test_syn.rows())));
    diag.detector.test_size = 2 * split.test.rows();
  }
  return AdisAttack(std::move(featurizer), mean, scale, std::move(trained.model), std::move(diag));
}

MatrixXd AdisAttack::Standardize(MatrixXd f) const {
  return (f.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

double AdisAttack::Score(BitRow candidate) const {
  return ScoreAll(SingleRow(candidate)).front();
}

std::vector<double> AdisAttack::ScoreAll(const BitMatrix& candidates, size_t) const {
  if (candidates.empty()) return {};
  const MatrixXd p = model_.Forward(Standardize(featurizer_.Features(candidates)));
  return std::vector<double>(p.data(), p.data() + p.rows());
}

double BayesOracleAttack::Score(BitRow candidate) const {
  const MixtureLogDensities d = oracle_->LogDensities(candidate);
  const double t = d.log_g - d.log_p;
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Candidates MakeCandidates(const BitMatrix& members, const BitMatrix& nonmembers) {
  Candidates c;
  c.rows = members;
  if (c.rows.empty()) c.rows = BitMatrix(0, nonmembers.cols());
  c.rows.AppendRows(nonmembers);
  c.labels.assign(members.rows(), 1);
  c.labels.insert(c.labels.end(), nonmembers.rows(), 0);
  return c;
}

}  // namespace mia
