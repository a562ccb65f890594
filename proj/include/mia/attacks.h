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

#ifndef MIA_ATTACKS_H_
#define MIA_ATTACKS_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mia/bit_matrix.h"
#include "mia/density.h"
#include "mia/generators.h"
#include "mia/nn.h"

namespace mia {

enum class Metric { kHamming, kEuclidean };

const char* MetricName(Metric m);
Metric ParseMetric(const std::string& name);

// Minimum Hamming distance from tau to any row of S (packed popcount).
size_t MinHammingDistance(BitRow tau, const BitMatrix& samples);

// R(tau | S) = min over s in S of delta(s, tau). On bits the Euclidean
// distance is sqrt(Hamming), so both metrics share one nearest-neighbour pass.
double ReconstructionLoss(BitRow tau, const BitMatrix& samples, Metric metric);

struct AttackContext {
  BitMatrix synthetic;  // X_G, drawn from the target's sampler
  BitMatrix reference;  // X_R, fresh draws from the data distribution
  std::vector<Metric> metrics = {Metric::kHamming};
  uint64_t seed = 0;

  void Validate() const;
};

// A frozen membership scorer: higher = more likely a training member.
class MembershipScorer {
 public:
  virtual ~MembershipScorer() = default;
  virtual std::string name() const = 0;
  virtual double Score(BitRow candidate) const = 0;
  // Scores every row. Chunks run on `threads` workers; the result does not
  // depend on the thread count.
  virtual std::vector<double> ScoreAll(const BitMatrix& candidates, size_t threads = 1) const;
};

class OneWayAttack final : public MembershipScorer {
 public:
  OneWayAttack(const AttackContext& ctx, Metric metric = Metric::kHamming);
  std::string name() const override { return "one_way"; }
  // -R(tau | X_G)
  double Score(BitRow candidate) const override;

 private:
  BitMatrix synthetic_;
  Metric metric_;
};

class TwoWayAttack final : public MembershipScorer {
 public:
  TwoWayAttack(const AttackContext& ctx, Metric metric = Metric::kHamming);
  std::string name() const override { return "two_way"; }
  // R_ref(tau | X_R) - R(tau | X_G): positive when tau is closer to the
  // synthetic sample than to the reference sample.
  double Score(BitRow candidate) const override;

 private:
  BitMatrix synthetic_;
  BitMatrix reference_;
  Metric metric_;
};

class WeightedAttack final : public MembershipScorer {
 public:
  // Non-negative weights, at least one positive.
  WeightedAttack(const AttackContext& ctx, std::map<Metric, double> weights);
  std::string name() const override { return "weighted"; }
  // sum over metrics of alpha * (R_ref - R)
  double Score(BitRow candidate) const override;

 private:
  BitMatrix synthetic_;
  BitMatrix reference_;
  std::map<Metric, double> weights_;
};

class RobustHomerAttack final : public MembershipScorer {
 public:
  // mu_r is taken over `reference`, which must not contain `fresh`.
  RobustHomerAttack(const BitMatrix& synthetic, const BitMatrix& reference, BitRow fresh,
                    double epsilon = 0.0);
  // Holds out one reference row (chosen by ctx.seed) as the fresh sample and
  // uses the remaining rows for mu_r.
  static RobustHomerAttack FromContext(const AttackContext& ctx, double epsilon = 0.0);

  std::string name() const override { return "robust_homer"; }
  // rho = <tau - x_fresh, clamp(mu_g - mu_r, -eta, eta)>
  double Score(BitRow candidate) const override;

  // eta = 2 (1 / sqrt(m) + epsilon)
  static double Eta(size_t reference_size, double epsilon);
  static double Rho(const Eigen::VectorXd& tau, const Eigen::VectorXd& fresh,
                    const Eigen::VectorXd& mu_g, const Eigen::VectorXd& mu_r, double eta);

  const Eigen::VectorXd& truncated_difference() const { return truncated_; }

 private:
  Eigen::VectorXd truncated_;
  Eigen::VectorXd fresh_;
  double fresh_dot_ = 0;
};

struct DomiasOptions {
  size_t pca_components = 0;  // 0: DefaultPcaComponents, capped by the data
  GmmFitOptions gmm;
};

// log P_G(pca(x)) - log P_R(pca(x)).
double DomiasScore(BitRow x, const PcaModel& pca, const GmmModel& gmm_synthetic,
                   const GmmModel& gmm_reference);

class DomiasAttack final : public MembershipScorer {
 public:
  DomiasAttack(PcaModel pca, GmmModel gmm_synthetic, GmmModel gmm_reference);
  // One PCA on X_G union X_R, then a GMM per set in PCA space.
  static DomiasAttack Fit(const AttackContext& ctx, const DomiasOptions& options);

  std::string name() const override { return "domias"; }
  double Score(BitRow candidate) const override;
  std::vector<double> ScoreAll(const BitMatrix& candidates, size_t threads = 1) const override;

  const PcaModel& pca() const { return pca_; }
  const GmmModel& gmm_synthetic() const { return gmm_g_; }
  const GmmModel& gmm_reference() const { return gmm_r_; }

 private:
  PcaModel pca_;
  GmmModel gmm_g_;
  GmmModel gmm_r_;
};

struct DetectorOptions {
  TrainConfig train;
  // Synthetic rows per draw; 0 matches the training reference count.
  size_t synthetic_per_draw = 0;
  // Fraction of the reference set held out (with as many fresh synthetic
  // rows) to measure synthetic-vs-reference test accuracy.
  double test_fraction = 0.2;
  uint64_t seed = 0;
};

struct DetectorDiagnostics {
  double test_accuracy = 0;
  size_t test_size = 0;
  TrainHistory history;
};

// Classifier trained to output 1 on generator samples and 0 on reference
// rows; synthetic rows are redrawn every resample_period epochs.
class DetectorAttack final : public MembershipScorer {
 public:
  static DetectorAttack Train(const BitMatrix& reference, const Sampler& generator,
                              const DetectorOptions& options);

  std::string name() const override { return "detector"; }
  double Score(BitRow candidate) const override;
  std::vector<double> ScoreAll(const BitMatrix& candidates, size_t threads = 1) const override;

  const Mlp& model() const { return model_; }
  const DetectorDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  DetectorAttack(Mlp model, DetectorDiagnostics diag)
      : model_(std::move(model)), diagnostics_(std::move(diag)) {}

  Mlp model_;
  DetectorDiagnostics diagnostics_;
};

struct AdisOptions {
  DetectorOptions detector;
  size_t held_out = 300;
  size_t pca_components = 0;  // 0: DefaultPcaComponents, capped by the data
  GmmFitOptions gmm;
  // When false the classifier sees PCA coordinates only.
  bool augment = true;

  AdisOptions() { detector.train.epochs = 20; }
};

// Feature layout for a row x (k = PCA components):
//   [0, k)  PCA(x)
//   k       one-way Hamming score vs the held-out synthetic rows
//   k + 1   two-way Hamming gap vs held-out reference / synthetic rows
//   k + 2   two-way Euclidean gap in PCA space vs the same held-out rows
//   k + 3   DOMIAS log-density ratio
class AdisFeaturizer {
 public:
  AdisFeaturizer(PcaModel pca, BitMatrix held_out_synthetic, BitMatrix held_out_reference,
                 GmmModel gmm_synthetic, GmmModel gmm_reference, bool augment);

  size_t dimension() const;
  // Raw (unstandardized) features, one row per input row.
  Eigen::MatrixXd Features(const BitMatrix& rows) const;

 private:
  PcaModel pca_;
  BitMatrix held_syn_;
  BitMatrix held_ref_;
  Eigen::MatrixXd held_syn_pca_;
  Eigen::MatrixXd held_ref_pca_;
  GmmModel gmm_g_;
  GmmModel gmm_r_;
  bool augment_;
};

struct AdisDiagnostics {
  DetectorDiagnostics detector;
  size_t feature_dim = 0;
};

class AdisAttack final : public MembershipScorer {
 public:
  static AdisAttack Train(const BitMatrix& reference, const Sampler& generator,
                          const AdisOptions& options);

  std::string name() const override { return "adis"; }
  double Score(BitRow candidate) const override;
  std::vector<double> ScoreAll(const BitMatrix& candidates, size_t threads = 1) const override;

  const AdisFeaturizer& featurizer() const { return featurizer_; }
  const AdisDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  AdisAttack(AdisFeaturizer f, Eigen::VectorXd mean, Eigen::VectorXd scale, Mlp model,
             AdisDiagnostics diag)
      : featurizer_(std::move(f)),
        mean_(std::move(mean)),
        scale_(std::move(scale)),
        model_(std::move(model)),
        diagnostics_(std::move(diag)) {}

  Eigen::MatrixXd Standardize(Eigen::MatrixXd features) const;

  AdisFeaturizer featurizer_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  Mlp model_;
  AdisDiagnostics diagnostics_;
};

// f*(x) = G(x) / (G(x) + P(x)) from the oracle's exact densities, evaluated
// as sigmoid(log G - log P) so it stays defined when both underflow.
class BayesOracleAttack final : public MembershipScorer {
 public:
  explicit BayesOracleAttack(const OracleMixtureGenerator& oracle) : oracle_(&oracle) {}
  std::string name() const override { return "bayes_oracle"; }
  double Score(BitRow candidate) const override;

 private:
  const OracleMixtureGenerator* oracle_;
};

struct Candidates {
  BitMatrix rows;
  std::vector<int> labels;  // 1 = member, 0 = non-member
};

Candidates MakeCandidates(const BitMatrix& members, const BitMatrix& nonmembers);

}  // namespace mia

#endif  // MIA_ATTACKS_H_
