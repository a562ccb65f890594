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

#include "mia/generators.h"

#include <cmath>
#include <filesystem>
#include <type_traits>

#include <gtest/gtest.h>

#include "mia/attacks.h"
#include "mia/errors.h"
#include "mia/math_util.h"

namespace mia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BitMatrix AllPoints(size_t d) {
  BitMatrix m(size_t{1} << d, d);
  for (size_t i = 0; i < m.rows(); ++i) {
    for (size_t j = 0; j < d; ++j) m.Set(i, j, (i >> j) & 1);
  }
  return m;
}

SnpDistributionSpec Uniform(size_t d) {
  return SnpDistributionSpec::FromParameters(MatrixXd::Constant(1, static_cast<Eigen::Index>(d), 0.5),
                                             VectorXd::Ones(1));
}

TEST(OracleTest, HandEvaluatedDensities) {
  const OracleMixtureGenerator g(0.5, BitMatrix::FromRows({{0, 0}}), Uniform(2));
  const BitMatrix x = BitMatrix::FromRows({{0, 0}, {1, 1}});
  EXPECT_NEAR(g.DensityG(x.Row(0)), 0.625, 1e-15);
  EXPECT_NEAR(g.DensityG(x.Row(1)), 0.125, 1e-15);
  EXPECT_EQ(g.DensityT(x.Row(1)), 0.0);
  EXPECT_NEAR(g.DensityP(x.Row(1)), 0.25, 1e-15);
}

TEST(OracleTest, DensityNormalizesOverDomain) {
  for (size_t d : {4u, 8u, 12u}) {
    const SnpDistributionSpec spec = SnpDistributionSpec::Random(d, 2, d);
    const OracleMixtureGenerator g(0.4, SampleDistribution(spec, 10, 1), spec);
    const BitMatrix all = AllPoints(d);
    double total = 0;
    for (size_t i = 0; i < all.rows(); ++i) total += g.DensityG(all.Row(i));
    EXPECT_NEAR(total, 1.0, 1e-9) << "d=" << d;
  }
}

TEST(OracleTest, BetaZeroEqualsBase) {
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(10, 2, 5);
  const OracleMixtureGenerator g(0.0, SampleDistribution(spec, 20, 1), spec);
  const BitMatrix all = AllPoints(10);
  for (size_t i = 0; i < all.rows(); ++i) {
    ASSERT_NEAR(g.DensityG(all.Row(i)), g.DensityP(all.Row(i)), 1e-15);
  }
}

TEST(OracleTest, BetaOneEmitsTrainingRows) {
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(64, 3, 6);
  const BitMatrix train = SampleDistribution(spec, 30, 2);
  const OracleMixtureGenerator g(1.0, train, spec);
  const BitMatrix s = g.Sample(500, 3);
  for (size_t i = 0; i < s.rows(); ++i) ASSERT_EQ(MinHammingDistance(s.Row(i), train), 0u);
}

TEST(OracleTest, VerbatimFractionMatchesBeta) {
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(200, 3, 7);
  const BitMatrix train = SampleDistribution(spec, 100, 2);
  const OracleMixtureGenerator g(0.3, train, spec);
  const BitMatrix s = g.Sample(10000, 4);
  size_t zero = 0;
  for (size_t i = 0; i < s.rows(); ++i) zero += MinHammingDistance(s.Row(i), train) == 0;
  EXPECT_NEAR(static_cast<double>(zero) / 10000.0, 0.3, 0.02);
}

TEST(OracleTest, BetaZeroCollisionsMatchClosedForm) {
  // At d=8 collisions are common, so compare with sum_t P(t) over train rows.
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(8, 1, 8);
  const BitMatrix train = SampleDistribution(spec, 5, 3);
  const OracleMixtureGenerator g(0.0, train, spec);
  const BitMatrix all = AllPoints(8);
  double expected = 0;
  for (size_t i = 0; i < all.rows(); ++i) {
    if (MinHammingDistance(all.Row(i), train) == 0) expected += std::exp(spec.LogDensity(all.Row(i)));
  }
  const size_t n = 20000;
  const BitMatrix s = g.Sample(n, 5);
  size_t hits = 0;
  for (size_t i = 0; i < n; ++i) hits += MinHammingDistance(s.Row(i), train) == 0;
  const double se = std::sqrt(expected * (1 - expected) / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(n), expected, 4 * se + 1e-12);
}

TEST(OracleTest, MixtureIdentityForFixedScorers) {
  const SnpDistributionSpec spec = SnpDistributionSpec::Random(20, 2, 9);
  const BitMatrix train = SampleDistribution(spec, 50, 1);
  const double beta = 0.3;
  const OracleMixtureGenerator g(beta, train, spec);
  const Mlp f = Mlp::Classifier(20, std::vector<size_t>{6}, 3);
  const size_t n = 20000;
  auto mlp_mean = [&](const BitMatrix& x, std::vector<double>* v = nullptr) {
    const MatrixXd p = f.Forward(x.ToReal());
    if (v) v->assign(p.data(), p.data() + p.rows());
    return p.mean();
  };
  std::vector<double> vg, vp;
  const double mg = mlp_mean(g.Sample(n, 11), &vg);
  const double mp = mlp_mean(SampleDistribution(spec, n, 12), &vp);
  const double mt = mlp_mean(train);
  // Both sample means carry error; the training-set mean is exact.
  const double se = std::hypot(MeanAndStderr(vg).standard_error,
                               (1 - beta) * MeanAndStderr(vp).standard_error);
  EXPECT_LE(std::abs(mg - (beta * mt + (1 - beta) * mp)), 4 * se);

  const BitMatrix sg = g.Sample(n, 13), sp = SampleDistribution(spec, n, 14);
  const double cg = sg.ColumnMeans()[0], cp = sp.ColumnMeans()[0], ct = train.ColumnMeans()[0];
  const double se_c = std::hypot(std::sqrt(cg * (1 - cg) / static_cast<double>(n)),
                                 (1 - beta) * std::sqrt(cp * (1 - cp) / static_cast<double>(n)));
  EXPECT_LE(std::abs(cg - (beta * ct + (1 - beta) * cp)), 4 * se_c);
}

TEST(OracleTest, DimensionMismatchRejected) {
  const OracleMixtureGenerator g(0.5, BitMatrix::FromRows({{0, 0}}), Uniform(2));
  const BitMatrix x = BitMatrix::FromRows({{0, 0, 1}});
  EXPECT_THROW(g.LogDensities(x.Row(0)), InvalidInputError);
}

GanHandle ConstantGan(size_t d, double logit) {
  DenseLayer g{MatrixXd::Zero(static_cast<Eigen::Index>(d), 4),
               VectorXd::Constant(static_cast<Eigen::Index>(d), logit), Activation::kSigmoid};
  DenseLayer disc{MatrixXd::Zero(1, static_cast<Eigen::Index>(d)), VectorXd::Zero(1),
                  Activation::kSigmoid};
  return GanHandle(Mlp::FromLayers({g}), Mlp::FromLayers({disc}), 4, 0, 0);
}

TEST(GanTest, SaturatedGeneratorEmitsOnes) {
  const BitMatrix s = ConstantGan(10, 10.0).Sample(50, 1);
  EXPECT_EQ(s.ColumnMeans().minCoeff(), 1.0);
}

TEST(GanTest, TieRoundsToOne) {
  const BitMatrix s = ConstantGan(10, 0.0).Sample(50, 1);
  EXPECT_EQ(s.ColumnMeans().minCoeff(), 1.0);
  EXPECT_EQ(ConstantGan(10, -10.0).Sample(50, 1).ColumnMeans().maxCoeff(), 0.0);
}

TEST(GanTest, SamplingIsDeterministicPerSeed) {
  GanConfig cfg;
  cfg.epochs = 0;
  const BitMatrix train = SampleDistribution(Uniform(12), 64, 2);
  const GanHandle h = TrainVanillaGan(train, cfg);
  EXPECT_EQ(h.Sample(100, 5), h.Sample(100, 5));
  EXPECT_EQ(h.epochs_trained(), 0u);
  EXPECT_EQ(h.dimension(), 12u);
}

TEST(GanTest, LearnsAllOnesTarget) {
  BitMatrix train(256, 16);
  for (size_t i = 0; i < 256; ++i) {
    for (size_t j = 0; j < 16; ++j) train.Set(i, j, true);
  }
  GanConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 3;
  const GanHandle h = TrainVanillaGan(train, cfg);
  EXPECT_GE(h.Sample(1000, 9).ColumnMeans().mean(), 0.9);
  EXPECT_EQ(h.log().size(), 200u);
}

TEST(GanTest, MatchesFairCoinMarginals) {
  const BitMatrix train = SampleDistribution(Uniform(8), 1000, 4);
  GanConfig cfg;
  cfg.seed = 5;
  cfg.epochs = 100;
  const GanHandle h = TrainVanillaGan(train, cfg);
  const VectorXd mu = h.Sample(2000, 10).ColumnMeans();
  for (Eigen::Index j = 0; j < mu.size(); ++j) EXPECT_NEAR(mu[j], 0.5, 0.1) << "column " << j;
}

TEST(GanTest, TrainingIsDeterministic) {
  const BitMatrix train = SampleDistribution(SnpDistributionSpec::Random(10, 2, 1), 128, 4);
  GanConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 8;
  const GanHandle a = TrainVanillaGan(train, cfg), b = TrainVanillaGan(train, cfg);
  EXPECT_EQ(a.generator(), b.generator());
  EXPECT_EQ(a.log(), b.log());
}

TEST(GanTest, SaveLoadRoundTrip) {
  const BitMatrix train = SampleDistribution(SnpDistributionSpec::Random(10, 2, 1), 64, 4);
  GanConfig cfg;
  cfg.epochs = 3;
  const GanHandle a = TrainVanillaGan(train, cfg);
  const std::string dir = (std::filesystem::temp_directory_path() / "mia_gan_test").string();
  SaveGan(a, dir);
  const GanHandle b = LoadGan(dir);
  EXPECT_EQ(a.generator(), b.generator());
  EXPECT_EQ(a.discriminator(), b.discriminator());
  EXPECT_EQ(a.latent_dim(), b.latent_dim());
  EXPECT_EQ(a.Sample(20, 1), b.Sample(20, 1));
  std::filesystem::remove_all(dir);
}

TEST(GanTest, EmptyTrainRejected) {
  EXPECT_THROW(TrainVanillaGan(BitMatrix(0, 4), GanConfig{}), InvalidInputError);
}

// The attack-facing handle offers sampling only.
template <typename T>
concept HasDensity = requires(const T& t, BitRow x) { t.DensityG(x); };
static_assert(!HasDensity<GanHandle>);
static_assert(HasDensity<OracleMixtureGenerator>);
static_assert(std::is_abstract_v<Sampler>);

}  // namespace
}  // namespace mia
