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

#include "mia/density.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mia/attacks.h"
#include "mia/errors.h"
#include "mia/rng.h"

namespace mia {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd Gaussian(Index n, Index d, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  MatrixXd x(n, d);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = scale * rng.Normal();
  return x;
}

// True when the trace never drops by more than 1e-9, ignoring the step into a
// re-seeded iteration.
bool MonotoneTrace(const GmmFitDiagnostics& d) {
  for (size_t i = 1; i < d.log_likelihood.size(); ++i) {
    if (d.reseed_iteration && i == *d.reseed_iteration) continue;
    if (d.log_likelihood[i] < d.log_likelihood[i - 1] - 1e-9) return false;
  }
  return true;
}

double OrthonormalityResidual(const PcaModel& m) {
  const MatrixXd q = m.components * m.components.transpose();
  return (q - MatrixXd::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff();
}

TEST(PcaTest, LineFirstComponent) {
  MatrixXd x(50, 2);
  for (Index i = 0; i < 50; ++i) x(i, 0) = x(i, 1) = static_cast<double>(i) - 20.0;
  const PcaModel m = FitPca(x, 2);
  EXPECT_NEAR(m.components(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(m.components(0, 1), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(m.explained_variance[1], 0.0, 1e-9);
}

TEST(PcaTest, IsotropicVariancesAgree) {
  const PcaModel m = FitPca(Gaussian(5000, 2, 1), 2);
  EXPECT_LT(m.explained_variance[0] / m.explained_variance[1], 1.1);
}

TEST(PcaTest, MeanMapsToZero) {
  const MatrixXd x = Gaussian(100, 5, 2);
  const PcaModel m = FitPca(x, 3);
  EXPECT_LT(m.Transform(m.mean.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PcaTest, FullRankReconstruction) {
  const MatrixXd x = Gaussian(40, 6, 3);
  const PcaModel m = FitPca(x, 6);
  EXPECT_LT((m.InverseTransform(m.Transform(x)) - x).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PcaTest, ProjectedVarianceMatchesExplained) {
  MatrixXd x = Gaussian(3000, 5, 4);
  x.col(0) *= 3.0;
  x.col(1) *= 2.0;
  const PcaModel m = FitPca(x, 3);
  const MatrixXd t = m.Transform(x);
  for (Index j = 0; j < 3; ++j) {
    const double var = (t.col(j).array() - t.col(j).mean()).square().sum() / (t.rows() - 1);
    EXPECT_NEAR(var / m.explained_variance[j], 1.0, 1e-6);
  }
  for (Index j = 1; j < 3; ++j) EXPECT_GE(m.explained_variance[j - 1], m.explained_variance[j]);
}

TEST(PcaTest, OrthonormalAndSignConventionBothRoutes) {
  // n < d uses the Gram route; n > d the covariance route.
  for (auto [n, d] : {std::pair<Index, Index>{30, 80}, std::pair<Index, Index>{200, 20}}) {
    const PcaModel m = FitPca(Gaussian(n, d, 5), 10);
    EXPECT_LT(OrthonormalityResidual(m), 1e-8);
    for (Index r = 0; r < m.components.rows(); ++r) {
      Index arg;
      m.components.row(r).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(m.components(r, arg), 0.0);
    }
  }
}

TEST(PcaTest, GramAndCovarianceRoutesAgree) {
  // Same data seen from both sides of the n-vs-d switch.
  const MatrixXd x = Gaussian(25, 24, 6);
  MatrixXd wide(25, 26);
  wide << x, MatrixXd::Zero(25, 2);
  const PcaModel a = FitPca(x, 5), b = FitPca(wide, 5);
  EXPECT_LT((a.explained_variance - b.explained_variance).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((a.components - b.components.leftCols(24)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PcaTest, InvalidComponentCountRejected) {
  const MatrixXd x = Gaussian(10, 4, 7);
  EXPECT_THROW(FitPca(x, 5), InvalidInputError);
  EXPECT_THROW(FitPca(x, 0), InvalidInputError);
  EXPECT_THROW(FitPca(Gaussian(5, 20, 1), 5), InvalidInputError);
}

TEST(PcaTest, DefaultComponents) {
  EXPECT_EQ(DefaultPcaComponents(805), 100u);
  EXPECT_EQ(DefaultPcaComponents(5000), 300u);
}

TEST(PcaTest, DimensionMismatchRejected) {
  const PcaModel m = FitPca(Gaussian(10, 4, 7), 2);
  EXPECT_THROW(m.Transform(MatrixXd::Zero(1, 3)), InvalidInputError);
}

TEST(GmmTest, SingleComponentIsClosedForm) {
  const MatrixXd x = Gaussian(500, 3, 8, 2.0);
  GmmFitOptions o;
  o.components = 1;
  const GmmFit fit = FitGmm(x, o);
  const VectorXd mean = x.colwise().mean();
  const VectorXd var = (x.rowwise() - mean.transpose()).array().square().colwise().sum() / 500.0;
  EXPECT_LT((fit.model.means.row(0).transpose() - mean).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((fit.model.variances.row(0).transpose() - var).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(fit.model.weights[0], 1.0, 1e-12);
}

TEST(GmmTest, RecoversTwoClusters) {
  MatrixXd x = Gaussian(2000, 1, 9);
  for (Index i = 0; i < 2000; ++i) x(i, 0) += i % 2 ? 5.0 : -5.0;
  GmmFitOptions o;
  o.components = 2;
  o.seed = 3;
  const GmmFit fit = FitGmm(x, o);
  const double lo = fit.model.means.col(0).minCoeff(), hi = fit.model.means.col(0).maxCoeff();
  EXPECT_NEAR(lo, -5.0, 0.2);
  EXPECT_NEAR(hi, 5.0, 0.2);
  EXPECT_NEAR(fit.model.weights[0], 0.5, 0.05);
  EXPECT_NEAR(fit.model.weights.sum(), 1.0, 1e-12);
  EXPECT_TRUE(MonotoneTrace(fit.diagnostics));
}

TEST(GmmTest, EmIsMonotoneOnManyFits) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixXd x = Gaussian(100 + static_cast<Index>(rng.Below(300)), 1 + static_cast<Index>(rng.Below(6)),
                          rng.Next());
    x.col(0).array() += (x.col(0).array() > 0).cast<double>() * 4.0;
    GmmFitOptions o;
    o.components = 1 + rng.Below(6);
    o.seed = rng.Next();
    const GmmFit fit = FitGmm(x, o);
    EXPECT_TRUE(MonotoneTrace(fit.diagnostics)) << "trial " << trial;
    EXPECT_GE(fit.model.variances.minCoeff(), kGmmVarianceFloor);
  }
}

TEST(GmmTest, VarianceFloorOnDuplicatedPoints) {
  MatrixXd x = MatrixXd::Zero(20, 2);
  x.bottomRows(10).setConstant(1.0);
  GmmFitOptions o;
  o.components = 2;
  const GmmFit fit = FitGmm(x, o);
  EXPECT_GE(fit.model.variances.minCoeff(), kGmmVarianceFloor);
  EXPECT_TRUE(fit.model.weights.allFinite());
}

TEST(GmmTest, TooFewRowsRejected) {
  GmmFitOptions o;
  o.components = 5;
  EXPECT_THROW(FitGmm(Gaussian(3, 2, 1), o), InvalidInputError);
}

GmmModel StandardNormal1d() {
  GmmModel g;
  g.weights = VectorXd::Ones(1);
  g.means = MatrixXd::Zero(1, 1);
  g.variances = MatrixXd::Ones(1, 1);
  return g;
}

TEST(GmmTest, LogDensityHandValue) {
  EXPECT_NEAR(StandardNormal1d().LogDensity(VectorXd::Zero(1)), -0.5 * std::log(2 * std::numbers::pi),
              1e-15);
  EXPECT_NEAR(StandardNormal1d().LogDensity(VectorXd::Zero(1)), -0.9189, 1e-4);
}

TEST(GmmTest, DensityIntegratesToOne) {
  GmmModel g;
  g.weights = VectorXd::Constant(2, 0.5);
  g.means.resize(2, 1);
  g.means << -1.0, 2.0;
  g.variances.resize(2, 1);
  g.variances << 0.5, 1.5;
  // Monte-Carlo with a uniform proposal on [-10, 12].
  Rng rng(11);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    VectorXd x(1);
    x[0] = -10.0 + 22.0 * rng.Uniform();
    sum += std::exp(g.LogDensity(x)) * 22.0;
  }
  EXPECT_NEAR(sum / n, 1.0, 0.02);
}

TEST(GmmTest, SymmetricModelIsEven) {
  GmmModel g;
  g.weights = VectorXd::Constant(2, 0.5);
  g.means.resize(2, 1);
  g.means << -1.5, 1.5;
  g.variances = MatrixXd::Ones(2, 1);
  for (double t : {0.1, 0.7, 2.3, 9.0}) {
    EXPECT_EQ(g.LogDensity(VectorXd::Constant(1, t)), g.LogDensity(VectorXd::Constant(1, -t)));
  }
}

TEST(DomiasScoreTest, IdenticalModelsScoreZero) {
  const MatrixXd x = Gaussian(50, 6, 12);
  const PcaModel pca = FitPca(x, 2);
  GmmFitOptions o;
  o.components = 2;
  const GmmModel g = FitGmm(pca.Transform(x), o).model;
  const BitMatrix rows = BitMatrix::FromRows({{1, 0, 1, 0, 1, 1}, {0, 0, 0, 0, 0, 0}});
  for (size_t i = 0; i < rows.rows(); ++i) EXPECT_EQ(DomiasScore(rows.Row(i), pca, g, g), 0.0);
}

TEST(DomiasScoreTest, SyntheticModelAtRowScoresPositive) {
  const BitMatrix rows = BitMatrix::FromRows({{1, 1, 0, 0}, {0, 0, 1, 1}, {1, 0, 1, 0}});
  const PcaModel pca = FitPca(rows.ToReal(), 2);
  const MatrixXd z = pca.Transform(rows.ToReal());
  GmmModel near = StandardNormal1d(), far = StandardNormal1d();
  near.means = z.row(0);
  near.variances = MatrixXd::Ones(1, 2);
  far.means = z.row(0).array() + 50.0;
  far.variances = MatrixXd::Ones(1, 2);
  EXPECT_GT(DomiasScore(rows.Row(0), pca, near, far), 0.0);
}

TEST(DomiasScoreTest, InvariantToWeightRenormalization) {
  const BitMatrix rows = BitMatrix::FromRows({{1, 1, 0, 0}, {0, 0, 1, 1}, {1, 0, 1, 0}});
  const PcaModel pca = FitPca(rows.ToReal(), 2);
  const MatrixXd z = pca.Transform(rows.ToReal());
  GmmFitOptions o;
  o.components = 1;
  const GmmModel gs = FitGmm(z.topRows(2), o).model, gr = FitGmm(z.bottomRows(2), o).model;
  // Splitting one component into two identical halves is the same density.
  auto split = [](const GmmModel& g) {
    GmmModel h;
    h.weights = VectorXd::Constant(2, 0.5);
    h.means.resize(2, g.means.cols());
    h.means << g.means, g.means;
    h.variances.resize(2, g.variances.cols());
    h.variances << g.variances, g.variances;
    return h;
  };
  for (size_t i = 0; i < rows.rows(); ++i) {
    EXPECT_NEAR(DomiasScore(rows.Row(i), pca, gs, gr), DomiasScore(rows.Row(i), pca, split(gs), split(gr)),
                1e-12);
  }
}

TEST(SerializationTest, PcaAndGmmJsonRoundTrip) {
  const MatrixXd x = Gaussian(60, 5, 13);
  const PcaModel pca = FitPca(x, 3);
  EXPECT_EQ(PcaFromJson(nlohmann::json::parse(PcaToJson(pca).dump())), pca);
  GmmFitOptions o;
  o.components = 3;
  const GmmModel g = FitGmm(pca.Transform(x), o).model;
  EXPECT_EQ(GmmFromJson(nlohmann::json::parse(GmmToJson(g).dump())), g);
}

}  // namespace
}  // namespace mia
