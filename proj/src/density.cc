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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mia/errors.h"
#include "mia/rng.h"

namespace mia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void FixSign(Eigen::Ref<VectorXd> v) {
  Index arg = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  }
  if (v[arg] < 0) v = -v;
}

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
constexpr double kMinComponentWeight = 1e-8;

// Per-row log N(x; mean_c, diag(var_c)) for every component: n x K.
MatrixXd ComponentLogDensities(const GmmModel& g, const MatrixXd& x) {
  const Index n = x.rows();
  const Index K = g.means.rows();
  MatrixXd out(n, K);
  for (Index c = 0; c < K; ++c) {
    const Eigen::RowVectorXd mu = g.means.row(c);
    const Eigen::RowVectorXd inv = g.variances.row(c).cwiseInverse();
    const double log_norm = -0.5 * (static_cast<double>(g.means.cols()) * kLog2Pi +
                                    g.variances.row(c).array().log().sum());
    out.col(c) = (-0.5 * ((x.rowwise() - mu).array().square().rowwise() * inv.array())
                             .rowwise()
                             .sum())
                     .matrix()
                     .array() +
                 log_norm;
  }
  return out;
}

// Row-wise log-sum-exp of (component log-density + log weight); fills the
// posterior responsibilities.
VectorXd EStep(const GmmModel& g, const MatrixXd& x, MatrixXd* resp) {
  MatrixXd lp = ComponentLogDensities(g, x);
  for (Index c = 0; c < lp.cols(); ++c) {
    lp.col(c).array() += g.weights[c] > 0 ? std::log(g.weights[c])
                                          : -std::numeric_limits<double>::infinity();
  }
  VectorXd ll(lp.rows());
  for (Index i = 0; i < lp.rows(); ++i) {
    const double m = lp.row(i).maxCoeff();
    const double s = (lp.row(i).array() - m).exp().sum();
    ll[i] = m + std::log(s);
    if (resp) resp->row(i) = (lp.row(i).array() - ll[i]).exp();
  }
  return ll;
}

Index KmeansPlusPlusPick(const MatrixXd& x, const std::vector<Index>& chosen, Rng& rng) {
  std::vector<double> d2(static_cast<size_t>(x.rows()), std::numeric_limits<double>::infinity());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index c : chosen) {
      d2[static_cast<size_t>(i)] =
          std::min(d2[static_cast<size_t>(i)], (x.row(i) - x.row(c)).squaredNorm());
    }
  }
  double total = 0;
  for (double v : d2) total += v;
  if (!(total > 0)) return static_cast<Index>(rng.Below(static_cast<uint64_t>(x.rows())));
  return static_cast<Index>(rng.Categorical(d2));
}

}  // namespace

MatrixXd PcaModel::Transform(const MatrixXd& rows) const {
  if (static_cast<size_t>(rows.cols()) != input_dim()) {
    throw InvalidInputError("PCA transform: row dimension mismatch");
  }
  return (rows.rowwise() - mean.transpose()) * components.transpose();
}

MatrixXd PcaModel::InverseTransform(const MatrixXd& projected) const {
  if (projected.cols() != components.rows()) {
    throw InvalidInputError("PCA inverse transform: component count mismatch");
  }
  return (projected * components).rowwise() + mean.transpose();
}

PcaModel FitPca(const MatrixXd& data, size_t k) {
  const Index n = data.rows();
  const Index d = data.cols();
  if (n < 2) throw InvalidInputError("FitPca: need at least 2 rows");
  if (k == 0 || k > static_cast<size_t>(std::min<Index>(n - 1, d))) {
    throw InvalidInputError("FitPca: k=" + std::to_string(k) + " must be in [1, min(n-1, d)]");
  }
  PcaModel m;
  m.mean = data.colwise().mean().transpose();
  const MatrixXd centered = data.rowwise() - m.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  const Index kk = static_cast<Index>(k);
  m.components.resize(kk, d);
  m.explained_variance.resize(kk);

  bool use_gram = n < d;
  if (use_gram) {
    const MatrixXd gram = centered * centered.transpose() / denom;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    for (Index i = 0; i < kk; ++i) {
      const Index src = n - 1 - i;
      VectorXd v = centered.transpose() * es.eigenvectors().col(src);
      const double norm = v.norm();
      if (!(norm > 1e-12)) {
        use_gram = false;  // rank-deficient; redo via covariance
        break;
      }
      m.components.row(i) = (v / norm).transpose();
      m.explained_variance[i] = std::max(0.0, es.eigenvalues()[src]);
    }
    if (use_gram) {
      // One Gram-Schmidt pass removes the round-off from the back-projection.
      for (Index i = 0; i < kk; ++i) {
        for (Index j = 0; j < i; ++j) {
          m.components.row(i) -= m.components.row(i).dot(m.components.row(j)) * m.components.row(j);
        }
        m.components.row(i).normalize();
      }
    }
  }
  if (!use_gram) {
    const MatrixXd cov = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    for (Index i = 0; i < kk; ++i) {
      const Index src = d - 1 - i;
      m.components.row(i) = es.eigenvectors().col(src).transpose();
      m.explained_variance[i] = std::max(0.0, es.eigenvalues()[src]);
    }
  }
  for (Index i = 0; i < kk; ++i) {
    VectorXd row = m.components.row(i).transpose();
    FixSign(row);
    m.components.row(i) = row.transpose();
  }
  return m;
}

size_t DefaultPcaComponents(size_t dimension) { return dimension <= 1000 ? 100 : 300; }

double GmmModel::LogDensity(const VectorXd& x) const {
  if (static_cast<size_t>(x.size()) != dimension()) {
    throw InvalidInputError("GMM log density: dimension mismatch");
  }
  return LogDensities(x.transpose())[0];
}

VectorXd GmmModel::LogDensities(const MatrixXd& rows) const {
  if (static_cast<size_t>(rows.cols()) != dimension()) {
    throw InvalidInputError("GMM log density: dimension mismatch");
  }
  return EStep(*this, rows, nullptr);
}

GmmFit FitGmm(const MatrixXd& data, const GmmFitOptions& options) {
  const Index n = data.rows();
  const Index dim = data.cols();
  const Index K = static_cast<Index>(options.components);
  if (K < 1) throw InvalidInputError("FitGmm: need at least one component");
  if (n < K) throw InvalidInputError("FitGmm: need n >= K");
  if (dim < 1) throw InvalidInputError("FitGmm: zero-dimensional data");

  Rng rng(DeriveSeed(options.seed, "gmm_init"));
  const VectorXd global_mean = data.colwise().mean().transpose();
  const VectorXd global_var =
      ((data.rowwise() - global_mean.transpose()).array().square().colwise().sum() /
       static_cast<double>(n))
          .matrix()
          .transpose()
          .cwiseMax(kGmmVarianceFloor);

  GmmFit fit;
  GmmModel& g = fit.model;
  g.weights = VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  g.means.resize(K, dim);
  g.variances.resize(K, dim);
  std::vector<Index> chosen;
  chosen.push_back(static_cast<Index>(rng.Below(static_cast<uint64_t>(n))));
  while (static_cast<Index>(chosen.size()) < K) chosen.push_back(KmeansPlusPlusPick(data, chosen, rng));
  for (Index c = 0; c < K; ++c) {
    g.means.row(c) = data.row(chosen[static_cast<size_t>(c)]);
    g.variances.row(c) = global_var.transpose();
  }

  MatrixXd resp(n, K);
  bool reseeded = false;
  double prev = -std::numeric_limits<double>::infinity();
  for (size_t it = 0; it < options.max_iters; ++it) {
    const double ll = EStep(g, data, &resp).mean();
    fit.diagnostics.log_likelihood.push_back(ll);
    fit.diagnostics.iterations = it + 1;
    if (it > 0 && ll - prev < options.tol && !(fit.diagnostics.reseed_iteration == it)) {
      fit.diagnostics.converged = true;
      break;
    }
    prev = ll;

    const VectorXd nk = resp.colwise().sum().transpose();
    std::vector<Index> degenerate;
    for (Index c = 0; c < K; ++c) {
      if (nk[c] / static_cast<double>(n) < kMinComponentWeight) {
        degenerate.push_back(c);
        continue;
      }
      g.weights[c] = nk[c] / static_cast<double>(n);
      g.means.row(c) = (resp.col(c).transpose() * data) / nk[c];
      const MatrixXd diff = data.rowwise() - g.means.row(c);
      g.variances.row(c) =
          ((diff.array().square().colwise() * resp.col(c).array()).colwise().sum() / nk[c])
              .matrix()
              .cwiseMax(kGmmVarianceFloor);
    }
    if (!degenerate.empty()) {
      if (!reseeded) {
        reseeded = true;
        fit.diagnostics.reseed_iteration = it + 1;
        std::vector<Index> live;
        for (Index c = 0; c < K; ++c) {
          if (std::find(degenerate.begin(), degenerate.end(), c) == degenerate.end()) {
            live.push_back(chosen[static_cast<size_t>(c)]);
          }
        }
        for (Index c : degenerate) {
          const Index pick = KmeansPlusPlusPick(data, live, rng);
          live.push_back(pick);
          g.means.row(c) = data.row(pick);
          g.variances.row(c) = global_var.transpose();
          g.weights[c] = 1.0 / static_cast<double>(K);
        }
        prev = -std::numeric_limits<double>::infinity();
      } else {
        fit.diagnostics.degenerate_components.assign(degenerate.begin(), degenerate.end());
        for (Index c : degenerate) g.weights[c] = nk[c] / static_cast<double>(n);
      }
    }
    g.weights /= g.weights.sum();
  }
  return fit;
}

nlohmann::json PcaToJson(const PcaModel& pca) {
  nlohmann::json j;
  j["format"] = "mia-pca";
  j["version"] = 1;
  j["mean"] = std::vector<double>(pca.mean.data(), pca.mean.data() + pca.mean.size());
  j["explained_variance"] = std::vector<double>(
      pca.explained_variance.data(), pca.explained_variance.data() + pca.explained_variance.size());
  nlohmann::json comps = nlohmann::json::array();
  for (Index r = 0; r < pca.components.rows(); ++r) {
    std::vector<double> row(static_cast<size_t>(pca.components.cols()));
    for (Index c = 0; c < pca.components.cols(); ++c) row[static_cast<size_t>(c)] = pca.components(r, c);
    comps.push_back(row);
  }
  j["components"] = comps;
  return j;
}

namespace {

VectorXd ToVector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

MatrixXd ToMatrix(const nlohmann::json& j, Index cols) {
  MatrixXd m(static_cast<Index>(j.size()), cols);
  for (Index r = 0; r < m.rows(); ++r) {
    const auto row = j.at(static_cast<size_t>(r)).get<std::vector<double>>();
    if (static_cast<Index>(row.size()) != cols) throw InvalidInputError("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<size_t>(c)];
  }
  return m;
}

nlohmann::json FromMatrix(const MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<size_t>(m.cols()));
    for (Index c = 0; c < m.cols(); ++c) row[static_cast<size_t>(c)] = m(r, c);
    out.push_back(row);
  }
  return out;
}

}  // namespace

PcaModel PcaFromJson(const nlohmann::json& j) {
  if (j.value("format", "") != "mia-pca" || j.value("version", 0) != 1) {
    throw InvalidInputError("not a version-1 PCA document");
  }
  PcaModel m;
  m.mean = ToVector(j.at("mean"));
  m.explained_variance = ToVector(j.at("explained_variance"));
  m.components = ToMatrix(j.at("components"), m.mean.size());
  return m;
}

nlohmann::json GmmToJson(const GmmModel& gmm) {
  nlohmann::json j;
  j["format"] = "mia-gmm";
  j["version"] = 1;
  j["weights"] = std::vector<double>(gmm.weights.data(), gmm.weights.data() + gmm.weights.size());
  j["means"] = FromMatrix(gmm.means);
  j["variances"] = FromMatrix(gmm.variances);
  return j;
}

GmmModel GmmFromJson(const nlohmann::json& j) {
  if (j.value("format", "") != "mia-gmm" || j.value("version", 0) != 1) {
    throw InvalidInputError("not a version-1 GMM document");
  }
  GmmModel g;
  g.weights = ToVector(j.at("weights"));
  const Index cols = j.at("means").empty() ? 0 : static_cast<Index>(j.at("means").at(0).size());
  g.means = ToMatrix(j.at("means"), cols);
  g.variances = ToMatrix(j.at("variances"), cols);
  return g;
}

}  // namespace mia
