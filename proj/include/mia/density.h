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

#ifndef MIA_DENSITY_H_
#define MIA_DENSITY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace mia {

struct PcaModel {
  Eigen::VectorXd mean;                // d
  Eigen::MatrixXd components;          // k x d, orthonormal rows
  Eigen::VectorXd explained_variance;  // k, descending

  size_t num_components() const { return static_cast<size_t>(components.rows()); }
  size_t input_dim() const { return static_cast<size_t>(mean.size()); }

  // (rows - mean) * components^T
  Eigen::MatrixXd Transform(const Eigen::MatrixXd& rows) const;
  Eigen::MatrixXd InverseTransform(const Eigen::MatrixXd& projected) const;

  bool operator==(const PcaModel& o) const {
    return mean == o.mean && components == o.components &&
           explained_variance == o.explained_variance;
  }
};

// Top-k eigenvectors of the sample covariance (n - 1 divisor), from the d x d
// covariance or the n x n Gram matrix, whichever is smaller. Each component is
// signed so its largest-magnitude entry is positive.
PcaModel FitPca(const Eigen::MatrixXd& data, size_t k);

// 100 components up to 1000 sites, 300 beyond.
size_t DefaultPcaComponents(size_t dimension);

inline constexpr double kGmmVarianceFloor = 1e-6;

struct GmmModel {
  Eigen::VectorXd weights;    // K
  Eigen::MatrixXd means;      // K x k
  Eigen::MatrixXd variances;  // K x k, diagonal covariances

  size_t num_components() const { return static_cast<size_t>(weights.size()); }
  size_t dimension() const { return static_cast<size_t>(means.cols()); }

  double LogDensity(const Eigen::VectorXd& x) const;
  Eigen::VectorXd LogDensities(const Eigen::MatrixXd& rows) const;

  bool operator==(const GmmModel& o) const {
    return weights == o.weights && means == o.means && variances == o.variances;
  }
};

struct GmmFitOptions {
  size_t components = 8;
  size_t max_iters = 200;
  double tol = 1e-6;
  uint64_t seed = 0;
};

struct GmmFitDiagnostics {
  // Mean per-point log-likelihood of the parameters entering each E-step.
  std::vector<double> log_likelihood;
  size_t iterations = 0;
  bool converged = false;
  // Set when a collapsed component was re-seeded; the likelihood trace is
  // monotone on either side of this iteration.
  std::optional<size_t> reseed_iteration;
  // Components still below the weight threshold after the single re-seed.
  std::vector<size_t> degenerate_components;
};

struct GmmFit {
  GmmModel model;
  GmmFitDiagnostics diagnostics;
};

// Diagonal-covariance EM with k-means++ seeding. Stops when the mean
// log-likelihood improves by less than tol, or after max_iters.
GmmFit FitGmm(const Eigen::MatrixXd& data, const GmmFitOptions& options);

nlohmann::json PcaToJson(const PcaModel& pca);
PcaModel PcaFromJson(const nlohmann::json& j);
nlohmann::json GmmToJson(const GmmModel& gmm);
GmmModel GmmFromJson(const nlohmann::json& j);

}  // namespace mia

#endif  // MIA_DENSITY_H_
