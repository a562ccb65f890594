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

#ifndef MIA_NN_H_
#define MIA_NN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mia {

enum class Activation : uint32_t { kIdentity = 0, kRelu = 1, kSigmoid = 2 };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;

  size_t in() const { return static_cast<size_t>(weight.cols()); }
  size_t out() const { return static_cast<size_t>(weight.rows()); }
  bool operator==(const DenseLayer& o) const {
    return activation == o.activation && weight == o.weight && bias == o.bias;
  }
};

// Per-layer inputs and pre-activations recorded by a forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;          // inputs[i] feeds layer i
  std::vector<Eigen::MatrixXd> pre_activations;  // one per layer
  Eigen::MatrixXd output;
};

// Same shapes as the model parameters, plus the gradient with respect to the
// batch input (needed to chain a generator through a discriminator).
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
  Eigen::MatrixXd input;

  double SquaredNorm() const;
};

// Dense feed-forward network. Rows of a batch are examples.
class Mlp {
 public:
  Mlp() = default;

  // `dims` = {in, h1, ..., out}; one activation per layer. Weights are drawn
  // uniformly from +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
  static Mlp Create(std::span<const size_t> dims,
                    std::span<const Activation> activations, uint64_t seed);
  // ReLU hidden layers and a single sigmoid output.
  static Mlp Classifier(size_t input_dim, std::span<const size_t> hidden,
                        uint64_t seed);
  static Mlp FromLayers(std::vector<DenseLayer> layers, uint64_t seed = 0);

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& batch) const;
  ForwardCache ForwardWithCache(const Eigen::MatrixXd& batch) const;

  size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in(); }
  size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out(); }
  size_t num_parameters() const;
  bool AllFinite() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  uint64_t seed() const { return seed_; }

  bool operator==(const Mlp& o) const = default;

 private:
  void Validate() const;

  std::vector<DenseLayer> layers_;
  uint64_t seed_ = 0;
};

inline constexpr double kBceClip = 1e-7;

// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
double BceLoss(std::span<const double> predictions, std::span<const double> labels);

// Backpropagates dL/d(output activations).
Gradients BackwardFromOutputGrad(const Mlp& model, const ForwardCache& cache,
                                 const Eigen::MatrixXd& output_grad);
// Backpropagates dL/d(final pre-activation); skips the final activation's
// derivative, which is how sigmoid + BCE stays stable at saturation.
Gradients BackwardFromLogitGrad(const Mlp& model, const ForwardCache& cache,
                                const Eigen::MatrixXd& logit_grad);

// Gradient of the mean BCE of a sigmoid-output model on (batch, labels).
Gradients BceBackprop(const Mlp& model, const Eigen::MatrixXd& batch,
                      const Eigen::VectorXd& labels);
double MeanBce(const Mlp& model, const Eigen::MatrixXd& batch,
               const Eigen::VectorXd& labels);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment state is shaped after the model given at
// construction.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const Mlp& model, AdamConfig config);

  void Step(Mlp& model, const Gradients& grads, double learning_rate);
  uint64_t step_count() const { return step_; }

 private:
  AdamConfig config_;
  uint64_t step_ = 0;
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::VectorXd> m_b_, v_b_;
};

struct TrainConfig {
  size_t epochs = 150;
  size_t batch_size = 100;
  double learning_rate = 1e-3;
  AdamConfig adam;
  size_t patience = 10;
  // On a plateau of max(1, patience / 2) epochs the rate is multiplied by
  // this factor. Ignored when lr_decay is false.
  double lr_decay_factor = 0.5;
  bool lr_decay = true;
  size_t resample_period = 3;
  double val_fraction = 0.2;
  std::vector<size_t> hidden_units = {512};
  uint64_t seed = 0;

  void Validate() const;
  bool operator==(const TrainConfig& o) const;
};

struct EpochRecord {
  double train_loss = 0;
  double val_loss = 0;
  double val_accuracy = 0;
  double learning_rate = 0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  size_t best_epoch = 0;
  bool stopped_early = false;
  bool operator==(const TrainHistory&) const = default;
};

struct LabeledData {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;  // 0 or 1
};

// Returns a fresh set of positive-class rows; called with the epoch index at
// every resample point.
using ResampleHook = std::function<Eigen::MatrixXd(size_t epoch)>;

struct TrainedClassifier {
  Mlp model;
  TrainHistory history;
};

// Mini-batch Adam on BCE with a validation split, early stopping, plateau
// learning-rate decay and best-weights restoration. With a hook the positive
// class is redrawn and the data re-split every resample_period epochs.
TrainedClassifier TrainClassifier(const LabeledData& data, const TrainConfig& config,
                                  const ResampleHook& resample = nullptr);

// Binary container: "MIAMLP01" magic, u32 version, u64 seed, u32 layer count,
// then per layer u32 in, u32 out, u32 activation, out*in f64 weights
// (row-major) and out f64 biases. All integers and floats little-endian.
std::string SerializeMlp(const Mlp& model);
Mlp DeserializeMlp(std::string_view bytes);
void SaveMlp(const Mlp& model, const std::string& path);
Mlp LoadMlp(const std::string& path);

}  // namespace mia

#endif  // MIA_NN_H_
