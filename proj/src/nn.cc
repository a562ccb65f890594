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

#include "mia/nn.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "mia/errors.h"
#include "mia/io.h"
#include "mia/rng.h"

namespace mia {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd Apply(Activation a, const MatrixXd& z) {
  switch (a) {
    case Activation::kIdentity:
      return z;
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kSigmoid:
      return z.unaryExpr([](double v) {
        // Split by sign so exp never overflows.
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
  }
  return z;
}

// Multiplies an upstream gradient by the activation derivative at z.
MatrixXd ActivationBackward(Activation a, const MatrixXd& z, const MatrixXd& upstream) {
  switch (a) {
    case Activation::kIdentity:
      return upstream;
    case Activation::kRelu:
      return upstream.cwiseProduct(
          z.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; }));
    case Activation::kSigmoid: {
      const MatrixXd s = Apply(Activation::kSigmoid, z);
      return upstream.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
    }
  }
  return upstream;
}

void CheckFinite(const MatrixXd& m, const char* what, int layer) {
  if (!m.allFinite()) {
    throw NumericalError(std::string("non-finite ") + what + " at layer " +
                             std::to_string(layer),
                         layer);
  }
}

Gradients BackwardFrom(const Mlp& model, const ForwardCache& cache, MatrixXd delta,
                       size_t last) {
  const auto& layers = model.layers();
  Gradients g;
  g.weight.resize(layers.size());
  g.bias.resize(layers.size());
  for (size_t k = last + 1; k-- > 0;) {
    if (k != last) {
      delta = ActivationBackward(layers[k].activation, cache.pre_activations[k], delta);
    }
    CheckFinite(delta, "gradient", static_cast<int>(k));
    g.weight[k] = delta.transpose() * cache.inputs[k];
    g.bias[k] = delta.colwise().sum().transpose();
    delta = delta * layers[k].weight;
  }
  g.input = std::move(delta);
  return g;
}

MatrixXd GatherRows(const MatrixXd& m, std::span<const size_t> idx) {
  MatrixXd out(static_cast<Index>(idx.size()), m.cols());
  for (size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = m.row(static_cast<Index>(idx[r]));
  return out;
}

VectorXd GatherRows(const VectorXd& v, std::span<const size_t> idx) {
  VectorXd out(static_cast<Index>(idx.size()));
  for (size_t r = 0; r < idx.size(); ++r) out[static_cast<Index>(r)] = v[static_cast<Index>(idx[r])];
  return out;
}

}  // namespace

double Gradients::SquaredNorm() const {
  double s = 0;
  for (const auto& w : weight) s += w.squaredNorm();
  for (const auto& b : bias) s += b.squaredNorm();
  return s;
}

Mlp Mlp::Create(std::span<const size_t> dims, std::span<const Activation> activations,
                uint64_t seed) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw InvalidInputError("Mlp::Create: need dims.size() == activations.size() + 1 >= 2");
  }
  Rng rng(seed);
  Mlp m;
  m.seed_ = seed;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw InvalidInputError("Mlp::Create: zero width");
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
    DenseLayer layer;
    layer.weight.resize(static_cast<Index>(dims[i + 1]), static_cast<Index>(dims[i]));
    for (Index r = 0; r < layer.weight.rows(); ++r) {
      for (Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = (2.0 * rng.Uniform() - 1.0) * limit;
      }
    }
    layer.bias = VectorXd::Zero(static_cast<Index>(dims[i + 1]));
    layer.activation = activations[i];
    m.layers_.push_back(std::move(layer));
  }
  return m;
}

Mlp Mlp::Classifier(size_t input_dim, std::span<const size_t> hidden, uint64_t seed) {
  std::vector<size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  std::vector<Activation> acts(hidden.size(), Activation::kRelu);
  acts.push_back(Activation::kSigmoid);
  return Create(dims, acts, seed);
}

Mlp Mlp::FromLayers(std::vector<DenseLayer> layers, uint64_t seed) {
  Mlp m;
  m.layers_ = std::move(layers);
  m.seed_ = seed;
  m.Validate();
  return m;
}

void Mlp::Validate() const {
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].bias.size() != layers_[i].weight.rows()) {
      throw InvalidInputError("layer " + std::to_string(i) + ": bias size mismatch");
    }
    if (i > 0 && layers_[i].in() != layers_[i - 1].out()) {
      throw InvalidInputError("layer " + std::to_string(i) + ": dimensions do not chain");
    }
  }
}

size_t Mlp::num_parameters() const {
  size_t n = 0;
  for (const auto& l : layers_) n += static_cast<size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Mlp::AllFinite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

Eigen::MatrixXd Mlp::Forward(const MatrixXd& batch) const {
  if (layers_.empty()) throw InvalidInputError("Forward: empty model");
  if (static_cast<size_t>(batch.cols()) != input_dim()) {
    throw InvalidInputError("Forward: batch has " + std::to_string(batch.cols()) +
                            " columns, model expects " + std::to_string(input_dim()));
  }
  MatrixXd x = batch;
  for (const auto& l : layers_) {
    MatrixXd z = x * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    x = Apply(l.activation, z);
  }
  return x;
}

ForwardCache Mlp::ForwardWithCache(const MatrixXd& batch) const {
  if (layers_.empty()) throw InvalidInputError("Forward: empty model");
  if (static_cast<size_t>(batch.cols()) != input_dim()) {
    throw InvalidInputError("Forward: batch has " + std::to_string(batch.cols()) +
                            " columns, model expects " + std::to_string(input_dim()));
  }
  ForwardCache c;
  MatrixXd x = batch;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    MatrixXd z = x * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    CheckFinite(z, "pre-activation", static_cast<int>(i));
    MatrixXd a = Apply(l.activation, z);
    c.inputs.push_back(std::move(x));
    c.pre_activations.push_back(std::move(z));
    x = std::move(a);
  }
  c.output = std::move(x);
  return c;
}

double BceLoss(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.empty()) throw InvalidInputError("BceLoss: empty input");
  if (predictions.size() != labels.size()) {
    throw InvalidInputError("BceLoss: length mismatch");
  }
  double total = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], kBceClip, 1.0 - kBceClip);
    const double y = labels[i];
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(predictions.size());
}

Gradients BackwardFromOutputGrad(const Mlp& model, const ForwardCache& cache,
                                 const MatrixXd& output_grad) {
  const size_t last = model.layers().size() - 1;
  MatrixXd delta = ActivationBackward(model.layers()[last].activation,
                                      cache.pre_activations[last], output_grad);
  return BackwardFrom(model, cache, std::move(delta), last);
}

Gradients BackwardFromLogitGrad(const Mlp& model, const ForwardCache& cache,
                                const MatrixXd& logit_grad) {
  return BackwardFrom(model, cache, logit_grad, model.layers().size() - 1);
}

Gradients BceBackprop(const Mlp& model, const MatrixXd& batch, const VectorXd& labels) {
  if (model.output_dim() != 1 || model.layers().back().activation != Activation::kSigmoid) {
    throw InvalidInputError("BceBackprop: model must end in a single sigmoid unit");
  }
  if (batch.rows() != labels.size() || batch.rows() == 0) {
    throw InvalidInputError("BceBackprop: batch/label size mismatch");
  }
  ForwardCache cache = model.ForwardWithCache(batch);
  // d/dz of mean BCE(sigmoid(z), y) is (p - y) / n.
  MatrixXd logit_grad = (cache.output.col(0) - labels) / static_cast<double>(batch.rows());
  return BackwardFromLogitGrad(model, cache, logit_grad);
}

double MeanBce(const Mlp& model, const MatrixXd& batch, const VectorXd& labels) {
  const MatrixXd p = model.Forward(batch);
  return BceLoss(std::span<const double>(p.data(), static_cast<size_t>(p.rows())),
                 std::span<const double>(labels.data(), static_cast<size_t>(labels.size())));
}

AdamOptimizer::AdamOptimizer(const Mlp& model, AdamConfig config) : config_(config) {
  for (const auto& l : model.layers()) {
    m_w_.push_back(MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    v_w_.push_back(MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    m_b_.push_back(VectorXd::Zero(l.bias.size()));
    v_b_.push_back(VectorXd::Zero(l.bias.size()));
  }
}

void AdamOptimizer::Step(Mlp& model, const Gradients& grads, double learning_rate) {
  auto& layers = model.mutable_layers();
  if (grads.weight.size() != layers.size() || m_w_.size() != layers.size()) {
    throw InvalidInputError("Adam: gradient/parameter layer count mismatch");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (size_t k = 0; k < layers.size(); ++k) {
    if (grads.weight[k].rows() != layers[k].weight.rows() ||
        grads.weight[k].cols() != layers[k].weight.cols() ||
        grads.bias[k].size() != layers[k].bias.size()) {
      throw InvalidInputError("Adam: gradient shape mismatch at layer " + std::to_string(k));
    }
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = config_.beta1 * m + (1.0 - config_.beta1) * g;
      v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
      param.array() -= learning_rate * (m.array() / c1) /
                       ((v.array() / c2).sqrt() + config_.epsilon);
    };
    update(layers[k].weight, m_w_[k], v_w_[k], grads.weight[k]);
    update(layers[k].bias, m_b_[k], v_b_[k], grads.bias[k]);
    if (!layers[k].weight.allFinite() || !layers[k].bias.allFinite()) {
      throw NumericalError("Adam step produced non-finite parameters at layer " +
                               std::to_string(k),
                           static_cast<int>(k));
    }
  }
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw InvalidInputError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw InvalidInputError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0)) throw InvalidInputError("TrainConfig: learning_rate must be > 0");
  if (!(val_fraction > 0 && val_fraction < 1)) {
    throw InvalidInputError("TrainConfig: val_fraction must lie in (0, 1)");
  }
  if (resample_period < 1) throw InvalidInputError("TrainConfig: resample_period must be >= 1");
}

bool TrainConfig::operator==(const TrainConfig& o) const {
  return epochs == o.epochs && batch_size == o.batch_size &&
         learning_rate == o.learning_rate && adam.beta1 == o.adam.beta1 &&
         adam.beta2 == o.adam.beta2 && adam.epsilon == o.adam.epsilon &&
         patience == o.patience && lr_decay_factor == o.lr_decay_factor &&
         lr_decay == o.lr_decay && resample_period == o.resample_period &&
         val_fraction == o.val_fraction && hidden_units == o.hidden_units && seed == o.seed;
}

TrainedClassifier TrainClassifier(const LabeledData& data, const TrainConfig& config,
                                  const ResampleHook& resample) {
  config.Validate();
  const Index n = data.features.rows();
  if (n != data.labels.size() || n < 2) {
    throw InvalidInputError("TrainClassifier: need >= 2 rows with one label each");
  }
  const Index positives = (data.labels.array() > 0.5).count();
  if (positives == 0 || positives == n) {
    throw InvalidInputError("TrainClassifier: data must contain both classes");
  }

  // Negatives stay fixed; positives are replaced on resampling.
  std::vector<size_t> negative_rows;
  for (Index i = 0; i < n; ++i) {
    if (data.labels[i] <= 0.5) negative_rows.push_back(static_cast<size_t>(i));
  }
  const MatrixXd negatives = GatherRows(data.features, negative_rows);
  const Index dim = data.features.cols();

  Rng rng(DeriveSeed(config.seed, "train_classifier"));
  MatrixXd features = data.features;
  VectorXd labels = data.labels;
  std::vector<size_t> train_idx, val_idx;
  auto split = [&] {
    const size_t total = static_cast<size_t>(features.rows());
    std::vector<size_t> perm = rng.Permutation(total);
    size_t n_val = static_cast<size_t>(std::llround(config.val_fraction * static_cast<double>(total)));
    n_val = std::clamp<size_t>(n_val, 1, total - 1);
    val_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  };
  split();

  Mlp model = Mlp::Classifier(static_cast<size_t>(dim), config.hidden_units,
                              DeriveSeed(config.seed, "init"));
  AdamOptimizer adam(model, config.adam);
  Mlp best = model;
  double best_val = std::numeric_limits<double>::infinity();
  double lr = config.learning_rate;
  size_t since_improve = 0;
  size_t since_decay = 0;
  const size_t decay_window = std::max<size_t>(1, config.patience / 2);
  TrainHistory history;
  MatrixXd val_x = GatherRows(features, val_idx);
  VectorXd val_y = GatherRows(labels, val_idx);

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (resample && epoch > 0 && epoch % config.resample_period == 0) {
      const MatrixXd fresh = resample(epoch);
      if (fresh.cols() != dim || fresh.rows() == 0) {
        throw InvalidInputError("TrainClassifier: resample hook returned wrong shape");
      }
      features.resize(negatives.rows() + fresh.rows(), dim);
      features << negatives, fresh;
      labels.resize(features.rows());
      labels.head(negatives.rows()).setZero();
      labels.tail(fresh.rows()).setOnes();
      split();
      val_x = GatherRows(features, val_idx);
      val_y = GatherRows(labels, val_idx);
    }

    rng.Shuffle(train_idx);
    double loss_sum = 0;
    for (size_t start = 0; start < train_idx.size(); start += config.batch_size) {
      const size_t end = std::min(train_idx.size(), start + config.batch_size);
      std::span<const size_t> idx(train_idx.data() + start, end - start);
      const MatrixXd bx = GatherRows(features, idx);
      const VectorXd by = GatherRows(labels, idx);
      ForwardCache cache = model.ForwardWithCache(bx);
      const auto p = cache.output.col(0);
      loss_sum += BceLoss(std::span<const double>(p.data(), idx.size()),
                          std::span<const double>(by.data(), idx.size())) *
                  static_cast<double>(idx.size());
      MatrixXd logit_grad = (cache.output.col(0) - by) / static_cast<double>(idx.size());
      adam.Step(model, BackwardFromLogitGrad(model, cache, logit_grad), lr);
    }

    EpochRecord rec;
    rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
    const MatrixXd vp = model.Forward(val_x);
    rec.val_loss = BceLoss(std::span<const double>(vp.data(), static_cast<size_t>(vp.rows())),
                           std::span<const double>(val_y.data(), static_cast<size_t>(val_y.size())));
    Index correct = 0;
    for (Index i = 0; i < vp.rows(); ++i) correct += ((vp(i, 0) >= 0.5) == (val_y[i] > 0.5));
    rec.val_accuracy = static_cast<double>(correct) / static_cast<double>(vp.rows());
    rec.learning_rate = lr;
    history.epochs.push_back(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best = model;
      history.best_epoch = epoch;
      since_improve = 0;
      since_decay = 0;
    } else {
      ++since_improve;
      ++since_decay;
      if (since_improve >= config.patience) {
        history.stopped_early = epoch + 1 < config.epochs;
        break;
      }
      if (config.lr_decay && since_decay >= decay_window) {
        lr *= config.lr_decay_factor;
        since_decay = 0;
      }
    }
  }
  return {std::move(best), std::move(history)};
}

namespace {

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutF64(std::string& out, double v) { PutU64(out, std::bit_cast<uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  uint64_t U(int width) {
    if (pos_ + static_cast<size_t>(width) > bytes_.size()) {
      throw InvalidInputError("model file truncated");
    }
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }
  uint32_t U32() { return static_cast<uint32_t>(U(4)); }
  uint64_t U64() { return U(8); }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string_view Take(size_t n) {
    if (pos_ + n > bytes_.size()) throw InvalidInputError("model file truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

constexpr std::string_view kMlpMagic = "MIAMLP01";
constexpr uint32_t kMlpVersion = 1;

}  // namespace

std::string SerializeMlp(const Mlp& model) {
  std::string out(kMlpMagic);
  PutU32(out, kMlpVersion);
  PutU64(out, model.seed());
  PutU32(out, static_cast<uint32_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    PutU32(out, static_cast<uint32_t>(l.in()));
    PutU32(out, static_cast<uint32_t>(l.out()));
    PutU32(out, static_cast<uint32_t>(l.activation));
    for (Index r = 0; r < l.weight.rows(); ++r) {
      for (Index c = 0; c < l.weight.cols(); ++c) PutF64(out, l.weight(r, c));
    }
    for (Index r = 0; r < l.bias.size(); ++r) PutF64(out, l.bias[r]);
  }
  return out;
}

Mlp DeserializeMlp(std::string_view bytes) {
  Reader rd(bytes);
  if (rd.Take(kMlpMagic.size()) != kMlpMagic) throw InvalidInputError("not an MLP model file");
  const uint32_t version = rd.U32();
  if (version != kMlpVersion) {
    throw InvalidInputError("unsupported MLP model version " + std::to_string(version));
  }
  const uint64_t seed = rd.U64();
  const uint32_t count = rd.U32();
  std::vector<DenseLayer> layers;
  for (uint32_t k = 0; k < count; ++k) {
    const uint32_t in = rd.U32();
    const uint32_t out = rd.U32();
    const uint32_t act = rd.U32();
    if (act > 2) throw InvalidInputError("unknown activation code");
    DenseLayer l;
    l.activation = static_cast<Activation>(act);
    l.weight.resize(out, in);
    for (Index r = 0; r < l.weight.rows(); ++r) {
      for (Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = rd.F64();
    }
    l.bias.resize(out);
    for (Index r = 0; r < l.bias.size(); ++r) l.bias[r] = rd.F64();
    layers.push_back(std::move(l));
  }
  if (!rd.done()) throw InvalidInputError("trailing bytes in model file");
  return Mlp::FromLayers(std::move(layers), seed);
}

void SaveMlp(const Mlp& model, const std::string& path) {
  AtomicWriteFile(path, SerializeMlp(model));
}

Mlp LoadMlp(const std::string& path) { return DeserializeMlp(ReadFile(path)); }

}  // namespace mia
