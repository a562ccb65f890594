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
#include <limits>

#include <json.hpp>

#include "mia/errors.h"
#include "mia/io.h"
#include "mia/math_util.h"
#include "mia/rng.h"

namespace mia {

using Eigen::Index;
using Eigen::MatrixXd;

OracleMixtureGenerator::OracleMixtureGenerator(double beta, BitMatrix train,
                                               SnpDistributionSpec base)
    : beta_(beta), train_(std::move(train)), base_(std::move(base)) {
  if (!(beta_ >= 0.0 && beta_ <= 1.0)) {
    throw InvalidInputError("OracleMixtureGenerator: beta must lie in [0, 1]");
  }
  if (train_.empty()) throw InvalidInputError("OracleMixtureGenerator: empty training set");
  if (train_.cols() != base_.dimension) {
    throw InvalidInputError("OracleMixtureGenerator: train/base dimension mismatch");
  }
  for (size_t i = 0; i < train_.rows(); ++i) ++train_counts_[Key(train_.Row(i))];
}

std::string OracleMixtureGenerator::Key(BitRow x) {
  return std::string(reinterpret_cast<const char*>(x.words.data()),
                     x.words.size() * sizeof(uint64_t));
}

BitMatrix OracleMixtureGenerator::Sample(size_t n, uint64_t seed) const {
  Rng rng(seed);
  BitMatrix out(n, dimension());
  std::span<const double> weights(base_.mixing_weights.data(),
                                  static_cast<size_t>(base_.mixing_weights.size()));
  for (size_t i = 0; i < n; ++i) {
    auto dst = out.MutableRowWords(i);
    if (rng.Uniform() < beta_) {
      auto src = train_.Row(static_cast<size_t>(rng.Below(train_.rows()))).words;
      std::copy(src.begin(), src.end(), dst.begin());
    } else {
      const auto k = static_cast<Index>(rng.Categorical(weights));
      for (size_t j = 0; j < dimension(); ++j) {
        out.Set(i, j, rng.Bernoulli(base_.frequencies(k, static_cast<Index>(j))));
      }
    }
  }
  return out;
}

MixtureLogDensities OracleMixtureGenerator::LogDensities(BitRow x) const {
  if (x.cols != dimension()) throw InvalidInputError("oracle density: dimension mismatch");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  MixtureLogDensities d;
  d.log_p = base_.LogDensity(x);
  auto it = train_counts_.find(Key(x));
  d.log_t = it == train_counts_.end()
                ? kNegInf
                : std::log(static_cast<double>(it->second) / static_cast<double>(train_.rows()));
  const double a = beta_ > 0 ? std::log(beta_) + d.log_t : kNegInf;
  const double b = beta_ < 1 ? std::log1p(-beta_) + d.log_p : kNegInf;
  d.log_g = LogAddExp(a, b);
  return d;
}

double OracleMixtureGenerator::DensityG(BitRow x) const { return std::exp(LogDensities(x).log_g); }
double OracleMixtureGenerator::DensityP(BitRow x) const { return std::exp(LogDensities(x).log_p); }
double OracleMixtureGenerator::DensityT(BitRow x) const { return std::exp(LogDensities(x).log_t); }

GanHandle::GanHandle(Mlp generator, Mlp discriminator, size_t latent_dim, uint64_t seed,
                     size_t epochs_trained, std::vector<GanEpochLog> log)
    : generator_(std::move(generator)),
      discriminator_(std::move(discriminator)),
      latent_dim_(latent_dim),
      seed_(seed),
      epochs_trained_(epochs_trained),
      log_(std::move(log)) {
  if (generator_.input_dim() != latent_dim_ ||
      discriminator_.input_dim() != generator_.output_dim() ||
      discriminator_.output_dim() != 1) {
    throw InvalidInputError("GanHandle: generator/discriminator dimensions inconsistent");
  }
}

namespace {

MatrixXd LatentBatch(Rng& rng, size_t n, size_t latent_dim) {
  MatrixXd z(static_cast<Index>(n), static_cast<Index>(latent_dim));
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = 0; j < z.cols(); ++j) z(i, j) = rng.Normal();
  }
  return z;
}

}  // namespace

BitMatrix GanHandle::Sample(size_t n, uint64_t seed) const {
  Rng rng(seed);
  BitMatrix out(n, dimension());
  constexpr size_t kChunk = 1024;
  for (size_t start = 0; start < n; start += kChunk) {
    const size_t m = std::min(kChunk, n - start);
    const MatrixXd p = generator_.Forward(LatentBatch(rng, m, latent_dim_));
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < dimension(); ++j) {
        out.Set(start + i, j, p(static_cast<Index>(i), static_cast<Index>(j)) >= 0.5);
      }
    }
  }
  return out;
}

GanHandle TrainVanillaGan(const BitMatrix& train, const GanConfig& config) {
  if (train.empty()) throw InvalidInputError("TrainVanillaGan: empty training set");
  if (config.latent_dim == 0 || config.batch_size == 0 || !(config.learning_rate > 0)) {
    throw InvalidInputError("TrainVanillaGan: latent_dim, batch_size and lr must be positive");
  }
  const size_t d = train.cols();
  std::vector<size_t> gdims{config.latent_dim};
  gdims.insert(gdims.end(), config.hidden_units.begin(), config.hidden_units.end());
  gdims.push_back(d);
  std::vector<Activation> gacts(config.hidden_units.size(), Activation::kRelu);
  gacts.push_back(Activation::kSigmoid);
  Mlp gen = Mlp::Create(gdims, gacts, DeriveSeed(config.seed, "gan_generator"));
  Mlp disc = Mlp::Classifier(d, config.hidden_units, DeriveSeed(config.seed, "gan_discriminator"));
  AdamOptimizer gen_opt(gen, config.adam);
  AdamOptimizer disc_opt(disc, config.adam);
  Rng rng(DeriveSeed(config.seed, "gan_training"));
  const MatrixXd real_all = train.ToReal();
  std::vector<GanEpochLog> log;

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<size_t> perm = rng.Permutation(train.rows());
    GanEpochLog rec;
    size_t batches = 0;
    for (size_t start = 0; start < perm.size(); start += config.batch_size) {
      const size_t b = std::min(config.batch_size, perm.size() - start);
      MatrixXd batch(static_cast<Index>(2 * b), static_cast<Index>(d));
      for (size_t i = 0; i < b; ++i) {
        batch.row(static_cast<Index>(i)) = real_all.row(static_cast<Index>(perm[start + i]));
      }
      batch.bottomRows(static_cast<Index>(b)) = gen.Forward(LatentBatch(rng, b, config.latent_dim));
      Eigen::VectorXd labels(static_cast<Index>(2 * b));
      labels.head(static_cast<Index>(b)).setOnes();
      labels.tail(static_cast<Index>(b)).setZero();
      ForwardCache dcache = disc.ForwardWithCache(batch);
      const auto dp = dcache.output.col(0);
      rec.discriminator_loss += BceLoss(std::span<const double>(dp.data(), 2 * b),
                                        std::span<const double>(labels.data(), 2 * b));
      disc_opt.Step(disc,
                    BackwardFromLogitGrad(disc, dcache, (dcache.output.col(0) - labels) /
                                                            static_cast<double>(2 * b)),
                    config.learning_rate);

      ForwardCache gcache = gen.ForwardWithCache(LatentBatch(rng, b, config.latent_dim));
      ForwardCache fcache = disc.ForwardWithCache(gcache.output);
      const Eigen::VectorXd s = fcache.output.col(0);
      Eigen::VectorXd logit_grad(static_cast<Index>(b));
      double gloss = 0;
      for (Index i = 0; i < s.size(); ++i) {
        const double p = std::clamp(s[i], kBceClip, 1.0 - kBceClip);
        if (config.loss == GeneratorLoss::kNonSaturating) {
          logit_grad[i] = (s[i] - 1.0) / static_cast<double>(b);
          gloss -= std::log(p);
        } else {
          logit_grad[i] = -s[i] / static_cast<double>(b);
          gloss += std::log(1.0 - p);
        }
      }
      rec.generator_loss += gloss / static_cast<double>(b);
      const Gradients through_disc = BackwardFromLogitGrad(disc, fcache, logit_grad);
      gen_opt.Step(gen, BackwardFromOutputGrad(gen, gcache, through_disc.input),
                   config.learning_rate);
      ++batches;
    }
    rec.discriminator_loss /= static_cast<double>(batches);
    rec.generator_loss /= static_cast<double>(batches);
    if (!std::isfinite(rec.discriminator_loss) || !std::isfinite(rec.generator_loss)) {
      throw NumericalError("GAN training diverged at epoch " + std::to_string(epoch) +
                           ": discriminator loss " + FormatDouble(rec.discriminator_loss) +
                           ", generator loss " + FormatDouble(rec.generator_loss));
    }
    log.push_back(rec);
  }
  return GanHandle(std::move(gen), std::move(disc), config.latent_dim, config.seed,
                   config.epochs, std::move(log));
}

void SaveGan(const GanHandle& gan, const std::string& dir) {
  std::filesystem::create_directories(dir);
  SaveMlp(gan.generator(), dir + "/generator.mlp");
  SaveMlp(gan.discriminator(), dir + "/discriminator.mlp");
  nlohmann::json meta;
  meta["format"] = "mia-gan";
  meta["version"] = 1;
  meta["latent_dim"] = gan.latent_dim();
  meta["seed"] = gan.seed();
  meta["epochs"] = gan.epochs_trained();
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : gan.log()) log.push_back({e.discriminator_loss, e.generator_loss});
  meta["log"] = log;
  AtomicWriteFile(dir + "/gan.json", meta.dump(2) + "\n");
}

GanHandle LoadGan(const std::string& dir) {
  const auto meta = nlohmann::json::parse(ReadFile(dir + "/gan.json"));
  if (meta.value("format", "") != "mia-gan" || meta.value("version", 0) != 1) {
    throw InvalidInputError("unsupported GAN metadata in " + dir);
  }
  std::vector<GanEpochLog> log;
  for (const auto& e : meta.at("log")) log.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return GanHandle(LoadMlp(dir + "/generator.mlp"), LoadMlp(dir + "/discriminator.mlp"),
                   meta.at("latent_dim").get<size_t>(), meta.at("seed").get<uint64_t>(),
                   meta.at("epochs").get<size_t>(), std::move(log));
}

}  // namespace mia
