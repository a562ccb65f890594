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

#ifndef MIA_GENERATORS_H_
#define MIA_GENERATORS_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mia/bit_matrix.h"
#include "mia/datagen.h"
#include "mia/nn.h"

namespace mia {

// The only capability attacks get from a target: draw n synthetic rows.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual BitMatrix Sample(size_t n, uint64_t seed) const = 0;
  virtual size_t dimension() const = 0;
};

struct MixtureLogDensities {
  double log_g;  // log G(x) = log(beta T(x) + (1 - beta) P(x))
  double log_p;  // log P(x)
  double log_t;  // log T(x); -inf off the training set
};

// G = beta * T + (1 - beta) * P, where T is uniform over the training rows
// and P is the base SNP distribution. beta is the member-component weight.
class OracleMixtureGenerator final : public Sampler {
 public:
  OracleMixtureGenerator(double beta, BitMatrix train, SnpDistributionSpec base);

  // Each row: with probability beta a uniformly chosen training row verbatim,
  // otherwise a fresh draw from P.
  BitMatrix Sample(size_t n, uint64_t seed) const override;
  size_t dimension() const override { return base_.dimension; }

  MixtureLogDensities LogDensities(BitRow x) const;
  // Exact densities (exponentiated); may underflow to 0 at large d.
  double DensityG(BitRow x) const;
  double DensityP(BitRow x) const;
  double DensityT(BitRow x) const;

  double beta() const { return beta_; }
  const BitMatrix& train() const { return train_; }
  const SnpDistributionSpec& base() const { return base_; }

 private:
  static std::string Key(BitRow x);

  double beta_;
  BitMatrix train_;
  SnpDistributionSpec base_;
  std::unordered_map<std::string, size_t> train_counts_;
};

enum class GeneratorLoss { kNonSaturating, kMinimax };

struct GanConfig {
  size_t latent_dim = 32;
  std::vector<size_t> hidden_units = {128};
  size_t epochs = 300;
  size_t batch_size = 64;
  double learning_rate = 1e-3;
  AdamConfig adam = {0.5, 0.999, 1e-8};
  GeneratorLoss loss = GeneratorLoss::kNonSaturating;
  uint64_t seed = 0;
};

struct GanEpochLog {
  double discriminator_loss = 0;
  double generator_loss = 0;
  bool operator==(const GanEpochLog&) const = default;
};

// A trained (or untrained) vanilla GAN. Exposes sampling only.
class GanHandle final : public Sampler {
 public:
  GanHandle(Mlp generator, Mlp discriminator, size_t latent_dim, uint64_t seed,
            size_t epochs_trained, std::vector<GanEpochLog> log = {});

  // z ~ N(0, I), bit = 1 iff generator output >= 0.5.
  BitMatrix Sample(size_t n, uint64_t seed) const override;
  size_t dimension() const override { return generator_.output_dim(); }

  const Mlp& generator() const { return generator_; }
  const Mlp& discriminator() const { return discriminator_; }
  size_t latent_dim() const { return latent_dim_; }
  uint64_t seed() const { return seed_; }
  size_t epochs_trained() const { return epochs_trained_; }
  const std::vector<GanEpochLog>& log() const { return log_; }

 private:
  Mlp generator_;
  Mlp discriminator_;
  size_t latent_dim_;
  uint64_t seed_;
  size_t epochs_trained_;
  std::vector<GanEpochLog> log_;
};

// Alternating single-step updates: the discriminator on BCE(real=1, fake=0),
// then the generator on -log D(G(z)) (or log(1 - D(G(z))) for kMinimax).
GanHandle TrainVanillaGan(const BitMatrix& train, const GanConfig& config);

// Writes generator.mlp, discriminator.mlp and gan.json into `dir`.
void SaveGan(const GanHandle& gan, const std::string& dir);
GanHandle LoadGan(const std::string& dir);

using GeneratorHandle = std::variant<OracleMixtureGenerator, GanHandle>;

inline const Sampler& AsSampler(const GeneratorHandle& h) {
  return std::visit([](const auto& g) -> const Sampler& { return g; }, h);
}

}  // namespace mia

#endif  // MIA_GENERATORS_H_
