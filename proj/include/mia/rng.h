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

#ifndef MIA_RNG_H_
#define MIA_RNG_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mia {

// SplitMix64 finalizer; used for seed expansion and stable hashing.
uint64_t SplitMix64(uint64_t x);

// Derives an independent child seed from a parent seed, a stage label and an
// index. Stable across platforms: FNV-1a over the label, then SplitMix64.
uint64_t DeriveSeed(uint64_t parent, std::string_view label, uint64_t index = 0);

// xoshiro256** 1.0 (Blackman & Vigna). All randomness in the toolkit flows
// through this generator.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t seed);

  uint64_t Next();
  uint64_t operator()() { return Next(); }
  static constexpr uint64_t min() { return 0; }
  static constexpr uint64_t max() { return ~uint64_t{0}; }

  // Uniform double in [0, 1) with 53 bits of precision.
  double Uniform();
  // Uniform double in (0, 1].
  double UniformPositive() { return 1.0 - Uniform(); }
  // Unbiased integer in [0, bound). bound must be > 0.
  uint64_t Below(uint64_t bound);
  bool Bernoulli(double p) { return Uniform() < p; }
  // Standard normal via the Box-Muller transform (caches the second value).
  double Normal();
  // Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 uses the boost U^(1/a).
  double Gamma(double shape);
  double Beta(double a, double b);
  // Index drawn from an unnormalized non-negative weight vector.
  size_t Categorical(std::span<const double> weights);

  // Fisher-Yates shuffle using Below(); portable across standard libraries.
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Random permutation of 0..n-1.
  std::vector<size_t> Permutation(size_t n);

 private:
  uint64_t s_[4];
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace mia

#endif  // MIA_RNG_H_
