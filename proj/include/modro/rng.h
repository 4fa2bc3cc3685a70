// Copyright 2026 The modro Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MODRO_RNG_H_
#define MODRO_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace modro {

// Repo-wide generator. The engine is std::mt19937_64, whose output sequence
// is fixed by the C++ standard; the uniform and normal transforms below are
// implemented here so draws do not depend on the standard library vendor.
// Bump kRngVersion whenever any transform changes.
inline constexpr int kRngVersion = 1;
inline constexpr const char* kRngName = "mt19937_64+polar/v1";

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform();

  // Uniform on (0, 1).
  double UniformOpen();

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal via the Marsaglia polar method; the spare value is cached.
  double Normal();

  double Normal(double mean, double sd) { return mean + sd * Normal(); }

  // Uniform integer in [0, n), unbiased (rejection on the top range).
  std::uint64_t Index(std::uint64_t n);

  bool Bernoulli(double p) { return Uniform() < p; }

  // Number of successes in n Bernoulli(p) trials. Delegates to
  // std::binomial_distribution driven by this engine.
  std::int64_t Binomial(std::int64_t n, double p);

  // Fisher-Yates, drawing from Index().
  template <typename T>
  void Shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(Index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  std::vector<std::size_t> Permutation(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace modro

#endif  // MODRO_RNG_H_
