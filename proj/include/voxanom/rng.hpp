/*
 * Copyright 2026 The voxanom Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace voxanom {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr uint64_t derive_seed(uint64_t root, uint64_t index) {
  return mix64(root ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// FNV-1a, for deriving seeds from stage names.
constexpr uint64_t hash_tag(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Random stream with portable distributions. The engine output sequence is
// fixed by the standard; the distribution transforms below are written out
// so that results do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  [[nodiscard]] uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], rejection sampling without modulo bias.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(engine_());
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
    uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return lo + static_cast<int64_t>(r % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; one draw per call.
  double normal(double mean, double stddev) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Child stream, independent of how much of this stream has been consumed.
  [[nodiscard]] Rng fork(uint64_t index) const { return Rng(derive_seed(seed_, index)); }
  [[nodiscard]] Rng fork(std::string_view tag) const { return fork(hash_tag(tag)); }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace voxanom
