// Copyright 2026 The AnyFace Lab Authors
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
//
// Deterministic random number generation.  std::mt19937_64 is fully
// specified by the standard, but the standard *distributions* are not, so
// uniform/normal variates are derived here directly from the raw 64-bit
// stream.  Identical seeds therefore produce identical values on every
// platform and toolchain.

#ifndef ANYFACE_RNG_HPP_
#define ANYFACE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace anyface {

// SplitMix64 step; used to mix seeds for independent substreams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a over a string tag, for named substreams.
inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Derive the seed of an independent substream from (seed, tag, index...).
inline std::uint64_t substream(std::uint64_t seed, std::string_view tag,
                               std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(seed ^ hash_tag(tag));
  h = mix64(h ^ mix64(a + 0x632be59bd9b4e019ull));
  h = mix64(h ^ mix64(b + 0xd3833e804f4c574bull));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n must be positive.  The modulo bias at
  // n << 2^64 is far below anything observable here.
  std::uint64_t uniform_index(std::uint64_t n) { return gen_() % n; }

  // Standard normal via Box-Muller (two raw draws per variate).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // 1 - u1 keeps the log argument in (0, 1].
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace anyface

#endif  // ANYFACE_RNG_HPP_
