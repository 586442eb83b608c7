// Copyright 2026 The vcmarkov Authors.
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

// Seeded randomness with a platform-independent output stream.
//
// Seed splitting rule: every stochastic unit of work (one simulation run, one
// bootstrap replicate of one block, one surrogate) gets its own engine seeded
// by derive_seed(master, {stream, i, j, ...}). The derived seed depends only
// on the path, never on evaluation order, so results are invariant to how the
// work is scheduled.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace vcmarkov {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a; used to turn labels (source ids) into seed path components.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p));
  return h;
}

// Stream tags keep the derived seeds of different procedures disjoint.
namespace stream {
inline constexpr std::uint64_t kSimulation = 1;
inline constexpr std::uint64_t kMbb = 2;
inline constexpr std::uint64_t kSurrogate = 3;
inline constexpr std::uint64_t kModelDraw = 4;
}  // namespace stream

/// mt19937_64 with uniform draws defined here rather than by
/// std::uniform_*_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n), rejection-sampled; n must be > 0.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vcmarkov
