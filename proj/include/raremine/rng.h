/*
 * Copyright 2026 The raremine Authors.
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

#ifndef RAREMINE_RNG_H_
#define RAREMINE_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace raremine {

// Portable seeded random source.
//
// The raw bit stream is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Every derived draw (uniform reals, bounded integers, normals)
// is computed here from that stream instead of through <random>
// distributions, whose algorithms differ between standard libraries. Two
// builds on different platforms therefore see identical draws.
//
//   Uniform01      (next >> 11) * 2^-53, in [0, 1)
//   UniformIndex   rejection sampling on the full 64-bit word, in [0, n)
//   Normal         Box-Muller on two Uniform01 draws, cosine branch only
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  double Uniform01();
  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }
  std::uint64_t UniformIndex(std::uint64_t n);
  double Normal();

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

// Seed for an independent sub-stream: Mix64(seed ^ Mix64(stream + 1)).
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

// Same, keyed by a tag string hashed with 64-bit FNV-1a.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view tag);

std::uint64_t Fnv1a64(std::string_view bytes);

}  // namespace raremine

#endif  // RAREMINE_RNG_H_
