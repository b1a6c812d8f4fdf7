// Copyright 2026 The DP2DP Authors
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

#ifndef DP2DP_RANDOM_H_
#define DP2DP_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>

namespace dp2dp {

// Seeded random stream used everywhere randomness is consumed.
//
// The engine is std::mt19937_64. Derived variates use fixed, documented
// algorithms rather than the implementation-defined std distributions, so a
// given seed produces the same stream on every standard library:
//   Uniform      53 high bits of one engine draw, scaled to [0, 1).
//   UniformIndex rejection sampling on the full 64-bit range.
//   Normal       Box-Muller; each pair of uniforms yields two variates and the
//                second is cached for the next call.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double Uniform();
  // (0, 1]; safe for log().
  double UniformPositive();
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }
  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformIndex(uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

// splitmix64 finalizer.
uint64_t MixBits(uint64_t x);

// Deterministically derives a child seed from a root seed and a path of
// integers. Different paths give statistically independent streams.
uint64_t DeriveSeed(uint64_t root, std::initializer_list<uint64_t> path);

}  // namespace dp2dp

#endif  // DP2DP_RANDOM_H_
