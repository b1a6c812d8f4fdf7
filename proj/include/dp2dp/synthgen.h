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

#ifndef DP2DP_SYNTHGEN_H_
#define DP2DP_SYNTHGEN_H_

#include <cstdint>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dp2dp/types.h"

namespace dp2dp {

// Class-conditional Gaussian mixtures with a label-dependent sensitive
// attribute. p = 0.5 gives S independent of Y; p in {0, 1} ties S to Y.
struct SynthConfig {
  int64_t n = 10000;
  int64_t d = 20;
  int num_classes = 6;
  int64_t components = 10;
  double p = 0.75;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Draws c^k ~ U(-1, 1)^d and mu^k_i ~ N(0, I_d) once, then per row
// Y ~ U{1..K}, i ~ U{1..m}, X ~ N(c^Y + mu^Y_i, I_d) and
// S = 2 B(p) - 1 if Y <= floor(K / 2), else 2 B(1 - p) - 1.
// Labels in the result are 0-based.
absl::StatusOr<LabeledDataset> Generate(const SynthConfig& config);

}  // namespace dp2dp

#endif  // DP2DP_SYNTHGEN_H_
