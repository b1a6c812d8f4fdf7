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

#include "dp2dp/synthgen.h"

#include <vector>

#include "absl/strings/str_cat.h"
#include "dp2dp/random.h"
#include "dp2dp/status.h"

namespace dp2dp {

absl::Status SynthConfig::Validate() const {
  if (n < 1) return ConfigError(absl::StrCat("n: must be >= 1, got ", n));
  if (d < 1) return ConfigError(absl::StrCat("d: must be >= 1, got ", d));
  if (num_classes < 2) {
    return ConfigError(absl::StrCat("K: must be >= 2, got ", num_classes));
  }
  if (components < 1) {
    return ConfigError(absl::StrCat("m: must be >= 1, got ", components));
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    return ConfigError(absl::StrCat("p: must lie in [0, 1], got ", p));
  }
  return absl::OkStatus();
}

absl::StatusOr<LabeledDataset> Generate(const SynthConfig& config) {
  DP2DP_RETURN_IF_ERROR(config.Validate());
  const std::size_t d = config.d;
  const int k = config.num_classes;
  const std::size_t m = config.components;
  Rng rng(config.seed);

  // centers[(class * m + i) * d + j] = c^k_j + mu^k_{i,j}.
  std::vector<double> centers(k * m * d);
  for (int c = 0; c < k; ++c) {
    std::vector<double> base(d);
    for (double& v : base) v = 2.0 * rng.Uniform() - 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      double* center = centers.data() + (c * m + i) * d;
      for (std::size_t j = 0; j < d; ++j) center[j] = base[j] + rng.Normal();
    }
  }

  const std::size_t n = config.n;
  const int low_classes = k / 2;
  std::vector<double> x(n * d);
  std::vector<SensitiveAttr> s(n);
  std::vector<int> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int label = static_cast<int>(rng.UniformIndex(k));
    const std::size_t component = rng.UniformIndex(m);
    const double* center = centers.data() + (label * m + component) * d;
    double* row = x.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) row[j] = center[j] + rng.Normal();
    const double p_plus = label < low_classes ? config.p : 1.0 - config.p;
    s[r] = rng.Bernoulli(p_plus) ? SensitiveAttr::kPlus : SensitiveAttr::kMinus;
    y[r] = label;
  }
  return LabeledDataset::Create(FeatureMatrix(n, d, std::move(x)), std::move(s),
                                std::move(y), k);
}

}  // namespace dp2dp
