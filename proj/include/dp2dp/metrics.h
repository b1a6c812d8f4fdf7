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

#ifndef DP2DP_METRICS_H_
#define DP2DP_METRICS_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dp2dp/parallel.h"
#include "dp2dp/types.h"

namespace dp2dp {

struct EvalReport {
  // NaN when the report was built without labels.
  double accuracy = 0.0;
  double unfairness = 0.0;
  // Indexed by GroupIndex(s), then class.
  std::array<std::vector<double>, 2> rates;
  std::array<std::vector<int64_t>, 2> counts;
  int64_t rows = 0;

  std::string ToJson() const;
  static std::string CsvHeader();
  std::string CsvRow() const;
};

// Predicted class of every row.
std::vector<int> PredictAll(const FairClassifier& g,
                            const UnlabeledDataset& data,
                            Exec exec = Exec::kParallel);

// max_k |nu(k | s=+1) - nu(k | s=-1)| from predicted labels in [0, K).
absl::StatusOr<EvalReport> ReportFromPredictions(
    std::span<const int> predictions, std::span<const SensitiveAttr> groups,
    int num_classes);

absl::StatusOr<double> EmpiricalUnfairness(const FairClassifier& g,
                                           const UnlabeledDataset& test);

absl::StatusOr<double> Accuracy(const FairClassifier& g,
                                const LabeledDataset& test);

// Accuracy and unfairness from one prediction pass.
absl::StatusOr<EvalReport> Evaluate(const FairClassifier& g,
                                    const LabeledDataset& test,
                                    Exec exec = Exec::kParallel);

}  // namespace dp2dp

#endif  // DP2DP_METRICS_H_
