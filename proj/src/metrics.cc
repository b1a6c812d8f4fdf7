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

#include "dp2dp/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dp2dp/status.h"
#include "json.hpp"

namespace dp2dp {

std::vector<int> PredictAll(const FairClassifier& g,
                            const UnlabeledDataset& data, Exec exec) {
  const std::size_t n = data.size();
  std::vector<int> out(n);
  if (exec == Exec::kSerial) {
    std::vector<double> scratch(g.num_classes());
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = g.PredictUnchecked(data.x(i), data.s(i), scratch);
    }
    return out;
  }
#pragma omp parallel
  {
    std::vector<double> scratch(g.num_classes());
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = g.PredictUnchecked(data.x(i), data.s(i), scratch);
    }
  }
  return out;
}

absl::StatusOr<EvalReport> ReportFromPredictions(
    std::span<const int> predictions, std::span<const SensitiveAttr> groups,
    int num_classes) {
  if (predictions.size() != groups.size()) {
    return DataError("predictions and groups differ in length");
  }
  EvalReport report;
  report.accuracy = std::numeric_limits<double>::quiet_NaN();
  report.rows = static_cast<int64_t>(predictions.size());
  for (auto& c : report.counts) c.assign(num_classes, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int k = predictions[i];
    if (k < 0 || k >= num_classes) {
      return DataError(absl::StrCat("prediction ", k, " out of range"));
    }
    ++report.counts[GroupIndex(groups[i])][k];
  }
  for (SensitiveAttr s : kGroups) {
    const auto& counts = report.counts[GroupIndex(s)];
    int64_t total = 0;
    for (int64_t c : counts) total += c;
    if (total == 0) {
      return DataError(absl::StrCat("evaluation set has no rows with s=",
                                    Sign(s), "; unfairness is undefined"));
    }
    auto& rates = report.rates[GroupIndex(s)];
    rates.resize(num_classes);
    for (int k = 0; k < num_classes; ++k) {
      rates[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    }
  }
  double worst = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    worst = std::max(worst, std::abs(report.rates[1][k] - report.rates[0][k]));
  }
  report.unfairness = worst;
  return report;
}

absl::StatusOr<double> EmpiricalUnfairness(const FairClassifier& g,
                                           const UnlabeledDataset& test) {
  if (test.dim() != g.dim()) {
    return DataError(absl::StrCat("test set has dimension ", test.dim(),
                                  ", classifier expects ", g.dim()));
  }
  const std::vector<int> predictions = PredictAll(g, test);
  DP2DP_ASSIGN_OR_RETURN(
      const EvalReport report,
      ReportFromPredictions(predictions, test.groups(), g.num_classes()));
  return report.unfairness;
}

absl::StatusOr<double> Accuracy(const FairClassifier& g,
                                const LabeledDataset& test) {
  if (test.size() == 0) return DataError("test set is empty");
  if (test.dim() != g.dim()) {
    return DataError(absl::StrCat("test set has dimension ", test.dim(),
                                  ", classifier expects ", g.dim()));
  }
  const std::vector<int> predictions = PredictAll(g, test.WithoutLabels());
  int64_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    hits += predictions[i] == test.y(i);
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

absl::StatusOr<EvalReport> Evaluate(const FairClassifier& g,
                                    const LabeledDataset& test, Exec exec) {
  if (test.size() == 0) return DataError("test set is empty");
  if (test.dim() != g.dim()) {
    return DataError(absl::StrCat("test set has dimension ", test.dim(),
                                  ", classifier expects ", g.dim()));
  }
  const std::vector<int> predictions =
      PredictAll(g, test.WithoutLabels(), exec);
  DP2DP_ASSIGN_OR_RETURN(
      EvalReport report,
      ReportFromPredictions(predictions, test.groups(), g.num_classes()));
  int64_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    hits += predictions[i] == test.y(i);
  }
  report.accuracy =
      static_cast<double>(hits) / static_cast<double>(test.size());
  return report;
}

std::string EvalReport::ToJson() const {
  nlohmann::json doc;
  doc["accuracy"] = accuracy;
  doc["unfairness"] = unfairness;
  doc["rows"] = rows;
  doc["rates"] = {{"s=-1", rates[0]}, {"s=+1", rates[1]}};
  doc["counts"] = {{"s=-1", counts[0]}, {"s=+1", counts[1]}};
  return doc.dump(2);
}

std::string EvalReport::CsvHeader() { return "accuracy,unfairness,rows"; }

std::string EvalReport::CsvRow() const {
  return absl::StrFormat("%.17g,%.17g,%d", accuracy, unfairness, rows);
}

}  // namespace dp2dp
