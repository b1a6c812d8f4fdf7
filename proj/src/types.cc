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

#include "dp2dp/types.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dp2dp/objective.h"
#include "dp2dp/status.h"

namespace dp2dp {

absl::StatusOr<SensitiveAttr> SensitiveAttrFromInt(int value) {
  if (value == 1) return SensitiveAttr::kPlus;
  if (value == -1) return SensitiveAttr::kMinus;
  return DataError(
      absl::StrCat("sensitive attribute must be -1 or +1, got ", value));
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols,
                             std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {}

FeatureMatrix FeatureMatrix::Select(
    std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * cols_);
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return FeatureMatrix(indices.size(), cols_, std::move(out));
}

absl::StatusOr<UnlabeledDataset> UnlabeledDataset::Create(
    FeatureMatrix x, std::vector<SensitiveAttr> s) {
  if (s.empty()) return DataError("unlabeled dataset is empty");
  if (x.rows() != s.size()) {
    return DataError(absl::StrCat("feature rows (", x.rows(),
                                  ") != sensitive attributes (", s.size(),
                                  ")"));
  }
  if (x.values().size() != x.rows() * x.cols()) {
    return DataError("feature matrix storage does not match its shape");
  }
  return UnlabeledDataset(std::move(x), std::move(s));
}

UnlabeledDataset UnlabeledDataset::Select(
    std::span<const std::size_t> indices) const {
  std::vector<SensitiveAttr> s;
  s.reserve(indices.size());
  for (std::size_t i : indices) s.push_back(s_[i]);
  return UnlabeledDataset(x_.Select(indices), std::move(s));
}

absl::StatusOr<LabeledDataset> LabeledDataset::Create(
    FeatureMatrix x, std::vector<SensitiveAttr> s, std::vector<int> y,
    int num_classes) {
  if (y.empty()) return DataError("labeled dataset is empty");
  if (num_classes < 2) {
    return DataError(
        absl::StrCat("need at least 2 classes, got ", num_classes));
  }
  if (x.rows() != y.size() || s.size() != y.size()) {
    return DataError(
        "features, sensitive attributes and labels differ in "
        "length");
  }
  if (x.values().size() != x.rows() * x.cols()) {
    return DataError("feature matrix storage does not match its shape");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes) {
      return DataError(absl::StrCat("row ", i, ": label ", y[i] + 1,
                                    " outside 1..", num_classes));
    }
  }
  return LabeledDataset(std::move(x), std::move(s), std::move(y), num_classes);
}

LabeledDataset LabeledDataset::Select(
    std::span<const std::size_t> indices) const {
  std::vector<SensitiveAttr> s;
  std::vector<int> y;
  s.reserve(indices.size());
  y.reserve(indices.size());
  for (std::size_t i : indices) {
    s.push_back(s_[i]);
    y.push_back(y_[i]);
  }
  return LabeledDataset(x_.Select(indices), std::move(s), std::move(y),
                        num_classes_);
}

UnlabeledDataset LabeledDataset::WithoutLabels() const {
  return *UnlabeledDataset::Create(x_, s_);
}

GroupPartition PartitionByGroup(const UnlabeledDataset& data) {
  GroupPartition partition;
  for (std::size_t i = 0; i < data.size(); ++i) {
    partition.rows[GroupIndex(data.s(i))].push_back(i);
  }
  return partition;
}

absl::StatusOr<LagrangeParams> LagrangeParams::Create(
    std::vector<double> lambda1, std::vector<double> lambda2, double c_lambda) {
  if (!(c_lambda > 0.0) || !std::isfinite(c_lambda)) {
    return ConfigError(
        absl::StrCat("c_lambda must be positive, got ", c_lambda));
  }
  if (lambda1.size() != lambda2.size() || lambda1.empty()) {
    return ConfigError("lambda1 and lambda2 must be nonempty and equally long");
  }
  for (const auto* block : {&lambda1, &lambda2}) {
    for (double v : *block) {
      if (!(v >= 0.0 && v <= c_lambda)) {
        return ConfigError(
            absl::StrCat("multiplier ", v, " outside [0, ", c_lambda, "]"));
      }
    }
  }
  return LagrangeParams(std::move(lambda1), std::move(lambda2), c_lambda);
}

LagrangeParams LagrangeParams::Zero(int num_classes, double c_lambda) {
  return LagrangeParams(std::vector<double>(num_classes, 0.0),
                        std::vector<double>(num_classes, 0.0), c_lambda);
}

absl::StatusOr<LagrangeParams> LagrangeParams::FromFlat(
    std::span<const double> flat, double c_lambda) {
  if (flat.size() % 2 != 0) {
    return ConfigError("flattened multipliers must have even length");
  }
  const std::size_t k = flat.size() / 2;
  return Create(std::vector<double>(flat.begin(), flat.begin() + k),
                std::vector<double>(flat.begin() + k, flat.end()), c_lambda);
}

std::vector<double> LagrangeParams::Flat() const {
  std::vector<double> flat(lambda1_);
  flat.insert(flat.end(), lambda2_.begin(), lambda2_.end());
  return flat;
}

int ArgmaxScores(std::span<const double> scores) {
  int best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = static_cast<int>(k);
  }
  return best;
}

absl::StatusOr<FairClassifier> FairClassifier::Create(
    std::shared_ptr<const ProbabilityModel> model,
    PrivatizedProportions proportions, LagrangeParams lambda) {
  if (model == nullptr) return ConfigError("classifier needs a model");
  if (model->num_classes() != lambda.num_classes()) {
    return ConfigError(absl::StrCat("model has ", model->num_classes(),
                                    " classes but multipliers have ",
                                    lambda.num_classes()));
  }
  return FairClassifier(std::move(model), proportions, std::move(lambda));
}

absl::StatusOr<int> FairClassifier::Predict(std::span<const double> x,
                                            SensitiveAttr s) const {
  if (x.size() != dim()) {
    return DataError(absl::StrCat("input has dimension ", x.size(),
                                  ", classifier expects ", dim()));
  }
  std::vector<double> scratch(num_classes());
  return PredictUnchecked(x, s, scratch);
}

int FairClassifier::PredictUnchecked(std::span<const double> x, SensitiveAttr s,
                                     std::span<double> scratch) const {
  model_->Probabilities(x, s, scratch);
  CorrectedScores(scratch, s, proportions_[s], lambda_, scratch);
  return ArgmaxScores(scratch);
}

}  // namespace dp2dp
