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

#ifndef DP2DP_TYPES_H_
#define DP2DP_TYPES_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace dp2dp {

// Binary sensitive attribute. Exactly two groups exist.
enum class SensitiveAttr : int8_t { kMinus = -1, kPlus = 1 };

inline constexpr std::array<SensitiveAttr, 2> kGroups = {SensitiveAttr::kMinus,
                                                         SensitiveAttr::kPlus};

// +1 or -1.
inline int Sign(SensitiveAttr s) { return static_cast<int>(s); }
// Dense index: 0 for -1, 1 for +1.
inline std::size_t GroupIndex(SensitiveAttr s) {
  return s == SensitiveAttr::kPlus ? 1 : 0;
}
absl::StatusOr<SensitiveAttr> SensitiveAttrFromInt(int value);

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<const double> values() const { return values_; }

  FeatureMatrix Select(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Unlabeled rows (x, s). The pool consumed by the post-processing phase.
class UnlabeledDataset {
 public:
  static absl::StatusOr<UnlabeledDataset> Create(FeatureMatrix x,
                                                 std::vector<SensitiveAttr> s);

  std::size_t size() const { return s_.size(); }
  std::size_t dim() const { return x_.cols(); }
  std::span<const double> x(std::size_t i) const { return x_.row(i); }
  SensitiveAttr s(std::size_t i) const { return s_[i]; }
  const FeatureMatrix& features() const { return x_; }
  std::span<const SensitiveAttr> groups() const { return s_; }

  UnlabeledDataset Select(std::span<const std::size_t> indices) const;

 private:
  UnlabeledDataset(FeatureMatrix x, std::vector<SensitiveAttr> s)
      : x_(std::move(x)), s_(std::move(s)) {}

  FeatureMatrix x_;
  std::vector<SensitiveAttr> s_;
};

// Labeled rows (x, s, y). Labels are 0-based internally; files and
// user-facing output use 1-based classes.
class LabeledDataset {
 public:
  static absl::StatusOr<LabeledDataset> Create(FeatureMatrix x,
                                               std::vector<SensitiveAttr> s,
                                               std::vector<int> y,
                                               int num_classes);

  std::size_t size() const { return y_.size(); }
  std::size_t dim() const { return x_.cols(); }
  int num_classes() const { return num_classes_; }
  std::span<const double> x(std::size_t i) const { return x_.row(i); }
  SensitiveAttr s(std::size_t i) const { return s_[i]; }
  int y(std::size_t i) const { return y_[i]; }
  const FeatureMatrix& features() const { return x_; }
  std::span<const SensitiveAttr> groups() const { return s_; }
  std::span<const int> labels() const { return y_; }

  LabeledDataset Select(std::span<const std::size_t> indices) const;
  UnlabeledDataset WithoutLabels() const;

 private:
  LabeledDataset(FeatureMatrix x, std::vector<SensitiveAttr> s,
                 std::vector<int> y, int num_classes)
      : x_(std::move(x)),
        s_(std::move(s)),
        y_(std::move(y)),
        num_classes_(num_classes) {}

  FeatureMatrix x_;
  std::vector<SensitiveAttr> s_;
  std::vector<int> y_;
  int num_classes_ = 0;
};

// Row indices of each sensitive group, indexed by GroupIndex().
struct GroupPartition {
  std::array<std::vector<std::size_t>, 2> rows;

  const std::vector<std::size_t>& of(SensitiveAttr s) const {
    return rows[GroupIndex(s)];
  }
  std::size_t size(SensitiveAttr s) const { return of(s).size(); }
};

GroupPartition PartitionByGroup(const UnlabeledDataset& data);

// Maps (x, s) to a point of the K-simplex.
class ProbabilityModel {
 public:
  virtual ~ProbabilityModel() = default;

  virtual int num_classes() const = 0;
  virtual std::size_t dim() const = 0;
  // `out` has num_classes() entries. x has dim() entries (not re-checked).
  virtual void Probabilities(std::span<const double> x, SensitiveAttr s,
                             std::span<double> out) const = 0;
};

// Noisy group frequencies. Not clipped to [0, 1].
struct PrivatizedProportions {
  std::array<double, 2> pi_bar = {0.5, 0.5};

  double operator[](SensitiveAttr s) const { return pi_bar[GroupIndex(s)]; }
};

// Lagrange multipliers (lambda1, lambda2) in the box [0, c_lambda]^{2K}.
class LagrangeParams {
 public:
  static absl::StatusOr<LagrangeParams> Create(std::vector<double> lambda1,
                                               std::vector<double> lambda2,
                                               double c_lambda);
  static LagrangeParams Zero(int num_classes, double c_lambda);
  // `flat` is (lambda1, lambda2) concatenated. Must already lie in the box.
  static absl::StatusOr<LagrangeParams> FromFlat(std::span<const double> flat,
                                                 double c_lambda);

  int num_classes() const { return static_cast<int>(lambda1_.size()); }
  double c_lambda() const { return c_lambda_; }
  std::span<const double> lambda1() const { return lambda1_; }
  std::span<const double> lambda2() const { return lambda2_; }
  std::vector<double> Flat() const;

 private:
  LagrangeParams(std::vector<double> lambda1, std::vector<double> lambda2,
                 double c_lambda)
      : lambda1_(std::move(lambda1)),
        lambda2_(std::move(lambda2)),
        c_lambda_(c_lambda) {}

  std::vector<double> lambda1_;
  std::vector<double> lambda2_;
  double c_lambda_ = 1.0;
};

// Index of the largest score; ties go to the smallest index.
int ArgmaxScores(std::span<const double> scores);

// The post-processed classifier: argmax_k pi_s p_k(x, s) - s (l1_k - l2_k).
class FairClassifier {
 public:
  static absl::StatusOr<FairClassifier> Create(
      std::shared_ptr<const ProbabilityModel> model,
      PrivatizedProportions proportions, LagrangeParams lambda);

  // 0-based class index. Fails on a dimension mismatch.
  absl::StatusOr<int> Predict(std::span<const double> x, SensitiveAttr s) const;
  // Same, without the dimension check. `scratch` needs num_classes() slots.
  int PredictUnchecked(std::span<const double> x, SensitiveAttr s,
                       std::span<double> scratch) const;

  int num_classes() const { return model_->num_classes(); }
  std::size_t dim() const { return model_->dim(); }
  const ProbabilityModel& model() const { return *model_; }
  std::shared_ptr<const ProbabilityModel> shared_model() const {
    return model_;
  }
  const PrivatizedProportions& proportions() const { return proportions_; }
  const LagrangeParams& lambda() const { return lambda_; }

 private:
  FairClassifier(std::shared_ptr<const ProbabilityModel> model,
                 PrivatizedProportions proportions, LagrangeParams lambda)
      : model_(std::move(model)),
        proportions_(proportions),
        lambda_(std::move(lambda)) {}

  std::shared_ptr<const ProbabilityModel> model_;
  PrivatizedProportions proportions_;
  LagrangeParams lambda_;
};

}  // namespace dp2dp

#endif  // DP2DP_TYPES_H_
