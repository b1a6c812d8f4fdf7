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

#ifndef DP2DP_LOGREG_H_
#define DP2DP_LOGREG_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dp2dp/parallel.h"
#include "dp2dp/random.h"
#include "dp2dp/types.h"

namespace dp2dp {

struct Phase1Config {
  // 0 is allowed and leaves the weights at zero.
  int64_t iterations = 2000;
  double learning_rate = 0.1;
  // Lambda in (1/n) sum_i CE_i + (Lambda / 2) ||W||_F^2; the bias column is
  // regularized too.
  double reg_strength = 1.0;
  double grad_tol = 1e-6;
  // Training rows are rescaled to ||x||_2 <= feature_clip when positive; 0
  // disables clipping (and with it the output-perturbation sensitivity).
  double feature_clip = 10.0;
  bool use_sensitive_feature = false;
  double perturb_sigma = 0.0;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Multinomial logistic regression. Weights are K x (p + 1), row-major, where
// p = d (+1 when s is appended as a feature) and the last column is the bias.
class LogRegModel : public ProbabilityModel {
 public:
  static absl::StatusOr<LogRegModel> Create(int num_classes, std::size_t dim,
                                            bool use_sensitive_feature,
                                            std::vector<double> weights,
                                            double reg_strength);
  static LogRegModel Zero(int num_classes, std::size_t dim,
                          bool use_sensitive_feature, double reg_strength);

  int num_classes() const override { return num_classes_; }
  std::size_t dim() const override { return dim_; }
  void Probabilities(std::span<const double> x, SensitiveAttr s,
                     std::span<double> out) const override;

  // Checked variant.
  absl::StatusOr<std::vector<double>> PredictProbs(std::span<const double> x,
                                                   SensitiveAttr s) const;
  void Logits(std::span<const double> x, SensitiveAttr s,
              std::span<double> out) const;

  bool use_sensitive_feature() const { return use_sensitive_feature_; }
  // Columns of the weight matrix, bias included.
  std::size_t stride() const { return dim_ + (use_sensitive_feature_ ? 2 : 1); }
  std::span<const double> weights() const { return weights_; }
  double reg_strength() const { return reg_strength_; }
  double perturb_sigma() const { return perturb_sigma_; }
  uint64_t seed() const { return seed_; }

  void set_provenance(double perturb_sigma, uint64_t seed) {
    perturb_sigma_ = perturb_sigma;
    seed_ = seed;
  }

  std::string ToJson() const;
  static absl::StatusOr<LogRegModel> FromJson(const std::string& text);

 private:
  LogRegModel(int num_classes, std::size_t dim, bool use_sensitive_feature,
              std::vector<double> weights, double reg_strength)
      : num_classes_(num_classes),
        dim_(dim),
        use_sensitive_feature_(use_sensitive_feature),
        weights_(std::move(weights)),
        reg_strength_(reg_strength) {}

  int num_classes_ = 0;
  std::size_t dim_ = 0;
  bool use_sensitive_feature_ = false;
  std::vector<double> weights_;
  double reg_strength_ = 1.0;
  double perturb_sigma_ = 0.0;
  uint64_t seed_ = 0;
};

struct TrainStats {
  int64_t iterations = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Regularized objective and its gradient with respect to the weights, in the
// model's layout. Blocks of kReductionBlock rows are summed in block order, so
// both execution modes return identical bits.
double LogRegObjective(const LabeledDataset& data, const Phase1Config& config,
                       std::span<const double> weights, std::span<double> grad,
                       Exec exec = Exec::kParallel);

// Full-batch gradient descent from zero weights.
absl::StatusOr<LogRegModel> TrainLogReg(const LabeledDataset& data,
                                        const Phase1Config& config,
                                        TrainStats* stats = nullptr,
                                        Exec exec = Exec::kParallel);

// Adds N(0, sigma^2) to every weight.
LogRegModel PerturbOutput(const LogRegModel& model, double sigma, Rng& rng);

// L2 sensitivity of the regularized minimizer when one of n training rows is
// replaced, for rows clipped to ||x|| <= feature_clip:
// 2 sqrt(2) sqrt(R^2 + 1 [+ 1 with s]) / (n Lambda).
absl::StatusOr<double> Phase1Sensitivity(std::size_t n,
                                         const Phase1Config& config);

}  // namespace dp2dp

#endif  // DP2DP_LOGREG_H_
