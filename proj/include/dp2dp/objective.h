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

#ifndef DP2DP_OBJECTIVE_H_
#define DP2DP_OBJECTIVE_H_

// Smoothed Lagrangian of the demographic-parity constrained argmax.
//
// For a pool point (x, s) with calibrated probabilities p and privatized
// group frequency pi_s, the corrected scores are
//   l^s_k = pi_s p_k - s (lambda1_k - lambda2_k),
// the per-sample loss is
//   h(lambda; x, s) = 2 LSE_beta(l^s) + rho sum_k (lambda1_k + lambda2_k),
// and the objective H averages h within each group and then over the two
// groups with equal weight.

#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dp2dp/parallel.h"
#include "dp2dp/types.h"

namespace dp2dp {

struct SmoothingParams {
  double beta = 1e-5;
  // Target unfairness level.
  double rho = 0.0;
};

// beta * log(sum_k exp(z_k / beta)), evaluated with max subtraction.
double LseBeta(std::span<const double> z, double beta);

// Gradient of LseBeta: exp(z / beta) normalized.
void SoftmaxBeta(std::span<const double> z, double beta, std::span<double> out);
std::vector<double> SoftmaxBeta(std::span<const double> z, double beta);

void CorrectedScores(std::span<const double> probs, SensitiveAttr s,
                     double pi_bar, const LagrangeParams& lambda,
                     std::span<double> out);
std::vector<double> CorrectedScores(std::span<const double> probs,
                                    SensitiveAttr s, double pi_bar,
                                    const LagrangeParams& lambda);

double PerSampleLoss(const LagrangeParams& lambda,
                     std::span<const double> probs, SensitiveAttr s,
                     double pi_bar, const SmoothingParams& params);

// Writes the 2K gradient (lambda1 block, then lambda2 block):
//   d/d lambda1 = -2 s softmax_beta(l^s) + rho,
//   d/d lambda2 = +2 s softmax_beta(l^s) + rho.
// `scratch` needs K slots.
void PerSampleGrad(const LagrangeParams& lambda, std::span<const double> probs,
                   SensitiveAttr s, double pi_bar,
                   const SmoothingParams& params, std::span<double> grad,
                   std::span<double> scratch);
std::vector<double> PerSampleGrad(const LagrangeParams& lambda,
                                  std::span<const double> probs,
                                  SensitiveAttr s, double pi_bar,
                                  const SmoothingParams& params);

// Group-balanced average of PerSampleLoss over the pool. Both groups must be
// nonempty. The parallel kernel writes per-row losses and sums them in row
// order, so both variants agree bit for bit.
absl::StatusOr<double> ObjectiveH(const LagrangeParams& lambda,
                                  const UnlabeledDataset& pool,
                                  const ProbabilityModel& model,
                                  const PrivatizedProportions& proportions,
                                  const SmoothingParams& params,
                                  Exec exec = Exec::kParallel);

// Gradient of ObjectiveH (group-balanced average of PerSampleGrad).
absl::StatusOr<std::vector<double>> ObjectiveGradient(
    const LagrangeParams& lambda, const UnlabeledDataset& pool,
    const ProbabilityModel& model, const PrivatizedProportions& proportions,
    const SmoothingParams& params, Exec exec = Exec::kParallel);

}  // namespace dp2dp

#endif  // DP2DP_OBJECTIVE_H_
