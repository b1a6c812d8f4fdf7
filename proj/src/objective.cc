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

#include "dp2dp/objective.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "dp2dp/status.h"

namespace dp2dp {
namespace {

// |S|.
constexpr double kNumGroups = 2.0;

absl::Status CheckGroups(const GroupPartition& groups) {
  for (SensitiveAttr s : kGroups) {
    if (groups.size(s) == 0) {
      return DataError(absl::StrCat("group s=", Sign(s),
                                    " is empty; the objective is undefined"));
    }
  }
  return absl::OkStatus();
}

// Fills row_values[i * width .. (i+1) * width) with fn(i, out) for every pool
// row, serially or with OpenMP. Each thread owns its scratch buffers.
template <typename Fn>
void ForEachRow(std::size_t rows, std::size_t width, int num_classes, Exec exec,
                std::vector<double>& row_values, Fn fn) {
  row_values.assign(rows * width, 0.0);
  if (exec == Exec::kSerial) {
    std::vector<double> probs(num_classes), scratch(num_classes);
    for (std::size_t i = 0; i < rows; ++i) {
      fn(i, std::span<double>(row_values).subspan(i * width, width), probs,
         scratch);
    }
    return;
  }
#pragma omp parallel
  {
    std::vector<double> probs(num_classes), scratch(num_classes);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < rows; ++i) {
      fn(i, std::span<double>(row_values).subspan(i * width, width), probs,
         scratch);
    }
  }
}

}  // namespace

double LseBeta(std::span<const double> z, double beta) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp((v - top) / beta);
  return top + beta * std::log(sum);
}

void SoftmaxBeta(std::span<const double> z, double beta,
                 std::span<double> out) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = std::exp((z[k] - top) / beta);
    sum += out[k];
  }
  for (std::size_t k = 0; k < z.size(); ++k) out[k] /= sum;
}

std::vector<double> SoftmaxBeta(std::span<const double> z, double beta) {
  std::vector<double> out(z.size());
  SoftmaxBeta(z, beta, out);
  return out;
}

void CorrectedScores(std::span<const double> probs, SensitiveAttr s,
                     double pi_bar, const LagrangeParams& lambda,
                     std::span<double> out) {
  const int sign = Sign(s);
  const auto l1 = lambda.lambda1();
  const auto l2 = lambda.lambda2();
  for (std::size_t k = 0; k < probs.size(); ++k) {
    out[k] = pi_bar * probs[k] - sign * (l1[k] - l2[k]);
  }
}

std::vector<double> CorrectedScores(std::span<const double> probs,
                                    SensitiveAttr s, double pi_bar,
                                    const LagrangeParams& lambda) {
  std::vector<double> out(probs.size());
  CorrectedScores(probs, s, pi_bar, lambda, out);
  return out;
}

namespace {

double Regularizer(const LagrangeParams& lambda, double rho) {
  const auto l1 = lambda.lambda1();
  const auto l2 = lambda.lambda2();
  double total = 0.0;
  for (std::size_t k = 0; k < l1.size(); ++k) total += l1[k] + l2[k];
  return rho * total;
}

double LossWithScratch(const LagrangeParams& lambda,
                       std::span<const double> probs, SensitiveAttr s,
                       double pi_bar, const SmoothingParams& params,
                       double regularizer, std::span<double> scratch) {
  CorrectedScores(probs, s, pi_bar, lambda, scratch);
  return kNumGroups * LseBeta(scratch, params.beta) + regularizer;
}

}  // namespace

double PerSampleLoss(const LagrangeParams& lambda,
                     std::span<const double> probs, SensitiveAttr s,
                     double pi_bar, const SmoothingParams& params) {
  std::vector<double> scratch(probs.size());
  return LossWithScratch(lambda, probs, s, pi_bar, params,
                         Regularizer(lambda, params.rho), scratch);
}

void PerSampleGrad(const LagrangeParams& lambda, std::span<const double> probs,
                   SensitiveAttr s, double pi_bar,
                   const SmoothingParams& params, std::span<double> grad,
                   std::span<double> scratch) {
  const std::size_t k_count = probs.size();
  CorrectedScores(probs, s, pi_bar, lambda, scratch);
  SoftmaxBeta(scratch, params.beta, scratch);
  const double scale = kNumGroups * Sign(s);
  for (std::size_t k = 0; k < k_count; ++k) {
    grad[k] = -scale * scratch[k] + params.rho;
    grad[k_count + k] = scale * scratch[k] + params.rho;
  }
}

std::vector<double> PerSampleGrad(const LagrangeParams& lambda,
                                  std::span<const double> probs,
                                  SensitiveAttr s, double pi_bar,
                                  const SmoothingParams& params) {
  std::vector<double> grad(2 * probs.size());
  std::vector<double> scratch(probs.size());
  PerSampleGrad(lambda, probs, s, pi_bar, params, grad, scratch);
  return grad;
}

absl::StatusOr<double> ObjectiveH(const LagrangeParams& lambda,
                                  const UnlabeledDataset& pool,
                                  const ProbabilityModel& model,
                                  const PrivatizedProportions& proportions,
                                  const SmoothingParams& params, Exec exec) {
  const GroupPartition groups = PartitionByGroup(pool);
  DP2DP_RETURN_IF_ERROR(CheckGroups(groups));
  const double regularizer = Regularizer(lambda, params.rho);
  std::vector<double> losses;
  ForEachRow(pool.size(), 1, model.num_classes(), exec, losses,
             [&](std::size_t i, std::span<double> out, std::span<double> probs,
                 std::span<double> scratch) {
               const SensitiveAttr s = pool.s(i);
               model.Probabilities(pool.x(i), s, probs);
               out[0] = LossWithScratch(lambda, probs, s, proportions[s],
                                        params, regularizer, scratch);
             });
  double total = 0.0;
  for (SensitiveAttr s : kGroups) {
    double group_sum = 0.0;
    for (std::size_t i : groups.of(s)) group_sum += losses[i];
    total += group_sum / static_cast<double>(groups.size(s));
  }
  return total / kNumGroups;
}

absl::StatusOr<std::vector<double>> ObjectiveGradient(
    const LagrangeParams& lambda, const UnlabeledDataset& pool,
    const ProbabilityModel& model, const PrivatizedProportions& proportions,
    const SmoothingParams& params, Exec exec) {
  const GroupPartition groups = PartitionByGroup(pool);
  DP2DP_RETURN_IF_ERROR(CheckGroups(groups));
  const std::size_t width = 2 * static_cast<std::size_t>(model.num_classes());
  std::vector<double> grads;
  ForEachRow(pool.size(), width, model.num_classes(), exec, grads,
             [&](std::size_t i, std::span<double> out, std::span<double> probs,
                 std::span<double> scratch) {
               const SensitiveAttr s = pool.s(i);
               model.Probabilities(pool.x(i), s, probs);
               PerSampleGrad(lambda, probs, s, proportions[s], params, out,
                             scratch);
             });
  std::vector<double> total(width, 0.0);
  for (SensitiveAttr s : kGroups) {
    std::vector<double> group_sum(width, 0.0);
    for (std::size_t i : groups.of(s)) {
      for (std::size_t j = 0; j < width; ++j)
        group_sum[j] += grads[i * width + j];
    }
    const double weight =
        1.0 / (kNumGroups * static_cast<double>(groups.size(s)));
    for (std::size_t j = 0; j < width; ++j) total[j] += weight * group_sum[j];
  }
  return total;
}

}  // namespace dp2dp
