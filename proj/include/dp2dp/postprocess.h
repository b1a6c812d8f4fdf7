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

#ifndef DP2DP_POSTPROCESS_H_
#define DP2DP_POSTPROCESS_H_

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dp2dp/random.h"
#include "dp2dp/types.h"

namespace dp2dp {

// Step-size sequence eta_t, t = 1..T.
struct StepSchedule {
  enum class Kind {
    // eta_t = eta. The only schedule covered by the step-size condition
    // eta <= 2 beta of the RDP bound.
    kConstant,
    // eta_t = eta / sqrt(t).
    kInverseSqrt,
    // eta_t = D / sqrt(t (L^2 + sigma_sgd^2 2K / b^2)) with D = sqrt(2K) C and
    // L = 2 sqrt(2) + rho sqrt(2K); `eta` is ignored.
    kUtility,
  };

  Kind kind = Kind::kInverseSqrt;
  double eta = 1.0;

  static StepSchedule Constant(double eta) { return {Kind::kConstant, eta}; }
  static StepSchedule InverseSqrt(double eta0) {
    return {Kind::kInverseSqrt, eta0};
  }
  static StepSchedule Utility() { return {Kind::kUtility, 0.0}; }

  std::string Name() const;
  static absl::StatusOr<Kind> ParseKind(const std::string& name);
};

struct Dp2dpConfig {
  double rho = 0.0;
  double beta = 1e-5;
  int64_t iterations = 100;
  int64_t batch_size = 128;
  StepSchedule schedule;
  double sigma_pi = 0.0;
  double sigma_sgd = 0.0;
  double c_lambda = 1.0;
  uint64_t seed = 0;
  // Rows of a fixed pool subsample on which the trace records the objective.
  // Diagnostic only: these reads are outside the privacy accounting. 0 turns
  // the probe off.
  int64_t probe_size = 0;
  // Scales Z_t by b so that the noise sits on the averaged gradient, the
  // placement the RDP bound's noise multiplier b sigma_sgd / (4 sqrt 2)
  // assumes. Off by default: Z_t is added to the sum before dividing by b.
  bool noise_on_average = false;

  absl::Status Validate() const;
  double StepSize(int64_t t, int num_classes) const;
};

struct TraceRecord {
  int64_t t = 0;
  double step_size = 0.0;
  // lambda^t after the projected step, flattened (lambda1, lambda2).
  std::vector<double> lambda;
  // NaN when the probe is off.
  double probe_objective = 0.0;
  uint64_t noise_seed = 0;
};

struct RunTrace {
  std::string schedule;
  std::vector<TraceRecord> records;
  std::vector<std::string> warnings;
};

// Columns: t, step_size, lambda1_1..lambda1_K, lambda2_1..lambda2_K,
// probe_objective, noise_seed.
void WriteTraceCsv(const RunTrace& trace, std::ostream& out);

// pi_bar_s = (1/N) #{i : s_i = s} + N(0, sigma_pi^2), one draw per group.
PrivatizedProportions PrivatizeProportions(const UnlabeledDataset& pool,
                                           double sigma_pi, Rng& rng);

struct BatchItem {
  std::size_t row = 0;
  SensitiveAttr s = SensitiveAttr::kPlus;
};

// b draws: s uniform on {-1, +1}, then a row of group s uniformly, with
// replacement. Fails if either group is empty.
absl::StatusOr<std::vector<BatchItem>> SampleMinibatch(
    const GroupPartition& groups, int64_t batch_size, Rng& rng);

// Componentwise clamp to [0, c_lambda].
std::vector<double> ProjectBox(std::span<const double> v, double c_lambda);

struct Dp2dpResult {
  FairClassifier classifier;
  RunTrace trace;
};

// Projected noisy SGD on the smoothed objective, starting from lambda = 0.
// Each step averages b per-sample gradients with one N(0, sigma_sgd^2 I_2K)
// vector added to their sum before dividing by b, then projects onto the
// box. Returns the last iterate.
absl::StatusOr<Dp2dpResult> RunDp2dp(
    const UnlabeledDataset& pool, std::shared_ptr<const ProbabilityModel> model,
    const Dp2dpConfig& config);

}  // namespace dp2dp

#endif  // DP2DP_POSTPROCESS_H_
