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

#ifndef DP2DP_ACCOUNTANT_H_
#define DP2DP_ACCOUNTANT_H_

// Renyi differential privacy accounting.
//
// Mechanisms are described by RDP curves alpha -> eps(alpha), evaluated on a
// fixed grid of orders. Curves compose sequentially (pointwise sum) or in
// parallel over disjoint data (pointwise max), and convert to (eps, delta)-DP
// by minimizing eps(alpha) + log(1/delta) / (alpha - 1) over the grid.
//
// The post-processing bound combines the Gaussian release of the two group
// frequencies (sensitivity 1/N) with the privacy of projected noisy SGD on a
// smooth convex loss over a bounded domain, whose per-step cost is the
// subsampled Gaussian divergence S_alpha(q, sigma).

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dp2dp {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

// {1.25, 1.5, 1.75, 2, 2.5, 3, 4, 5, 6, 8, 16, 32, 64, 128, 256}.
const std::vector<double>& DefaultRdpOrders();

class RdpCurve {
 public:
  using Evaluator = std::function<absl::StatusOr<double>(double)>;

  // Evaluates `evaluator` on every order (in parallel over orders). Orders
  // must be > 1 and strictly increasing.
  static absl::StatusOr<RdpCurve> Create(
      Evaluator evaluator, std::span<const double> orders = DefaultRdpOrders());
  // Curve that is zero at every order.
  static RdpCurve Zero(std::span<const double> orders = DefaultRdpOrders());

  // Closed-form evaluation at an arbitrary order > 1.
  absl::StatusOr<double> operator()(double alpha) const {
    return evaluator_(alpha);
  }
  std::span<const double> orders() const { return orders_; }
  std::span<const double> values() const { return values_; }

 private:
  friend absl::StatusOr<RdpCurve> ComposeSequential(
      std::span<const RdpCurve> curves);
  friend absl::StatusOr<RdpCurve> ComposeParallel(
      std::span<const RdpCurve> curves);

  RdpCurve(Evaluator evaluator, std::vector<double> orders,
           std::vector<double> values)
      : evaluator_(std::move(evaluator)),
        orders_(std::move(orders)),
        values_(std::move(values)) {}

  Evaluator evaluator_;
  std::vector<double> orders_;
  std::vector<double> values_;
};

// alpha * sensitivity^2 / (2 sigma^2).
absl::StatusOr<double> GaussianRdp(double alpha, double sensitivity,
                                   double sigma);

// S_alpha(q, sigma) = D_alpha( N(0, sigma^2) || (1-q) N(0, sigma^2) +
// q N(1, sigma^2) ), by adaptive Gauss-Kronrod quadrature of the log-concave
// integrand in log space. q = 0 and q = 1 are returned in closed form.
absl::StatusOr<double> SubsampledGaussianRdp(double alpha, double q,
                                             double sigma);

// Pointwise sum of curves on a shared grid.
absl::StatusOr<RdpCurve> ComposeSequential(std::span<const RdpCurve> curves);
// Pointwise maximum of curves on a shared grid.
absl::StatusOr<RdpCurve> ComposeParallel(std::span<const RdpCurve> curves);

struct DpConversion {
  PrivacyBudget budget;
  // Order attaining the minimum.
  double order = 0.0;
};

// delta in (0, 1]. delta = 1 drops the log term.
absl::StatusOr<DpConversion> RdpToDp(const RdpCurve& curve, double delta);

// Parameters of one post-processing run as seen by the accountant.
struct Dp2dpPrivacyParams {
  int64_t iterations = 1;  // T
  int64_t batch_size = 1;  // b
  int64_t pool_size = 1;   // N
  // Constant step size eta. Without one, only the plain composition branch
  // T * Q of the bound is used; that branch does not depend on the schedule.
  std::optional<double> step_size;
  double sigma_sgd = 1.0;
  // May be +infinity (frequencies released without privacy cost).
  double sigma_pi = 1.0;
  double c_lambda = 1.0;
  int num_classes = 2;
  double beta = 1e-5;

  absl::Status Validate() const;
};

// Per-sample gradient l2-sensitivity of the smoothed per-sample loss over
// the full 2K-dimensional multiplier vector. Each of the two K-blocks moves by
// at most 4; the blocks move together, so the joint bound is 4 sqrt(2). It is
// attained by two samples from opposite groups whose softmaxes both
// concentrate on the same class.
inline constexpr double kGradientSensitivity = 4.0 * std::numbers::sqrt2;

// Privacy of the noisy SGD phase:
//   min{ T Q(sigma_sgd),
//        min over sigma1^2 + sigma2^2 = sigma_sgd^2, M in [T-1] of
//          M Q(sigma2) + alpha 2K C^2 / (2 eta^2 sigma1^2 M) }
// with Q(s) = S_alpha(b/N, b s / kGradientSensitivity). The split is searched
// over kNumSplitRatios geometric ratios sigma1^2/sigma2^2; for each split the
// convex function of M is minimized exactly over the integers in [1, T-1].
absl::StatusOr<double> SgdRdpBound(const Dp2dpPrivacyParams& params,
                                   double alpha);

inline constexpr int kNumSplitRatios = 64;

// alpha / (2 N^2 sigma_pi^2) + SgdRdpBound.
absl::StatusOr<double> Dp2dpRdpBound(const Dp2dpPrivacyParams& params,
                                     double alpha);
absl::StatusOr<RdpCurve> Dp2dpRdpCurve(
    const Dp2dpPrivacyParams& params,
    std::span<const double> orders = DefaultRdpOrders());

// Closed-form noise levels for a target (eps, delta). With
// r = sqrt(log(1/delta) + eps) - sqrt(log(1/delta)) and
// m = min{T, ceil(sqrt(2K) C N / (4 beta))}:
//   sigma_pi_bound = sqrt(2) N r
//   sigma_sgd^2    = 16 m / (N^2 r^2 - 1/(2 sigma_pi^2))
// sigma_pi = sqrt(2) / (N r), at which the frequency release takes a quarter
// of N^2 r^2 and sigma_sgd^2 = 16 m / (0.75 N^2 r^2).
struct AnalyticNoise {
  double sigma_pi_bound = 0.0;
  double sigma_pi = 0.0;
  double sigma_sgd_squared = 0.0;
};

absl::StatusOr<AnalyticNoise> AnalyticNoiseCalibration(
    const PrivacyBudget& target, int64_t pool_size, int64_t iterations,
    int num_classes, double c_lambda, double beta);

struct NoiseCalibration {
  double sigma_pi = 0.0;
  double sigma_sgd = 0.0;
  AnalyticNoise analytic;
  // Budget of the returned pair as reported by RdpToDp(Dp2dpRdpCurve(...)).
  DpConversion achieved;
};

// Starts from AnalyticNoiseCalibration and bisects sigma_sgd (sigma_pi held
// fixed) until the accountant reports an epsilon within 1% below the target.
// `params` supplies N, T, b, K, C, beta and the optional step size; its noise
// fields are ignored. The returned pair always satisfies the target.
absl::StatusOr<NoiseCalibration> CalibrateSigma(
    const PrivacyBudget& target, const Dp2dpPrivacyParams& params,
    std::span<const double> orders = DefaultRdpOrders());

// Smallest sigma for which the Gaussian mechanism with the given
// l2-sensitivity meets `target` under RdpToDp on `orders`.
absl::StatusOr<double> CalibrateGaussianSigma(
    const PrivacyBudget& target, double sensitivity,
    std::span<const double> orders = DefaultRdpOrders());

}  // namespace dp2dp

#endif  // DP2DP_ACCOUNTANT_H_
