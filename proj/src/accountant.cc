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

#include "dp2dp/accountant.h"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dp2dp/status.h"

namespace dp2dp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Absolute tolerance on S_alpha.
constexpr double kQuadratureTolerance = 1e-10;
// Relative tolerance requested from the integrator on the normalized integral.
constexpr double kQuadratureRelTolerance = 1e-12;
constexpr unsigned kQuadratureMaxDepth = 16;
// Integration stops where the log integrand is this far below its peak.
// Concavity bounds each neglected tail by exp(-kLogDrop) times the distance
// to the peak, far below kQuadratureTolerance.
constexpr double kLogDrop = 60.0;

absl::Status CheckOrder(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    return ConfigError(
        absl::StrCat("Renyi order must be finite and > 1, got ", alpha));
  }
  return absl::OkStatus();
}

double LogAddExp(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::fabs(a - b)));
}

// Minimum over integers M in [1, max_m] of the convex M q + a / M.
double MinOverSteps(double q, double a, int64_t max_m) {
  if (q <= 0.0) return a / static_cast<double>(max_m);
  const double m_star = std::sqrt(a / q);
  double best = kInf;
  for (double m : {std::floor(m_star), std::ceil(m_star)}) {
    m = std::clamp(m, 1.0, static_cast<double>(max_m));
    best = std::min(best, m * q + a / m);
  }
  return best;
}

}  // namespace

const std::vector<double>& DefaultRdpOrders() {
  static const std::vector<double>* const kOrders = new std::vector<double>{
      1.25, 1.5, 1.75, 2, 2.5, 3, 4, 5, 6, 8, 16, 32, 64, 128, 256};
  return *kOrders;
}

absl::StatusOr<RdpCurve> RdpCurve::Create(Evaluator evaluator,
                                          std::span<const double> orders) {
  if (orders.empty()) return ConfigError("RDP order grid is empty");
  for (std::size_t i = 0; i < orders.size(); ++i) {
    DP2DP_RETURN_IF_ERROR(CheckOrder(orders[i]));
    if (i > 0 && !(orders[i] > orders[i - 1])) {
      return ConfigError("RDP orders must be strictly increasing");
    }
  }
  const std::size_t n = orders.size();
  std::vector<double> values(n, 0.0);
  std::vector<absl::Status> statuses(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    absl::StatusOr<double> v = evaluator(orders[i]);
    if (v.ok()) {
      values[i] = *v;
    } else {
      statuses[i] = v.status();
    }
  }
  for (const absl::Status& s : statuses) DP2DP_RETURN_IF_ERROR(s);
  return RdpCurve(std::move(evaluator),
                  std::vector<double>(orders.begin(), orders.end()),
                  std::move(values));
}

RdpCurve RdpCurve::Zero(std::span<const double> orders) {
  return *Create([](double) -> absl::StatusOr<double> { return 0.0; }, orders);
}

absl::StatusOr<double> GaussianRdp(double alpha, double sensitivity,
                                   double sigma) {
  DP2DP_RETURN_IF_ERROR(CheckOrder(alpha));
  if (!(sigma > 0.0)) {
    return ConfigError(
        absl::StrCat("Gaussian sigma must be positive, got ", sigma));
  }
  if (!(sensitivity >= 0.0)) {
    return ConfigError(
        absl::StrCat("sensitivity must be nonnegative, got ", sensitivity));
  }
  return alpha * sensitivity * sensitivity / (2.0 * sigma * sigma);
}

absl::StatusOr<double> SubsampledGaussianRdp(double alpha, double q,
                                             double sigma) {
  DP2DP_RETURN_IF_ERROR(CheckOrder(alpha));
  if (!(q >= 0.0 && q <= 1.0)) {
    return ConfigError(
        absl::StrCat("sampling rate must lie in [0, 1], got ", q));
  }
  if (!(sigma > 0.0)) {
    return ConfigError(
        absl::StrCat("Gaussian sigma must be positive, got ", sigma));
  }
  if (q == 0.0) return 0.0;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  if (std::isinf(sigma)) return 0.0;

  // With p = N(0, s^2) and mixture density m, the Renyi integral is
  //   int p^alpha m^(1-alpha) = int p(x) r(x)^(1-alpha) dx,
  //   r(x) = m(x)/p(x) = (1-q) + q exp((2x-1) / (2 s^2)).
  // Work with the unnormalized log integrand
  //   phi(x) = -x^2/(2 s^2) - (alpha-1) log r(x),
  // which is concave with curvature at least 1/s^2.
  const double var = sigma * sigma;
  const double log_q = std::log(q);
  const double log_keep = std::log1p(-q);
  const double am1 = alpha - 1.0;
  auto log_r = [&](double x) {
    return LogAddExp(log_keep, log_q + (2.0 * x - 1.0) / (2.0 * var));
  };
  auto phi = [&](double x) { return -x * x / (2.0 * var) - am1 * log_r(x); };

  // phi'(x) = -(x + (alpha-1) w(x)) / s^2 with w = q e^u / r in (0, 1)
  // increasing, so the mode is the root of x + (alpha-1) w(x) in
  // [-(alpha-1), 0].
  auto slope_root = [&](double x) {
    const double log_w = log_q + (2.0 * x - 1.0) / (2.0 * var) - log_r(x);
    return x + am1 * std::exp(log_w);
  };
  double lo = -am1;
  double hi = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (slope_root(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double mode = 0.5 * (lo + hi);
  const double phi_mode = phi(mode);

  // phi is concave, so once it has dropped kLogDrop below the peak the rest
  // of that side is negligible. Walk outward with doubling steps to find the
  // cut-offs, then integrate each side of the mode separately.
  auto cutoff = [&](double direction) {
    double step = 1e-3 * sigma;
    double x = mode + direction * step;
    for (int i = 0; i < 200 && phi(x) - phi_mode > -kLogDrop; ++i) {
      step *= 2.0;
      x = mode + direction * step;
    }
    return x;
  };
  auto integrand = [&](double x) { return std::exp(phi(x) - phi_mode); };
  double integral = 0.0;
  double error = 0.0;
  for (const auto& [a, b] :
       {std::pair{cutoff(-1.0), mode}, std::pair{mode, cutoff(1.0)}}) {
    double part_error = 0.0;
    double l1 = 0.0;
    integral += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, a, b, kQuadratureMaxDepth, kQuadratureRelTolerance,
        &part_error, &l1);
    error += part_error;
  }
  if (!(integral > 0.0) || !std::isfinite(integral)) {
    return NumericError(absl::StrCat("subsampled Gaussian quadrature produced ",
                                     integral, " (alpha=", alpha, ", q=", q,
                                     ", sigma=", sigma, ")"));
  }
  // Error propagated to the divergence: d log(J) / (alpha - 1).
  const double residual = error / integral / am1;
  if (residual > kQuadratureTolerance) {
    return NumericError(absl::StrFormat(
        "subsampled Gaussian quadrature did not converge: residual %.3e > "
        "%.1e (alpha=%g, q=%g, sigma=%g)",
        residual, kQuadratureTolerance, alpha, q, sigma));
  }
  const double log_integral =
      phi_mode + std::log(integral) -
      std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
  return std::max(0.0, log_integral / am1);
}

absl::StatusOr<RdpCurve> ComposeSequential(std::span<const RdpCurve> curves) {
  if (curves.empty()) return ConfigError("nothing to compose");
  std::vector<double> values(curves[0].values_.size(), 0.0);
  for (const RdpCurve& c : curves) {
    if (!std::ranges::equal(c.orders_, curves[0].orders_)) {
      return ConfigError("composed curves must share one order grid");
    }
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += c.values_[i];
  }
  std::vector<RdpCurve> parts(curves.begin(), curves.end());
  auto evaluator = [parts](double alpha) -> absl::StatusOr<double> {
    double total = 0.0;
    for (const RdpCurve& c : parts) {
      DP2DP_ASSIGN_OR_RETURN(double v, c(alpha));
      total += v;
    }
    return total;
  };
  return RdpCurve(std::move(evaluator), curves[0].orders_, std::move(values));
}

absl::StatusOr<RdpCurve> ComposeParallel(std::span<const RdpCurve> curves) {
  if (curves.empty()) return ConfigError("nothing to compose");
  std::vector<double> values(curves[0].values_.size(), 0.0);
  for (const RdpCurve& c : curves) {
    if (!std::ranges::equal(c.orders_, curves[0].orders_)) {
      return ConfigError("composed curves must share one order grid");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = std::max(values[i], c.values_[i]);
    }
  }
  std::vector<RdpCurve> parts(curves.begin(), curves.end());
  auto evaluator = [parts](double alpha) -> absl::StatusOr<double> {
    double worst = 0.0;
    for (const RdpCurve& c : parts) {
      DP2DP_ASSIGN_OR_RETURN(double v, c(alpha));
      worst = std::max(worst, v);
    }
    return worst;
  };
  return RdpCurve(std::move(evaluator), curves[0].orders_, std::move(values));
}

absl::StatusOr<DpConversion> RdpToDp(const RdpCurve& curve, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    return ConfigError(absl::StrCat("delta must lie in (0, 1], got ", delta));
  }
  const auto orders = curve.orders();
  const auto values = curve.values();
  if (orders.empty()) return ConfigError("RDP order grid is empty");
  const double log_inv_delta = -std::log(delta);
  DpConversion best{{kInf, delta}, orders[0]};
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (std::isnan(values[i])) {
      return NumericError(
          absl::StrCat("RDP curve is NaN at order ", orders[i]));
    }
    const double eps = values[i] + log_inv_delta / (orders[i] - 1.0);
    if (eps < best.budget.epsilon) best = {{eps, delta}, orders[i]};
  }
  return best;
}

absl::Status Dp2dpPrivacyParams::Validate() const {
  if (iterations < 1) {
    return ConfigError(
        absl::StrCat("iterations must be >= 1, got ", iterations));
  }
  if (pool_size < 1 || batch_size < 1 || batch_size > pool_size) {
    return ConfigError(absl::StrCat("need 1 <= batch_size <= pool_size, got b=",
                                    batch_size, ", N=", pool_size));
  }
  if (!(sigma_sgd > 0.0)) {
    return ConfigError(
        absl::StrCat("sigma_sgd must be positive, got ", sigma_sgd));
  }
  if (!(sigma_pi > 0.0)) {
    return ConfigError(
        absl::StrCat("sigma_pi must be positive, got ", sigma_pi));
  }
  if (!(c_lambda > 0.0) || !(beta > 0.0) || num_classes < 2) {
    return ConfigError("need c_lambda > 0, beta > 0 and at least 2 classes");
  }
  if (step_size.has_value()) {
    if (!(*step_size > 0.0)) {
      return ConfigError(
          absl::StrCat("step size must be positive, got ", *step_size));
    }
    if (*step_size > 2.0 * beta) {
      return ConfigError(absl::StrCat("precondition violated: step size ",
                                      *step_size,
                                      " exceeds 2*beta = ", 2.0 * beta));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<double> SgdRdpBound(const Dp2dpPrivacyParams& params,
                                   double alpha) {
  DP2DP_RETURN_IF_ERROR(CheckOrder(alpha));
  DP2DP_RETURN_IF_ERROR(params.Validate());
  const double q = static_cast<double>(params.batch_size) /
                   static_cast<double>(params.pool_size);
  const double b = static_cast<double>(params.batch_size);
  const double t = static_cast<double>(params.iterations);
  auto per_step = [&](double sigma) {
    return SubsampledGaussianRdp(alpha, q, b * sigma / kGradientSensitivity);
  };

  DP2DP_ASSIGN_OR_RETURN(const double full_noise, per_step(params.sigma_sgd));
  double best = t * full_noise;
  if (params.iterations == 1 || !params.step_size.has_value()) return best;

  // Diameter^2 of [0, C]^{2K} is 2K C^2.
  const double eta = *params.step_size;
  const double diameter_term = alpha * 2.0 * params.num_classes *
                               params.c_lambda * params.c_lambda /
                               (2.0 * eta * eta);
  const double var = params.sigma_sgd * params.sigma_sgd;
  const int64_t max_m = params.iterations - 1;
  for (int i = 0; i < kNumSplitRatios; ++i) {
    // ratio = sigma1^2 / sigma2^2, geometric on [1e-4, 1e4].
    const double ratio = std::pow(10.0, -4.0 + 8.0 * i / (kNumSplitRatios - 1));
    const double var1 = var * ratio / (1.0 + ratio);
    const double var2 = var / (1.0 + ratio);
    const double a = diameter_term / var1;
    // M Q + a / M >= a / (T - 1): no quadrature needed when that already
    // exceeds the incumbent.
    if (a / static_cast<double>(max_m) >= best) continue;
    DP2DP_ASSIGN_OR_RETURN(const double split_noise, per_step(std::sqrt(var2)));
    best = std::min(best, MinOverSteps(split_noise, a, max_m));
  }
  return best;
}

absl::StatusOr<double> Dp2dpRdpBound(const Dp2dpPrivacyParams& params,
                                     double alpha) {
  DP2DP_ASSIGN_OR_RETURN(const double sgd, SgdRdpBound(params, alpha));
  double frequencies = 0.0;
  if (std::isfinite(params.sigma_pi)) {
    const double n = static_cast<double>(params.pool_size);
    frequencies = alpha / (2.0 * n * n * params.sigma_pi * params.sigma_pi);
  }
  return frequencies + sgd;
}

absl::StatusOr<RdpCurve> Dp2dpRdpCurve(const Dp2dpPrivacyParams& params,
                                       std::span<const double> orders) {
  DP2DP_RETURN_IF_ERROR(params.Validate());
  return RdpCurve::Create(
      [params](double alpha) { return Dp2dpRdpBound(params, alpha); }, orders);
}

absl::StatusOr<AnalyticNoise> AnalyticNoiseCalibration(
    const PrivacyBudget& target, int64_t pool_size, int64_t iterations,
    int num_classes, double c_lambda, double beta) {
  if (!(target.epsilon > 0.0) || !(target.delta > 0.0 && target.delta <= 1.0)) {
    return ConfigError(
        absl::StrCat("target needs epsilon > 0 and delta in "
                     "(0, 1], got (",
                     target.epsilon, ", ", target.delta, ")"));
  }
  if (pool_size < 1 || iterations < 1 || num_classes < 2 || !(c_lambda > 0.0) ||
      !(beta > 0.0)) {
    return ConfigError(
        "invalid pool size, iterations, classes, c_lambda or "
        "beta");
  }
  const double log_inv_delta = -std::log(target.delta);
  // sqrt(L + eps) - sqrt(L), written without cancellation.
  const double r = target.epsilon / (std::sqrt(log_inv_delta + target.epsilon) +
                                     std::sqrt(log_inv_delta));
  const double n = static_cast<double>(pool_size);
  const double steps = std::min(
      static_cast<double>(iterations),
      std::ceil(std::sqrt(2.0 * num_classes) * c_lambda * n / (4.0 * beta)));
  AnalyticNoise out;
  out.sigma_pi_bound = std::numbers::sqrt2 * n * r;
  out.sigma_pi = std::numbers::sqrt2 / (n * r);
  const double denominator =
      n * n * r * r - 1.0 / (2.0 * out.sigma_pi * out.sigma_pi);
  out.sigma_sgd_squared = 16.0 * steps / denominator;
  return out;
}

absl::StatusOr<NoiseCalibration> CalibrateSigma(
    const PrivacyBudget& target, const Dp2dpPrivacyParams& params,
    std::span<const double> orders) {
  DP2DP_ASSIGN_OR_RETURN(AnalyticNoise analytic,
                         AnalyticNoiseCalibration(
                             target, params.pool_size, params.iterations,
                             params.num_classes, params.c_lambda, params.beta));
  Dp2dpPrivacyParams p = params;
  p.sigma_pi = analytic.sigma_pi;
  p.sigma_sgd = 1.0;
  DP2DP_RETURN_IF_ERROR(p.Validate());

  auto achieved = [&](double sigma_sgd) -> absl::StatusOr<DpConversion> {
    Dp2dpPrivacyParams trial = p;
    trial.sigma_sgd = sigma_sgd;
    DP2DP_ASSIGN_OR_RETURN(RdpCurve curve, Dp2dpRdpCurve(trial, orders));
    return RdpToDp(curve, target.delta);
  };

  // Floor set by the frequency release and the finite order grid alone.
  {
    const double n = static_cast<double>(p.pool_size);
    DP2DP_ASSIGN_OR_RETURN(RdpCurve floor_curve,
                           RdpCurve::Create(
                               [&](double alpha) -> absl::StatusOr<double> {
                                 return alpha /
                                        (2.0 * n * n * p.sigma_pi * p.sigma_pi);
                               },
                               orders));
    DP2DP_ASSIGN_OR_RETURN(DpConversion floor,
                           RdpToDp(floor_curve, target.delta));
    if (floor.budget.epsilon >= target.epsilon) {
      return ConfigError(absl::StrFormat(
          "calibration infeasible: epsilon %.4g is below the %.4g floor of "
          "the frequency release on this order grid",
          target.epsilon, floor.budget.epsilon));
    }
  }

  double hi = std::sqrt(analytic.sigma_sgd_squared);
  if (!(hi > 0.0) || !std::isfinite(hi)) {
    return ConfigError("analytic sigma_sgd is not a positive finite number");
  }
  DP2DP_ASSIGN_OR_RETURN(DpConversion at_hi, achieved(hi));
  for (int i = 0; at_hi.budget.epsilon > target.epsilon; ++i) {
    if (i == 200) {
      return ConfigError("calibration infeasible: no sigma_sgd meets target");
    }
    hi *= 2.0;
    DP2DP_ASSIGN_OR_RETURN(at_hi, achieved(hi));
  }
  double lo = hi;
  for (int i = 0;; ++i) {
    lo *= 0.5;
    DP2DP_ASSIGN_OR_RETURN(DpConversion at_lo, achieved(lo));
    if (at_lo.budget.epsilon > target.epsilon) break;
    hi = lo;
    at_hi = at_lo;
    if (i == 200) break;
  }
  for (int i = 0; i < 200; ++i) {
    if (at_hi.budget.epsilon >= 0.99 * target.epsilon) break;
    if (hi - lo <= 1e-12 * hi) break;
    const double mid = std::sqrt(lo * hi);
    DP2DP_ASSIGN_OR_RETURN(DpConversion at_mid, achieved(mid));
    if (at_mid.budget.epsilon <= target.epsilon) {
      hi = mid;
      at_hi = at_mid;
    } else {
      lo = mid;
    }
  }
  NoiseCalibration out;
  out.sigma_pi = p.sigma_pi;
  out.sigma_sgd = hi;
  out.analytic = analytic;
  out.achieved = at_hi;
  return out;
}

absl::StatusOr<double> CalibrateGaussianSigma(const PrivacyBudget& target,
                                              double sensitivity,
                                              std::span<const double> orders) {
  if (!(target.epsilon > 0.0) || !(target.delta > 0.0 && target.delta <= 1.0)) {
    return ConfigError("target needs epsilon > 0 and delta in (0, 1]");
  }
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    return ConfigError(
        absl::StrCat("sensitivity must be finite and >= 0, got ", sensitivity));
  }
  if (sensitivity == 0.0) return 0.0;
  const double log_inv_delta = -std::log(target.delta);
  double best = kInf;
  for (double alpha : orders) {
    DP2DP_RETURN_IF_ERROR(CheckOrder(alpha));
    const double slack = target.epsilon - log_inv_delta / (alpha - 1.0);
    if (slack <= 0.0) continue;
    best = std::min(
        best, std::sqrt(alpha * sensitivity * sensitivity / (2.0 * slack)));
  }
  if (!std::isfinite(best)) {
    return ConfigError(absl::StrCat("calibration infeasible: epsilon ",
                                    target.epsilon,
                                    " is below the order-grid floor"));
  }
  // Round up so the recheck through RdpToDp cannot land above the target.
  return best * (1.0 + 1e-9);
}

}  // namespace dp2dp
