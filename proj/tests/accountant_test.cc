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

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "dp2dp/random.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles/oracles.h"

namespace dp2dp {
namespace {

using ::testing::HasSubstr;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct FrozenCase {
  double alpha;
  double q;
  double sigma;
  double value;
};

// From tests/oracles/subsampled_gaussian.py (mpmath, 50 digits).
constexpr FrozenCase kFrozen[] = {
    {2.0, 0.01, 1.0, 0.00016022264981855362163},
    {1.25, 0.2, 0.7, 0.053132269562732772148},
    {1.5, 0.5, 0.8, 0.21571275705431119149},
    {3.0, 0.05, 2.0, 0.0010074577840694578438},
    {4.0, 0.9, 3.0, 0.17253811416164846282},
    {8.0, 0.064, 2.0, 0.0040242738990741315665},
    {8.0, 0.064, 128.0, 9.9999748581934797603e-7},
    {8.0, 0.064, 90.509667991878083, 1.9999899412424324966e-6},
    {16.0, 0.3, 1.5, 0.14715943910720437038},
    {32.0, 0.1, 5.0, 0.0058376097510814315154},
    {64.0, 0.01, 10.0, 0.000031953639016746755348},
    {128.0, 0.02, 8.0, 0.00038781863952954772455},
    {256.0, 0.001, 20.0, 3.2019442984768218087e-7},
};

TEST(GaussianRdpTest, MatchesClosedForm) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double alpha = 1.0 + 100.0 * rng.UniformPositive();
    const double sens = 3.0 * rng.Uniform();
    const double sigma = 0.1 + 10.0 * rng.Uniform();
    const double expected = alpha * sens * sens / (2.0 * sigma * sigma);
    EXPECT_NEAR(*GaussianRdp(alpha, sens, sigma), expected, 1e-12 * expected);
  }
}

TEST(GaussianRdpTest, RejectsBadArguments) {
  EXPECT_EQ(GaussianRdp(1.0, 1.0, 1.0).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(GaussianRdp(2.0, 1.0, 0.0).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(SubsampledGaussianRdpTest, EndpointsInClosedForm) {
  for (double alpha : DefaultRdpOrders()) {
    for (double sigma : {0.5, 1.0, 4.0}) {
      EXPECT_NEAR(*SubsampledGaussianRdp(alpha, 0.0, sigma), 0.0, 1e-9);
      EXPECT_NEAR(*SubsampledGaussianRdp(alpha, 1.0, sigma),
                  alpha / (2.0 * sigma * sigma), 1e-9);
    }
  }
}

TEST(SubsampledGaussianRdpTest, MatchesFrozenHighPrecisionValues) {
  for (const FrozenCase& c : kFrozen) {
    SCOPED_TRACE(::testing::Message() << "alpha=" << c.alpha << " q=" << c.q
                                      << " sigma=" << c.sigma);
    const double got = *SubsampledGaussianRdp(c.alpha, c.q, c.sigma);
    EXPECT_NEAR(got, c.value, 1e-9 * c.value + 1e-15);
  }
}

TEST(SubsampledGaussianRdpTest, MatchesTrapezoidOracle) {
  Rng rng(11);
  for (int i = 0; i < 6; ++i) {
    const double alpha = DefaultRdpOrders()[rng.UniformIndex(12)];
    const double q = 0.001 + 0.9 * rng.Uniform();
    const double sigma = 0.6 + 5.0 * rng.Uniform();
    const double want =
        oracle::TrapezoidSubsampledGaussian(alpha, q, sigma, 200'001);
    EXPECT_NEAR(*SubsampledGaussianRdp(alpha, q, sigma), want,
                1e-6 * std::max(1.0, want));
  }
}

TEST(SubsampledGaussianRdpTest, MonotoneInEachArgument) {
  const double qs[] = {0.001, 0.01, 0.1, 0.3, 0.7, 0.99};
  const double sigmas[] = {0.7, 1.0, 2.0, 5.0, 20.0};
  for (double alpha : {1.5, 4.0, 32.0}) {
    for (double sigma : sigmas) {
      double prev = 0.0;
      for (double q : qs) {
        const double v = *SubsampledGaussianRdp(alpha, q, sigma);
        EXPECT_GE(v, prev * (1 - 1e-12)) << alpha << " " << sigma << " " << q;
        prev = v;
      }
    }
    for (double q : qs) {
      double prev = kInf;
      for (double sigma : sigmas) {
        const double v = *SubsampledGaussianRdp(alpha, q, sigma);
        EXPECT_LE(v, prev * (1 + 1e-12));
        prev = v;
      }
    }
  }
  for (double q : qs) {
    double prev = 0.0;
    for (double alpha : DefaultRdpOrders()) {
      const double v = *SubsampledGaussianRdp(alpha, q, 2.0);
      EXPECT_GE(v, prev * (1 - 1e-12));
      prev = v;
    }
  }
}

TEST(SubsampledGaussianRdpTest, NeverExceedsFullBatch) {
  for (double alpha : DefaultRdpOrders()) {
    for (double q : {0.01, 0.5, 0.9}) {
      EXPECT_LE(*SubsampledGaussianRdp(alpha, q, 1.5),
                alpha / (2.0 * 1.5 * 1.5) * (1 + 1e-12));
    }
  }
}

TEST(SubsampledGaussianRdpTest, RejectsBadArguments) {
  EXPECT_FALSE(SubsampledGaussianRdp(2.0, -0.1, 1.0).ok());
  EXPECT_FALSE(SubsampledGaussianRdp(2.0, 1.1, 1.0).ok());
  EXPECT_FALSE(SubsampledGaussianRdp(2.0, 0.5, 0.0).ok());
  EXPECT_FALSE(SubsampledGaussianRdp(0.5, 0.5, 1.0).ok());
}

TEST(RdpCurveTest, RejectsUnsortedOrders) {
  const std::vector<double> orders = {2.0, 1.5};
  auto curve = RdpCurve::Create([](double) { return 0.0; }, orders);
  EXPECT_EQ(curve.status().code(), absl::StatusCode::kInvalidArgument);
  const std::vector<double> low = {1.0, 2.0};
  EXPECT_FALSE(RdpCurve::Create([](double) { return 0.0; }, low).ok());
}

TEST(RdpCurveTest, ComposeSequentialSumsAndParallelTakesMax) {
  auto a =
      *RdpCurve::Create([](double al) { return GaussianRdp(al, 1.0, 2.0); });
  auto b =
      *RdpCurve::Create([](double al) { return GaussianRdp(al, 1.0, 3.0); });
  const std::vector<RdpCurve> both = {a, b};
  auto sum = *ComposeSequential(both);
  auto max = *ComposeParallel(both);
  for (std::size_t i = 0; i < a.orders().size(); ++i) {
    EXPECT_DOUBLE_EQ(sum.values()[i], a.values()[i] + b.values()[i]);
    EXPECT_DOUBLE_EQ(max.values()[i], std::max(a.values()[i], b.values()[i]));
  }
  const double alpha = 7.3;
  EXPECT_DOUBLE_EQ(*sum(alpha), *a(alpha) + *b(alpha));
}

TEST(RdpCurveTest, ComposeRejectsMismatchedGrids) {
  const std::vector<double> other = {2.0, 4.0};
  const std::vector<RdpCurve> curves = {RdpCurve::Zero(),
                                        RdpCurve::Zero(other)};
  EXPECT_EQ(ComposeSequential(curves).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(ComposeSequential(std::span<const RdpCurve>()).ok());
}

TEST(RdpToDpTest, MatchesScanOverOrders) {
  for (double sigma : {0.8, 2.0, 10.0}) {
    auto curve =
        *RdpCurve::Create([&](double a) { return GaussianRdp(a, 1.0, sigma); });
    for (double delta : {1e-5, 1e-3, 0.1}) {
      const double want = oracle::ConvertByScan(
          DefaultRdpOrders(),
          [&](double a) { return a / (2.0 * sigma * sigma); }, delta);
      auto got = *RdpToDp(curve, delta);
      EXPECT_NEAR(got.budget.epsilon, want, 1e-12 * want);
      EXPECT_EQ(got.budget.delta, delta);
    }
  }
}

TEST(RdpToDpTest, DeltaOneDropsLogTerm) {
  auto curve =
      *RdpCurve::Create([](double a) { return GaussianRdp(a, 1.0, 1.0); });
  auto got = *RdpToDp(curve, 1.0);
  EXPECT_NEAR(got.budget.epsilon, 1.25 / 2.0, 1e-15);
  EXPECT_EQ(got.order, 1.25);
}

TEST(RdpToDpTest, RejectsDeltaOutsideRange) {
  EXPECT_FALSE(RdpToDp(RdpCurve::Zero(), 0.0).ok());
  EXPECT_FALSE(RdpToDp(RdpCurve::Zero(), 1.5).ok());
}

Dp2dpPrivacyParams DeskParams() {
  Dp2dpPrivacyParams p;
  p.iterations = 100;
  p.batch_size = 128;
  p.pool_size = 2000;
  p.sigma_sgd = 4.0;
  p.sigma_pi = 1.0;
  p.num_classes = 6;
  p.c_lambda = 1.0;
  p.step_size = 0.02;
  p.beta = 0.01;
  return p;
}

TEST(Dp2dpRdpBoundTest, DeskExample) {
  // The shifted branch costs at least alpha 2K C^2 / (2 eta^2 sigma^2 (T-1))
  // ~ 0.6 here, far above T Q(4) ~ 2e-4, so the bound is the plain branch.
  // Q(4) uses the noise multiplier b sigma / (4 sqrt 2) = 90.5097.
  const double want =
      8.0 / (2.0 * 2000.0 * 2000.0) + 100.0 * 1.9999899412424324966e-6;
  EXPECT_NEAR(*Dp2dpRdpBound(DeskParams(), 8.0), want, 1e-9 * want);
}

TEST(Dp2dpRdpBoundTest, MatchesStraightLineTranscription) {
  std::vector<double> ratios;
  for (int i = 0; i < kNumSplitRatios; ++i) {
    ratios.push_back(std::pow(10.0, -4.0 + 8.0 * i / (kNumSplitRatios - 1)));
  }
  auto s_alpha = [](double a, double q, double s) {
    return *SubsampledGaussianRdp(a, q, s);
  };
  // Small noise and a large step make the shifted branch competitive.
  for (double sigma : {0.05, 0.2, 1.0}) {
    for (double eta : {0.5, 2.0}) {
      Dp2dpPrivacyParams p;
      p.iterations = 40;
      p.batch_size = 50;
      p.pool_size = 500;
      p.sigma_sgd = sigma;
      p.sigma_pi = 0.5;
      p.num_classes = 2;
      p.c_lambda = 0.1;
      p.beta = 1.0;
      p.step_size = eta;
      for (double alpha : {2.0, 8.0, 64.0}) {
        const oracle::PsiInputs in{alpha, 40, 50, 500, sigma, 0.5, 2, 0.1, eta};
        const double want = oracle::StraightLineBound(in, ratios, s_alpha);
        EXPECT_NEAR(*Dp2dpRdpBound(p, alpha), want, 1e-12 * want)
            << sigma << " " << eta << " " << alpha;
      }
    }
  }
}

TEST(Dp2dpRdpBoundTest, ShiftedBranchCanWin) {
  Dp2dpPrivacyParams p;
  p.iterations = 2000;
  p.batch_size = 50;
  p.pool_size = 500;
  p.sigma_sgd = 0.02;
  p.sigma_pi = kInf;
  p.num_classes = 2;
  p.c_lambda = 0.01;
  p.beta = 1.0;
  p.step_size = 2.0;
  const double plain =
      2000.0 * *SubsampledGaussianRdp(4.0, 0.1, 50 * 0.02 / std::sqrt(32.0));
  EXPECT_LT(*Dp2dpRdpBound(p, 4.0), plain);
}

TEST(Dp2dpRdpBoundTest, SingleStepEqualsOneQuery) {
  Dp2dpPrivacyParams p = DeskParams();
  p.iterations = 1;
  for (double alpha : {2.0, 16.0}) {
    const double want =
        alpha / (2.0 * 2000.0 * 2000.0) +
        *SubsampledGaussianRdp(alpha, 0.064, 128.0 / std::numbers::sqrt2);
    EXPECT_DOUBLE_EQ(*Dp2dpRdpBound(p, alpha), want);
  }
}

TEST(Dp2dpRdpBoundTest, InfiniteSigmaPiSkipsFrequencyTerm) {
  Dp2dpPrivacyParams p = DeskParams();
  p.sigma_pi = kInf;
  EXPECT_DOUBLE_EQ(*Dp2dpRdpBound(p, 8.0), *SgdRdpBound(p, 8.0));
}

TEST(Dp2dpRdpBoundTest, StepSizeAboveTwoBetaIsRejected) {
  Dp2dpPrivacyParams p = DeskParams();
  p.step_size = 0.03;
  auto got = Dp2dpRdpBound(p, 2.0);
  EXPECT_EQ(got.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(got.status().message(), HasSubstr("precondition violated"));
}

TEST(Dp2dpRdpBoundTest, RejectsBatchLargerThanPool) {
  Dp2dpPrivacyParams p = DeskParams();
  p.batch_size = 3000;
  EXPECT_FALSE(Dp2dpRdpBound(p, 2.0).ok());
}

TEST(AnalyticNoiseTest, TranscribesClosedForm) {
  const PrivacyBudget target{0.5, 1e-5};
  auto got = *AnalyticNoiseCalibration(target, 2000, 100, 6, 1.0, 1e-5);
  const double l = std::log(1e5);
  const double r = std::sqrt(l + 0.5) - std::sqrt(l);
  EXPECT_NEAR(got.sigma_pi_bound, std::sqrt(2.0) * 2000 * r, 1e-9);
  EXPECT_NEAR(got.sigma_pi, std::sqrt(2.0) / (2000 * r), 1e-12);
  const double m = std::min(100.0, std::ceil(std::sqrt(12.0) * 2000 / 4e-5));
  const double sp2 = got.sigma_pi * got.sigma_pi;
  EXPECT_NEAR(got.sigma_sgd_squared,
              16.0 * m / (2000.0 * 2000 * r * r - 1.0 / (2.0 * sp2)),
              1e-12 * got.sigma_sgd_squared);
  EXPECT_NEAR(got.sigma_sgd_squared, 16.0 * m / (0.75 * 4e6 * r * r),
              1e-9 * got.sigma_sgd_squared);
}

TEST(AnalyticNoiseTest, DeltaOneBound) {
  auto got = *AnalyticNoiseCalibration({0.8, 1.0}, 100, 10, 2, 1.0, 0.1);
  EXPECT_NEAR(got.sigma_pi_bound, std::sqrt(2.0) * 100 * std::sqrt(0.8), 1e-9);
}

TEST(AnalyticNoiseTest, StepCountCappedBySmoothnessTerm) {
  // ceil(sqrt(4) * 1 * 10 / (4 * 10)) = 1 < T.
  auto got = *AnalyticNoiseCalibration({1.0, 1e-5}, 10, 50, 2, 1.0, 10.0);
  const double l = std::log(1e5);
  const double r = std::sqrt(l + 1.0) - std::sqrt(l);
  EXPECT_NEAR(got.sigma_sgd_squared, 16.0 / (0.75 * 100 * r * r),
              1e-9 * got.sigma_sgd_squared);
}

TEST(CalibrateSigmaTest, AchievedBudgetMeetsTarget) {
  Dp2dpPrivacyParams p = DeskParams();
  p.step_size.reset();
  p.beta = 1e-5;
  for (double eps : {0.46, 0.5, 1.0}) {
    const PrivacyBudget target{eps, 1e-5};
    auto cal = *CalibrateSigma(target, p);
    EXPECT_LE(cal.achieved.budget.epsilon, eps);
    EXPECT_GE(cal.achieved.budget.epsilon, 0.99 * eps);
    Dp2dpPrivacyParams check = p;
    check.sigma_pi = cal.sigma_pi;
    check.sigma_sgd = cal.sigma_sgd;
    auto recheck = *RdpToDp(*Dp2dpRdpCurve(check), 1e-5);
    EXPECT_EQ(recheck.budget.epsilon, cal.achieved.budget.epsilon);
  }
}

TEST(CalibrateSigmaTest, TighterTargetNeedsMoreNoise) {
  Dp2dpPrivacyParams p = DeskParams();
  p.step_size.reset();
  auto loose = *CalibrateSigma({1.0, 1e-5}, p);
  auto tight = *CalibrateSigma({0.5, 1e-5}, p);
  EXPECT_GT(tight.sigma_sgd, loose.sigma_sgd);
  EXPECT_GT(tight.sigma_pi, loose.sigma_pi);
}

TEST(CalibrateGaussianSigmaTest, SmallestSigmaOnGrid) {
  for (double eps : {0.3, 1.0, 4.0}) {
    const PrivacyBudget target{eps, 1e-5};
    const double sigma = *CalibrateGaussianSigma(target, 0.7);
    auto curve =
        *RdpCurve::Create([&](double a) { return GaussianRdp(a, 0.7, sigma); });
    EXPECT_LE(RdpToDp(curve, 1e-5)->budget.epsilon, eps);
    auto smaller = *RdpCurve::Create(
        [&](double a) { return GaussianRdp(a, 0.7, 0.999 * sigma); });
    EXPECT_GT(RdpToDp(smaller, 1e-5)->budget.epsilon, eps);
  }
  EXPECT_EQ(*CalibrateGaussianSigma({1.0, 1e-5}, 0.0), 0.0);
}

}  // namespace
}  // namespace dp2dp
