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

#include "dp2dp/logreg.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "dp2dp/random.h"
#include "dp2dp/status.h"
#include "dp2dp/types.h"
#include "gtest/gtest.h"
#include "oracles/oracles.h"

namespace dp2dp {
namespace {

constexpr SensitiveAttr kPlus = SensitiveAttr::kPlus;
constexpr SensitiveAttr kMinus = SensitiveAttr::kMinus;

// Gaussian blobs around class-specific centers in `dim` dimensions.
LabeledDataset Blobs(std::size_t n, std::size_t dim, int k, double spread,
                     uint64_t seed) {
  Rng rng(seed);
  std::vector<double> centers(k * dim);
  for (double& c : centers) c = rng.Normal(0.0, 2.0);
  std::vector<double> x(n * dim);
  std::vector<SensitiveAttr> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % k);
    s[i] = rng.Bernoulli(0.5) ? kPlus : kMinus;
    for (std::size_t j = 0; j < dim; ++j) {
      x[i * dim + j] = centers[y[i] * dim + j] + spread * rng.Normal();
    }
  }
  return *LabeledDataset::Create(FeatureMatrix(n, dim, std::move(x)),
                                 std::move(s), std::move(y), k);
}

double TrainingAccuracy(const LogRegModel& model, const LabeledDataset& data) {
  std::vector<double> p(model.num_classes());
  int correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.Probabilities(data.x(i), data.s(i), p);
    correct += ArgmaxScores(p) == data.y(i);
  }
  return static_cast<double>(correct) / data.size();
}

double Sum(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

TEST(Phase1ConfigTest, Validation) {
  Phase1Config config;
  EXPECT_TRUE(config.Validate().ok());
  config.learning_rate = 0;
  EXPECT_EQ(ExitCodeFor(config.Validate()), 2);
  config = Phase1Config();
  config.reg_strength = 0;
  EXPECT_FALSE(config.Validate().ok());
  config = Phase1Config();
  config.iterations = -1;
  EXPECT_FALSE(config.Validate().ok());
}

TEST(LogRegModelTest, ZeroWeightsAreUniform) {
  const LogRegModel model = LogRegModel::Zero(4, 3, false, 1.0);
  const auto p = *model.PredictProbs(std::vector<double>{1, -2, 3}, kPlus);
  for (double v : p) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(LogRegModelTest, CreateValidates) {
  EXPECT_FALSE(LogRegModel::Create(1, 2, false, {0, 0, 0}, 1.0).ok());
  EXPECT_FALSE(LogRegModel::Create(2, 2, false, {0, 0, 0}, 1.0).ok());
  EXPECT_FALSE(LogRegModel::Create(2, 1, false, {0, NAN, 0, 0}, 1.0).ok());
  EXPECT_TRUE(LogRegModel::Create(2, 1, true, {0, 0, 0, 0, 0, 0}, 1.0).ok());
}

TEST(LogRegModelTest, DimensionMismatch) {
  const LogRegModel model = LogRegModel::Zero(2, 3, false, 1.0);
  EXPECT_EQ(ExitCodeFor(
                model.PredictProbs(std::vector<double>{1, 2}, kPlus).status()),
            3);
}

TEST(LogRegModelTest, OutputsOnSimplexAndMonotone) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformIndex(6));
    const std::size_t dim = 1 + rng.UniformIndex(5);
    const bool use_s = rng.Bernoulli(0.5);
    const std::size_t stride = dim + (use_s ? 2 : 1);
    std::vector<double> w(k * stride);
    for (double& v : w) v = rng.Normal(0.0, 2.0);
    const LogRegModel model = *LogRegModel::Create(k, dim, use_s, w, 1.0);
    std::vector<double> x(dim);
    for (double& v : x) v = rng.Normal();
    const SensitiveAttr s = rng.Bernoulli(0.5) ? kPlus : kMinus;
    const auto p = *model.PredictProbs(x, s);
    for (double v : p) EXPECT_GE(v, 0.0);
    EXPECT_NEAR(Sum(p), 1.0, 1e-12);

    // Raising one class's bias raises that class's probability.
    const int target = static_cast<int>(rng.UniformIndex(k));
    std::vector<double> w2 = w;
    w2[target * stride + stride - 1] += 0.5;
    const auto q =
        *LogRegModel::Create(k, dim, use_s, w2, 1.0)->PredictProbs(x, s);
    EXPECT_GT(q[target], p[target]);
  }
}

TEST(LogRegModelTest, SensitiveFeatureIsUsedOnlyWhenEnabled) {
  const std::vector<double> x = {0.5};
  // Weight on s is the middle column.
  auto with_s = *LogRegModel::Create(2, 1, true, {0, 1, 0, 0, -1, 0}, 1.0);
  EXPECT_NE((*with_s.PredictProbs(x, kPlus))[0],
            (*with_s.PredictProbs(x, kMinus))[0]);
  auto without_s = *LogRegModel::Create(2, 1, false, {1, 0, -1, 0}, 1.0);
  EXPECT_EQ(*without_s.PredictProbs(x, kPlus),
            *without_s.PredictProbs(x, kMinus));
}

TEST(LogRegModelTest, JsonRoundTrip) {
  Rng rng(2);
  std::vector<double> w(3 * 4);
  for (double& v : w) v = rng.Normal();
  LogRegModel model = *LogRegModel::Create(3, 2, true, w, 0.7);
  model.set_provenance(0.25, 123456789012345ULL);
  const LogRegModel back = *LogRegModel::FromJson(model.ToJson());
  EXPECT_EQ(back.num_classes(), 3);
  EXPECT_EQ(back.dim(), 2u);
  EXPECT_TRUE(back.use_sensitive_feature());
  EXPECT_TRUE(std::equal(w.begin(), w.end(), back.weights().begin(),
                         back.weights().end()));
  EXPECT_EQ(back.reg_strength(), 0.7);
  EXPECT_EQ(back.perturb_sigma(), 0.25);
  EXPECT_EQ(back.seed(), 123456789012345ULL);
  EXPECT_FALSE(LogRegModel::FromJson("{\"K\": 2}").ok());
  EXPECT_FALSE(LogRegModel::FromJson("not json").ok());
}

TEST(LogRegObjectiveTest, GradientMatchesFiniteDifferences) {
  const LabeledDataset data = Blobs(120, 3, 3, 1.0, 3);
  Phase1Config config;
  config.reg_strength = 0.3;
  config.feature_clip = 2.0;
  Rng rng(4);
  std::vector<double> w(3 * 4);
  for (double& v : w) v = rng.Normal(0.0, 0.5);
  std::vector<double> grad(w.size()), scratch(w.size());
  LogRegObjective(data, config, w, grad);
  const std::vector<double> fd = oracle::CentralDifference(
      [&](const std::vector<double>& v) {
        return LogRegObjective(data, config, v, scratch);
      },
      w, 1e-6);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(grad[i], fd[i], 1e-7 * std::max(1.0, std::abs(fd[i])));
  }
}

TEST(LogRegObjectiveTest, SerialAndParallelAgreeExactly) {
  const LabeledDataset data = Blobs(3000, 5, 4, 1.5, 5);
  Phase1Config config;
  Rng rng(6);
  std::vector<double> w(4 * 6);
  for (double& v : w) v = rng.Normal();
  std::vector<double> g1(w.size()), g2(w.size());
  EXPECT_EQ(LogRegObjective(data, config, w, g1, Exec::kSerial),
            LogRegObjective(data, config, w, g2, Exec::kParallel));
  EXPECT_EQ(g1, g2);
  config.iterations = 50;
  auto a = *TrainLogReg(data, config, nullptr, Exec::kSerial);
  auto b = *TrainLogReg(data, config, nullptr, Exec::kParallel);
  EXPECT_TRUE(std::equal(a.weights().begin(), a.weights().end(),
                         b.weights().begin(), b.weights().end()));
}

TEST(TrainLogRegTest, SeparableToy) {
  Rng rng(7);
  constexpr std::size_t kN = 400;
  std::vector<double> x(kN);
  std::vector<SensitiveAttr> s(kN);
  std::vector<int> y(kN);
  for (std::size_t i = 0; i < kN; ++i) {
    y[i] = static_cast<int>(i % 2);
    x[i] = (y[i] == 0 ? -1.0 : 1.0) + 0.1 * rng.Normal();
    s[i] = rng.Bernoulli(0.5) ? kPlus : kMinus;
  }
  const LabeledDataset data = *LabeledDataset::Create(
      FeatureMatrix(kN, 1, std::move(x)), std::move(s), std::move(y), 2);
  TrainStats stats;
  const LogRegModel model = *TrainLogReg(data, Phase1Config(), &stats);
  EXPECT_GE(TrainingAccuracy(model, data), 0.99);
  EXPECT_TRUE(stats.converged);
  EXPECT_LE(stats.grad_norm, 1e-6);
}

TEST(TrainLogRegTest, IdenticalLabelsRejected) {
  const LabeledDataset data = *LabeledDataset::Create(
      FeatureMatrix(3, 1, {1, 2, 3}), {kPlus, kMinus, kPlus}, {1, 1, 1}, 3);
  EXPECT_EQ(ExitCodeFor(TrainLogReg(data, Phase1Config()).status()), 3);
}

TEST(TrainLogRegTest, ZeroIterationsGiveUniformPredictions) {
  const LabeledDataset data = Blobs(60, 2, 3, 1.0, 8);
  Phase1Config config;
  config.iterations = 0;
  const LogRegModel model = *TrainLogReg(data, config);
  for (double w : model.weights()) EXPECT_EQ(w, 0.0);
  const auto p = *model.PredictProbs(data.x(0), data.s(0));
  for (double v : p) EXPECT_DOUBLE_EQ(v, 1.0 / 3);
}

TEST(TrainLogRegTest, DivergenceIsANumericError) {
  const LabeledDataset data = Blobs(60, 2, 3, 1.0, 9);
  Phase1Config config;
  config.learning_rate = 1e6;
  config.feature_clip = 0.0;
  EXPECT_EQ(ExitCodeFor(TrainLogReg(data, config).status()), 4);
}

TEST(TrainLogRegTest, RowOrderDoesNotChangeTheOptimum) {
  const LabeledDataset data = Blobs(500, 4, 3, 2.0, 10);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(11);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformIndex(i)]);
  }
  const LabeledDataset shuffled = data.Select(order);
  Phase1Config config;
  config.iterations = 20000;
  config.learning_rate = 0.5;
  config.grad_tol = 1e-10;
  TrainStats a, b;
  ASSERT_TRUE(TrainLogReg(data, config, &a).ok());
  ASSERT_TRUE(TrainLogReg(shuffled, config, &b).ok());
  EXPECT_NEAR(a.objective, b.objective, 1e-8);
}

TEST(PerturbOutputTest, ZeroNoiseAndDeterminism) {
  const LabeledDataset data = Blobs(100, 3, 3, 1.0, 12);
  const LogRegModel model = *TrainLogReg(data, Phase1Config());
  Rng rng(13);
  const LogRegModel same = PerturbOutput(model, 0.0, rng);
  EXPECT_TRUE(std::equal(model.weights().begin(), model.weights().end(),
                         same.weights().begin(), same.weights().end()));
  Rng a(14), b(14);
  const LogRegModel x = PerturbOutput(model, 0.5, a);
  const LogRegModel y = PerturbOutput(model, 0.5, b);
  EXPECT_TRUE(std::equal(x.weights().begin(), x.weights().end(),
                         y.weights().begin(), y.weights().end()));
  EXPECT_FALSE(std::equal(model.weights().begin(), model.weights().end(),
                          x.weights().begin(), x.weights().end()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = *x.PredictProbs(data.x(i), data.s(i));
    for (double v : p) EXPECT_GE(v, 0.0);
    EXPECT_NEAR(Sum(p), 1.0, 1e-12);
  }
}

TEST(Phase1SensitivityTest, FormulaAndPreconditions) {
  Phase1Config config;
  config.feature_clip = 3.0;
  config.reg_strength = 0.5;
  EXPECT_DOUBLE_EQ(*Phase1Sensitivity(100, config),
                   2 * std::sqrt(2.0) * std::sqrt(10.0) / (100 * 0.5));
  config.use_sensitive_feature = true;
  EXPECT_DOUBLE_EQ(*Phase1Sensitivity(100, config),
                   2 * std::sqrt(2.0) * std::sqrt(11.0) / (100 * 0.5));
  config.feature_clip = 0.0;
  EXPECT_EQ(ExitCodeFor(Phase1Sensitivity(100, config).status()), 2);
}

TEST(Phase1SensitivityTest, NeighbouringMinimizersStayWithinTheBound) {
  Rng rng(15);
  Phase1Config config;
  config.feature_clip = 2.0;
  config.reg_strength = 0.2;
  config.iterations = 20000;
  config.learning_rate = 0.5;
  config.grad_tol = 1e-11;
  const double bound = *Phase1Sensitivity(80, config);
  for (int trial = 0; trial < 5; ++trial) {
    const LabeledDataset data = Blobs(80, 2, 3, 1.0, 100 + trial);
    // Replace one row with an extreme point carrying another label.
    std::vector<double> x(data.features().values().begin(),
                          data.features().values().end());
    std::vector<int> y(data.labels().begin(), data.labels().end());
    std::vector<SensitiveAttr> s(data.groups().begin(), data.groups().end());
    const std::size_t i = rng.UniformIndex(80);
    x[2 * i] = 50 * rng.Normal();
    x[2 * i + 1] = 50 * rng.Normal();
    y[i] = (y[i] + 1) % 3;
    const LabeledDataset other = *LabeledDataset::Create(
        FeatureMatrix(80, 2, std::move(x)), std::move(s), std::move(y), 3);
    const LogRegModel a = *TrainLogReg(data, config);
    const LogRegModel b = *TrainLogReg(other, config);
    double dist = 0;
    for (std::size_t j = 0; j < a.weights().size(); ++j) {
      dist += std::pow(a.weights()[j] - b.weights()[j], 2);
    }
    EXPECT_LE(std::sqrt(dist), bound);
  }
}

}  // namespace
}  // namespace dp2dp
