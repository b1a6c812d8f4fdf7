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

#include "dp2dp/postprocess.h"

#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dp2dp/objective.h"
#include "dp2dp/random.h"
#include "dp2dp/status.h"
#include "dp2dp/types.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dp2dp {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

constexpr SensitiveAttr kPlus = SensitiveAttr::kPlus;
constexpr SensitiveAttr kMinus = SensitiveAttr::kMinus;

// Random pool of `n` rows with a table model over `k` classes; both groups
// are nonempty.
struct Instance {
  UnlabeledDataset pool;
  std::shared_ptr<const testing::TableModel> model;
  std::vector<std::vector<double>> probs;
};

Instance RandomInstance(int k, std::size_t n, double plus_rate, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n);
  std::vector<SensitiveAttr> groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = testing::RandomSimplex(k, rng);
    groups[i] = rng.Bernoulli(plus_rate) ? kPlus : kMinus;
  }
  groups[0] = kPlus;
  groups[n - 1] = kMinus;
  auto model = std::make_shared<testing::TableModel>(k, rows);
  return {testing::IdPool(groups), std::move(model), std::move(rows)};
}

Dp2dpConfig NoiselessConfig() {
  Dp2dpConfig config;
  config.rho = 0.05;
  config.beta = 0.01;
  config.iterations = 200;
  config.batch_size = 16;
  config.schedule = StepSchedule::InverseSqrt(0.5);
  config.seed = 99;
  return config;
}

TEST(StepScheduleTest, NamesRoundTrip) {
  for (auto kind :
       {StepSchedule::Kind::kConstant, StepSchedule::Kind::kInverseSqrt,
        StepSchedule::Kind::kUtility}) {
    StepSchedule s{kind, 1.0};
    EXPECT_EQ(*StepSchedule::ParseKind(s.Name()), kind);
  }
  EXPECT_FALSE(StepSchedule::ParseKind("adam").ok());
}

TEST(StepScheduleTest, StepSizes) {
  Dp2dpConfig config;
  config.schedule = StepSchedule::Constant(0.02);
  EXPECT_EQ(config.StepSize(7, 3), 0.02);
  config.schedule = StepSchedule::InverseSqrt(0.5);
  EXPECT_DOUBLE_EQ(config.StepSize(4, 3), 0.25);
  config.schedule = StepSchedule::Utility();
  config.rho = 0.1;
  config.sigma_sgd = 2.0;
  config.batch_size = 8;
  config.c_lambda = 1.5;
  const double d = std::sqrt(6.0) * 1.5;
  const double l = 2 * std::sqrt(2.0) + 0.1 * std::sqrt(6.0);
  EXPECT_DOUBLE_EQ(config.StepSize(9, 3),
                   d / std::sqrt(9 * (l * l + 4.0 * 6.0 / 64.0)));
}

TEST(Dp2dpConfigTest, Validation) {
  EXPECT_TRUE(NoiselessConfig().Validate().ok());
  auto broken = [](auto mutate) {
    Dp2dpConfig c = NoiselessConfig();
    mutate(c);
    return c.Validate();
  };
  EXPECT_EQ(broken([](Dp2dpConfig& c) { c.rho = -0.1; }).code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(broken([](Dp2dpConfig& c) { c.beta = 0; }).ok());
  EXPECT_FALSE(broken([](Dp2dpConfig& c) { c.iterations = 0; }).ok());
  EXPECT_FALSE(broken([](Dp2dpConfig& c) { c.batch_size = 0; }).ok());
  EXPECT_FALSE(broken([](Dp2dpConfig& c) { c.sigma_sgd = -1; }).ok());
  EXPECT_FALSE(broken([](Dp2dpConfig& c) { c.c_lambda = 0; }).ok());
  EXPECT_FALSE(broken([](Dp2dpConfig& c) { c.schedule.eta = 0; }).ok());
  EXPECT_FALSE(broken([](Dp2dpConfig& c) { c.probe_size = -1; }).ok());
  EXPECT_TRUE(broken([](Dp2dpConfig& c) {
                c.schedule = StepSchedule::Utility();
              }).ok());
}

TEST(PrivatizeProportionsTest, NoiselessIsEmpirical) {
  const UnlabeledDataset pool =
      testing::IdPool({kPlus, kMinus, kPlus, kPlus, kMinus});
  Rng rng(1);
  PrivatizedProportions pi = PrivatizeProportions(pool, 0.0, rng);
  EXPECT_DOUBLE_EQ(pi[kPlus], 0.6);
  EXPECT_DOUBLE_EQ(pi[kMinus], 0.4);
  EXPECT_DOUBLE_EQ(pi[kPlus] + pi[kMinus], 1.0);
}

TEST(PrivatizeProportionsTest, OneSwapMovesByOneOverN) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.UniformIndex(500);
    std::vector<SensitiveAttr> s(n);
    for (auto& v : s) v = rng.Bernoulli(0.5) ? kPlus : kMinus;
    std::vector<SensitiveAttr> swapped = s;
    const std::size_t i = rng.UniformIndex(n);
    swapped[i] = swapped[i] == kPlus ? kMinus : kPlus;
    Rng r1(0), r2(0);
    const auto a = PrivatizeProportions(testing::IdPool(s), 0.0, r1);
    const auto b = PrivatizeProportions(testing::IdPool(swapped), 0.0, r2);
    for (SensitiveAttr g : kGroups) {
      EXPECT_NEAR(std::abs(a[g] - b[g]), 1.0 / n, 1e-15);
    }
  }
}

TEST(PrivatizeProportionsTest, NoiseIsSeededAndUnclipped) {
  const UnlabeledDataset pool = testing::IdPool({kPlus, kMinus});
  Rng a(3), b(3);
  const auto x = PrivatizeProportions(pool, 5.0, a);
  const auto y = PrivatizeProportions(pool, 5.0, b);
  EXPECT_EQ(x.pi_bar, y.pi_bar);
  // With sigma 5 at least one of many draws leaves [0, 1].
  Rng c(4);
  bool outside = false;
  for (int i = 0; i < 20; ++i) {
    const auto z = PrivatizeProportions(pool, 5.0, c);
    outside |= z[kPlus] < 0 || z[kPlus] > 1;
  }
  EXPECT_TRUE(outside);
}

TEST(SampleMinibatchTest, TwoSingletonGroups) {
  const GroupPartition groups =
      PartitionByGroup(testing::IdPool({kPlus, kMinus}));
  Rng rng(5);
  constexpr int kDraws = 200000;
  int first = 0;
  for (int i = 0; i < kDraws; ++i) {
    const auto batch = *SampleMinibatch(groups, 1, rng);
    ASSERT_EQ(batch.size(), 1u);
    EXPECT_EQ(batch[0].s, batch[0].row == 0 ? kPlus : kMinus);
    first += batch[0].row == 0;
  }
  // Five binomial standard deviations.
  EXPECT_NEAR(static_cast<double>(first) / kDraws, 0.5,
              5 * 0.5 / std::sqrt(kDraws));
}

TEST(SampleMinibatchTest, GroupUniformNotPoolUniform) {
  constexpr std::size_t kBig = 1000000;
  GroupPartition groups;
  groups.rows[GroupIndex(kMinus)] = {0};
  groups.rows[GroupIndex(kPlus)].resize(kBig);
  for (std::size_t i = 0; i < kBig; ++i)
    groups.rows[GroupIndex(kPlus)][i] = i + 1;
  Rng rng(6);
  constexpr int kDraws = 100000;
  const auto batch = *SampleMinibatch(groups, kDraws, rng);
  int lonely = 0;
  for (const BatchItem& item : batch) lonely += item.row == 0;
  EXPECT_NEAR(static_cast<double>(lonely) / kDraws, 0.5,
              5 * 0.5 / std::sqrt(kDraws));
}

TEST(SampleMinibatchTest, WithinGroupUniform) {
  const GroupPartition groups =
      PartitionByGroup(testing::IdPool({kPlus, kPlus, kPlus, kMinus}));
  Rng rng(7);
  const auto batch = *SampleMinibatch(groups, 120000, rng);
  std::vector<int> counts(4);
  for (const BatchItem& item : batch) ++counts[item.row];
  double chi2 = 0;
  const double expected[4] = {20000, 20000, 20000, 60000};
  for (int i = 0; i < 4; ++i) {
    chi2 += (counts[i] - expected[i]) * (counts[i] - expected[i]) / expected[i];
  }
  // 0.999 quantile of chi-square with 3 degrees of freedom.
  EXPECT_LT(chi2, 16.27);
}

TEST(SampleMinibatchTest, DeterministicAndFailsOnEmptyGroup) {
  const GroupPartition groups =
      PartitionByGroup(testing::IdPool({kPlus, kMinus, kPlus, kMinus}));
  Rng a(8), b(8);
  const auto x = *SampleMinibatch(groups, 50, a);
  const auto y = *SampleMinibatch(groups, 50, b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].row, y[i].row);
    EXPECT_EQ(x[i].s, y[i].s);
  }
  const GroupPartition lopsided =
      PartitionByGroup(testing::IdPool({kPlus, kPlus}));
  auto status = SampleMinibatch(lopsided, 1, a).status();
  EXPECT_EQ(ExitCodeFor(status), 3);
}

TEST(ProjectBoxTest, Examples) {
  EXPECT_THAT(ProjectBox(std::vector<double>{-1, 0.5, 4}, 1.0),
              ElementsAre(0.0, 0.5, 1.0));
  const std::vector<double> inside = {0, 0.3, 1};
  EXPECT_EQ(ProjectBox(inside, 1.0), inside);
}

TEST(ProjectBoxTest, NonExpansive) {
  Rng rng(9);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t dim = 2 + rng.UniformIndex(10);
    std::vector<double> u(dim), v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      u[i] = rng.Normal(0.5, 2.0);
      v[i] = rng.Normal(0.5, 2.0);
    }
    const double c = 0.1 + rng.Uniform();
    const auto pu = ProjectBox(u, c);
    const auto pv = ProjectBox(v, c);
    double before = 0, after = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      before += (u[i] - v[i]) * (u[i] - v[i]);
      after += (pu[i] - pv[i]) * (pu[i] - pv[i]);
      EXPECT_GE(pu[i], 0.0);
      EXPECT_LE(pu[i], c);
    }
    EXPECT_LE(after, before + 1e-15);
    EXPECT_EQ(ProjectBox(pu, c), pu);
  }
}

TEST(RunDp2dpTest, DeterministicForFixedSeed) {
  const Instance inst = RandomInstance(3, 300, 0.4, 10);
  Dp2dpConfig config = NoiselessConfig();
  config.sigma_pi = 0.01;
  config.sigma_sgd = 0.5;
  auto a = *RunDp2dp(inst.pool, inst.model, config);
  auto b = *RunDp2dp(inst.pool, inst.model, config);
  EXPECT_EQ(a.classifier.lambda().Flat(), b.classifier.lambda().Flat());
  EXPECT_EQ(a.classifier.proportions().pi_bar,
            b.classifier.proportions().pi_bar);
  config.seed += 1;
  auto c = *RunDp2dp(inst.pool, inst.model, config);
  EXPECT_NE(a.classifier.lambda().Flat(), c.classifier.lambda().Flat());
}

TEST(RunDp2dpTest, EveryIterateStaysInTheBox) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance inst = RandomInstance(2 + trial % 4, 200, 0.5, 100 + trial);
    Dp2dpConfig config = NoiselessConfig();
    config.sigma_sgd = 5.0 * rng.Uniform();
    config.c_lambda = 0.05 + rng.Uniform();
    config.schedule = StepSchedule::Constant(2.0);
    config.seed = trial;
    auto result = *RunDp2dp(inst.pool, inst.model, config);
    ASSERT_EQ(result.trace.records.size(),
              static_cast<std::size_t>(config.iterations));
    for (const TraceRecord& r : result.trace.records) {
      for (double v : r.lambda) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, config.c_lambda);
      }
    }
    EXPECT_EQ(result.trace.records.back().lambda,
              result.classifier.lambda().Flat());
  }
}

TEST(RunDp2dpTest, LargeRhoKeepsMultipliersAtZero) {
  // With rho >= 2 every per-sample gradient coordinate is >= 0, so the
  // projected iterates never leave 0; the classifier is argmax pi p.
  const Instance inst = RandomInstance(4, 400, 0.3, 12);
  Dp2dpConfig config = NoiselessConfig();
  config.rho = 2.0;
  config.iterations = 300;
  auto result = *RunDp2dp(inst.pool, inst.model, config);
  for (double v : result.classifier.lambda().Flat()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < inst.pool.size(); ++i) {
    const SensitiveAttr s = inst.pool.s(i);
    const auto& p = inst.probs[i];
    std::vector<double> scores(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      scores[k] = result.classifier.proportions()[s] * p[k];
    }
    EXPECT_EQ(*result.classifier.Predict(inst.pool.x(i), s),
              ArgmaxScores(scores));
  }
}

TEST(RunDp2dpTest, RhoOneDrivesMultipliersTowardZero) {
  const Instance inst = RandomInstance(3, 400, 0.5, 13);
  Dp2dpConfig config = NoiselessConfig();
  config.rho = 1.0;
  config.iterations = 2000;
  config.batch_size = 64;
  auto result = *RunDp2dp(inst.pool, inst.model, config);
  for (double v : result.classifier.lambda().Flat()) EXPECT_LT(v, 0.05);
}

TEST(RunDp2dpTest, NoiselessRunDecreasesObjective) {
  // Groups lean toward different classes, so lambda = 0 is far from optimal.
  Rng rng(14);
  std::vector<std::vector<double>> rows;
  std::vector<SensitiveAttr> groups;
  for (int i = 0; i < 400; ++i) {
    const bool plus = i % 2 == 0;
    const double lean = 0.5 + 0.4 * rng.Uniform();
    rows.push_back(plus ? std::vector<double>{lean, 1 - lean}
                        : std::vector<double>{1 - lean, lean});
    groups.push_back(plus ? kPlus : kMinus);
  }
  auto model = std::make_shared<testing::TableModel>(2, rows);
  const UnlabeledDataset pool = testing::IdPool(groups);
  Dp2dpConfig config = NoiselessConfig();
  config.rho = 0.0;
  config.beta = 0.05;
  config.iterations = 1000;
  config.schedule = StepSchedule::Constant(2 * config.beta);
  auto result = *RunDp2dp(pool, model, config);
  const SmoothingParams params{config.beta, config.rho};
  const auto& pi = result.classifier.proportions();
  const double start =
      *ObjectiveH(LagrangeParams::Zero(2, 1.0), pool, *model, pi, params);
  const double end =
      *ObjectiveH(result.classifier.lambda(), pool, *model, pi, params);
  EXPECT_LT(end, start - 0.01);
}

TEST(RunDp2dpTest, WarnsOnLargeConstantStep) {
  const Instance inst = RandomInstance(2, 50, 0.5, 15);
  Dp2dpConfig config = NoiselessConfig();
  config.iterations = 3;
  config.schedule = StepSchedule::Constant(1.0);
  auto result = *RunDp2dp(inst.pool, inst.model, config);
  ASSERT_FALSE(result.trace.warnings.empty());
  EXPECT_THAT(result.trace.warnings[0], HasSubstr("beta"));
  config.schedule = StepSchedule::Constant(2 * config.beta);
  EXPECT_TRUE(RunDp2dp(inst.pool, inst.model, config)->trace.warnings.empty());
}

TEST(RunDp2dpTest, EmptyGroupFails) {
  auto model = std::make_shared<testing::TableModel>(
      2, std::vector<std::vector<double>>{{0.5, 0.5}, {0.1, 0.9}});
  auto status =
      RunDp2dp(testing::IdPool({kPlus, kPlus}), model, NoiselessConfig())
          .status();
  EXPECT_EQ(ExitCodeFor(status), 3);
}

TEST(RunDp2dpTest, TraceCsv) {
  const Instance inst = RandomInstance(2, 60, 0.5, 16);
  Dp2dpConfig config = NoiselessConfig();
  config.iterations = 4;
  config.probe_size = 10;
  auto result = *RunDp2dp(inst.pool, inst.model, config);
  for (const TraceRecord& r : result.trace.records) {
    EXPECT_TRUE(std::isfinite(r.probe_objective));
  }
  std::ostringstream out;
  WriteTraceCsv(result.trace, out);
  std::istringstream lines(out.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header,
            "t,step_size,lambda1_1,lambda1_2,lambda2_1,lambda2_2,"
            "probe_objective,noise_seed");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, 4);
}

}  // namespace
}  // namespace dp2dp
