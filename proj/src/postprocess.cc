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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dp2dp/objective.h"
#include "dp2dp/status.h"

namespace dp2dp {

std::string StepSchedule::Name() const {
  switch (kind) {
    case Kind::kConstant:
      return "constant";
    case Kind::kInverseSqrt:
      return "inverse_sqrt";
    case Kind::kUtility:
      return "utility";
  }
  return "unknown";
}

absl::StatusOr<StepSchedule::Kind> StepSchedule::ParseKind(
    const std::string& name) {
  if (name == "constant") return Kind::kConstant;
  if (name == "inverse_sqrt") return Kind::kInverseSqrt;
  if (name == "utility") return Kind::kUtility;
  return ConfigError(absl::StrCat("schedule: unknown kind '", name,
                                  "' (expected constant, inverse_sqrt or "
                                  "utility)"));
}

absl::Status Dp2dpConfig::Validate() const {
  if (!(rho >= 0.0))
    return ConfigError(absl::StrCat("rho: must be >= 0, got ", rho));
  if (!(beta > 0.0))
    return ConfigError(absl::StrCat("beta: must be > 0, got ", beta));
  if (iterations < 1) {
    return ConfigError(
        absl::StrCat("iterations: must be >= 1, got ", iterations));
  }
  if (batch_size < 1) {
    return ConfigError(
        absl::StrCat("batch_size: must be >= 1, got ", batch_size));
  }
  if (!(sigma_pi >= 0.0) || !(sigma_sgd >= 0.0)) {
    return ConfigError("sigma_pi, sigma_sgd: must be >= 0");
  }
  if (!(c_lambda > 0.0)) {
    return ConfigError(absl::StrCat("c_lambda: must be > 0, got ", c_lambda));
  }
  if (schedule.kind != StepSchedule::Kind::kUtility && !(schedule.eta > 0.0)) {
    return ConfigError(absl::StrCat("eta: must be > 0, got ", schedule.eta));
  }
  if (probe_size < 0) return ConfigError("probe_size: must be >= 0");
  return absl::OkStatus();
}

double Dp2dpConfig::StepSize(int64_t t, int num_classes) const {
  const double td = static_cast<double>(t);
  switch (schedule.kind) {
    case StepSchedule::Kind::kConstant:
      return schedule.eta;
    case StepSchedule::Kind::kInverseSqrt:
      return schedule.eta / std::sqrt(td);
    case StepSchedule::Kind::kUtility: {
      const double dim = 2.0 * num_classes;
      const double diameter = std::sqrt(dim) * c_lambda;
      const double lipschitz = 2.0 * std::numbers::sqrt2 + rho * std::sqrt(dim);
      const double b = static_cast<double>(batch_size);
      return diameter / std::sqrt(td * (lipschitz * lipschitz +
                                        sigma_sgd * sigma_sgd * dim / (b * b)));
    }
  }
  return 0.0;
}

void WriteTraceCsv(const RunTrace& trace, std::ostream& out) {
  const std::size_t width =
      trace.records.empty() ? 0 : trace.records.front().lambda.size();
  const std::size_t k = width / 2;
  out << "t,step_size";
  for (std::size_t j = 0; j < k; ++j) out << ",lambda1_" << j + 1;
  for (std::size_t j = 0; j < k; ++j) out << ",lambda2_" << j + 1;
  out << ",probe_objective,noise_seed\n";
  for (const TraceRecord& r : trace.records) {
    out << r.t << ',' << absl::StrFormat("%.17g", r.step_size);
    for (double v : r.lambda) out << ',' << absl::StrFormat("%.17g", v);
    out << ',' << absl::StrFormat("%.17g", r.probe_objective) << ','
        << r.noise_seed << '\n';
  }
}

PrivatizedProportions PrivatizeProportions(const UnlabeledDataset& pool,
                                           double sigma_pi, Rng& rng) {
  std::array<std::size_t, 2> counts = {0, 0};
  for (std::size_t i = 0; i < pool.size(); ++i) ++counts[GroupIndex(pool.s(i))];
  PrivatizedProportions out;
  const double n = static_cast<double>(pool.size());
  for (SensitiveAttr s : kGroups) {
    const std::size_t g = GroupIndex(s);
    out.pi_bar[g] = static_cast<double>(counts[g]) / n;
    if (sigma_pi > 0.0) out.pi_bar[g] += sigma_pi * rng.Normal();
  }
  return out;
}

absl::StatusOr<std::vector<BatchItem>> SampleMinibatch(
    const GroupPartition& groups, int64_t batch_size, Rng& rng) {
  for (SensitiveAttr s : kGroups) {
    if (groups.size(s) == 0) {
      return DataError(absl::StrCat(
          "cannot sample a minibatch: group s=", Sign(s), " is empty"));
    }
  }
  std::vector<BatchItem> batch;
  batch.reserve(batch_size);
  for (int64_t j = 0; j < batch_size; ++j) {
    const SensitiveAttr s =
        rng.Bernoulli(0.5) ? SensitiveAttr::kPlus : SensitiveAttr::kMinus;
    const auto& rows = groups.of(s);
    batch.push_back({rows[rng.UniformIndex(rows.size())], s});
  }
  return batch;
}

std::vector<double> ProjectBox(std::span<const double> v, double c_lambda) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::clamp(v[i], 0.0, c_lambda);
  }
  return out;
}

absl::StatusOr<Dp2dpResult> RunDp2dp(
    const UnlabeledDataset& pool, std::shared_ptr<const ProbabilityModel> model,
    const Dp2dpConfig& config) {
  DP2DP_RETURN_IF_ERROR(config.Validate());
  if (model == nullptr) return ConfigError("post-processing needs a model");
  if (pool.dim() != model->dim()) {
    return DataError(absl::StrCat("pool has dimension ", pool.dim(),
                                  ", model expects ", model->dim()));
  }
  const int k = model->num_classes();
  const std::size_t width = 2 * static_cast<std::size_t>(k);
  const GroupPartition groups = PartitionByGroup(pool);

  RunTrace trace;
  trace.schedule = config.schedule.Name();
  if (config.schedule.kind == StepSchedule::Kind::kConstant &&
      config.schedule.eta > 2.0 * config.beta) {
    trace.warnings.push_back(absl::StrFormat(
        "constant step size %g exceeds 2*beta = %g; the RDP bound's step-size "
        "condition does not hold",
        config.schedule.eta, 2.0 * config.beta));
  }
  if (config.schedule.kind != StepSchedule::Kind::kConstant) {
    trace.warnings.push_back(absl::StrCat(
        "schedule ", trace.schedule,
        " is not constant; only the plain composition branch of the RDP bound "
        "applies"));
  }

  Rng proportion_rng(DeriveSeed(config.seed, {1}));
  const PrivatizedProportions proportions =
      PrivatizeProportions(pool, config.sigma_pi, proportion_rng);
  Rng batch_rng(DeriveSeed(config.seed, {2}));
  const SmoothingParams smoothing{config.beta, config.rho};

  std::optional<UnlabeledDataset> probe;
  if (config.probe_size > 0) {
    Rng probe_rng(DeriveSeed(config.seed, {4}));
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take =
        std::min<std::size_t>(order.size(), config.probe_size);
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(order[i], order[i + probe_rng.UniformIndex(order.size() - i)]);
    }
    order.resize(take);
    probe = pool.Select(order);
  }

  std::vector<double> lambda(width, 0.0);
  std::vector<double> direction(width);
  std::vector<double> grad(width);
  std::vector<double> probs(k);
  std::vector<double> scratch(k);
  trace.records.reserve(config.iterations);
  for (int64_t t = 1; t <= config.iterations; ++t) {
    DP2DP_ASSIGN_OR_RETURN(const LagrangeParams current,
                           LagrangeParams::FromFlat(lambda, config.c_lambda));
    DP2DP_ASSIGN_OR_RETURN(
        const std::vector<BatchItem> batch,
        SampleMinibatch(groups, config.batch_size, batch_rng));
    std::fill(direction.begin(), direction.end(), 0.0);
    for (const BatchItem& item : batch) {
      model->Probabilities(pool.x(item.row), item.s, probs);
      PerSampleGrad(current, probs, item.s, proportions[item.s], smoothing,
                    grad, scratch);
      for (std::size_t j = 0; j < width; ++j) direction[j] += grad[j];
    }
    const uint64_t noise_seed = DeriveSeed(config.seed, {3, uint64_t(t)});
    if (config.sigma_sgd > 0.0) {
      Rng noise(noise_seed);
      const double scale =
          config.noise_on_average
              ? config.sigma_sgd * static_cast<double>(config.batch_size)
              : config.sigma_sgd;
      for (double& d : direction) d += scale * noise.Normal();
    }
    const double eta = config.StepSize(t, k);
    const double inv_b = 1.0 / static_cast<double>(config.batch_size);
    for (std::size_t j = 0; j < width; ++j) {
      if (!std::isfinite(direction[j])) {
        return NumericError(
            absl::StrCat("non-finite gradient at iteration ", t));
      }
      lambda[j] = std::clamp(lambda[j] - eta * direction[j] * inv_b, 0.0,
                             config.c_lambda);
    }

    TraceRecord record;
    record.t = t;
    record.step_size = eta;
    record.lambda = lambda;
    record.noise_seed = noise_seed;
    record.probe_objective = std::numeric_limits<double>::quiet_NaN();
    if (probe.has_value()) {
      DP2DP_ASSIGN_OR_RETURN(const LagrangeParams next,
                             LagrangeParams::FromFlat(lambda, config.c_lambda));
      absl::StatusOr<double> value = ObjectiveH(
          next, *probe, *model, proportions, smoothing, Exec::kSerial);
      if (value.ok()) record.probe_objective = *value;
    }
    trace.records.push_back(std::move(record));
  }

  DP2DP_ASSIGN_OR_RETURN(LagrangeParams final_lambda,
                         LagrangeParams::FromFlat(lambda, config.c_lambda));
  DP2DP_ASSIGN_OR_RETURN(FairClassifier classifier,
                         FairClassifier::Create(std::move(model), proportions,
                                                std::move(final_lambda)));
  return Dp2dpResult{std::move(classifier), std::move(trace)};
}

}  // namespace dp2dp
