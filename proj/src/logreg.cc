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
#include <numbers>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dp2dp/objective.h"
#include "dp2dp/status.h"
#include "json.hpp"

namespace dp2dp {
namespace {

// Writes [clip(x), s?, 1] into `z`.
void AugmentedInput(std::span<const double> x, SensitiveAttr s, bool with_s,
                    double clip, std::span<double> z) {
  double scale = 1.0;
  if (clip > 0.0) {
    double norm_sq = 0.0;
    for (double v : x) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    if (norm > clip) scale = clip / norm;
  }
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = scale * x[j];
  std::size_t next = x.size();
  if (with_s) z[next++] = Sign(s);
  z[next] = 1.0;
}

void MatVec(std::span<const double> w, std::span<const double> z, int k,
            std::span<double> out) {
  const std::size_t stride = z.size();
  for (int c = 0; c < k; ++c) {
    const double* row = w.data() + c * stride;
    double acc = 0.0;
    for (std::size_t j = 0; j < stride; ++j) acc += row[j] * z[j];
    out[c] = acc;
  }
}

// Cross-entropy sum and gradient sum over rows [begin, end).
double BlockLossAndGrad(const LabeledDataset& data, const Phase1Config& config,
                        std::span<const double> weights, std::size_t begin,
                        std::size_t end, std::span<double> grad,
                        std::vector<double>& z, std::vector<double>& logits) {
  const int k = data.num_classes();
  const std::size_t stride = z.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    AugmentedInput(data.x(i), data.s(i), config.use_sensitive_feature,
                   config.feature_clip, z);
    MatVec(weights, z, k, logits);
    const double lse = LseBeta(logits, 1.0);
    loss += lse - logits[data.y(i)];
    for (int c = 0; c < k; ++c) {
      double r = std::exp(logits[c] - lse);
      if (c == data.y(i)) r -= 1.0;
      double* g = grad.data() + c * stride;
      for (std::size_t j = 0; j < stride; ++j) g[j] += r * z[j];
    }
  }
  return loss;
}

}  // namespace

absl::Status Phase1Config::Validate() const {
  if (iterations < 0) {
    return ConfigError(
        absl::StrCat("iterations: must be >= 0, got ", iterations));
  }
  if (!(learning_rate > 0.0)) {
    return ConfigError(
        absl::StrCat("learning_rate: must be > 0, got ", learning_rate));
  }
  if (!(reg_strength > 0.0)) {
    return ConfigError(
        absl::StrCat("reg_strength: must be > 0, got ", reg_strength));
  }
  if (!(grad_tol >= 0.0)) return ConfigError("grad_tol: must be >= 0");
  if (!(feature_clip >= 0.0)) return ConfigError("feature_clip: must be >= 0");
  if (!(perturb_sigma >= 0.0))
    return ConfigError("perturb_sigma: must be >= 0");
  return absl::OkStatus();
}

absl::StatusOr<LogRegModel> LogRegModel::Create(int num_classes,
                                                std::size_t dim,
                                                bool use_sensitive_feature,
                                                std::vector<double> weights,
                                                double reg_strength) {
  if (num_classes < 2) {
    return ConfigError(absl::StrCat("K: must be >= 2, got ", num_classes));
  }
  const std::size_t stride = dim + (use_sensitive_feature ? 2 : 1);
  if (weights.size() != static_cast<std::size_t>(num_classes) * stride) {
    return DataError(absl::StrCat("weights: expected ", num_classes * stride,
                                  " entries, got ", weights.size()));
  }
  for (double w : weights) {
    if (!std::isfinite(w)) return DataError("weights: non-finite entry");
  }
  return LogRegModel(num_classes, dim, use_sensitive_feature,
                     std::move(weights), reg_strength);
}

LogRegModel LogRegModel::Zero(int num_classes, std::size_t dim,
                              bool use_sensitive_feature, double reg_strength) {
  const std::size_t stride = dim + (use_sensitive_feature ? 2 : 1);
  return LogRegModel(num_classes, dim, use_sensitive_feature,
                     std::vector<double>(num_classes * stride, 0.0),
                     reg_strength);
}

void LogRegModel::Logits(std::span<const double> x, SensitiveAttr s,
                         std::span<double> out) const {
  const std::size_t stride = this->stride();
  for (int c = 0; c < num_classes_; ++c) {
    const double* row = weights_.data() + c * stride;
    double acc = row[stride - 1];
    for (std::size_t j = 0; j < dim_; ++j) acc += row[j] * x[j];
    if (use_sensitive_feature_) acc += row[dim_] * Sign(s);
    out[c] = acc;
  }
}

void LogRegModel::Probabilities(std::span<const double> x, SensitiveAttr s,
                                std::span<double> out) const {
  Logits(x, s, out);
  SoftmaxBeta(out, 1.0, out);
}

absl::StatusOr<std::vector<double>> LogRegModel::PredictProbs(
    std::span<const double> x, SensitiveAttr s) const {
  if (x.size() != dim_) {
    return DataError(absl::StrCat("input has dimension ", x.size(),
                                  ", model expects ", dim_));
  }
  std::vector<double> out(num_classes_);
  Probabilities(x, s, out);
  return out;
}

std::string LogRegModel::ToJson() const {
  nlohmann::json doc;
  doc["K"] = num_classes_;
  doc["d"] = dim_;
  doc["use_sensitive_feature"] = use_sensitive_feature_;
  doc["weights"] = weights_;
  doc["reg_strength"] = reg_strength_;
  doc["perturb_sigma"] = perturb_sigma_;
  doc["seed"] = seed_;
  return doc.dump(2);
}

absl::StatusOr<LogRegModel> LogRegModel::FromJson(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return DataError("model file is not a JSON object");
  }
  try {
    DP2DP_ASSIGN_OR_RETURN(
        LogRegModel model,
        Create(doc.at("K").get<int>(), doc.at("d").get<std::size_t>(),
               doc.value("use_sensitive_feature", false),
               doc.at("weights").get<std::vector<double>>(),
               doc.at("reg_strength").get<double>()));
    model.set_provenance(doc.value("perturb_sigma", 0.0),
                         doc.value("seed", uint64_t{0}));
    return model;
  } catch (const nlohmann::json::exception& e) {
    return DataError(absl::StrCat("model file: ", e.what()));
  }
}

double LogRegObjective(const LabeledDataset& data, const Phase1Config& config,
                       std::span<const double> weights, std::span<double> grad,
                       Exec exec) {
  const int k = data.num_classes();
  const std::size_t stride =
      data.dim() + (config.use_sensitive_feature ? 2 : 1);
  const std::size_t width = k * stride;
  const std::size_t n = data.size();
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial_grad(blocks * width);
  std::vector<double> partial_loss(blocks);

  auto run_block = [&](std::size_t b, std::vector<double>& z,
                       std::vector<double>& logits) {
    const std::size_t begin = b * kReductionBlock;
    const std::size_t end = std::min(n, begin + kReductionBlock);
    partial_loss[b] = BlockLossAndGrad(
        data, config, weights, begin, end,
        std::span<double>(partial_grad.data() + b * width, width), z, logits);
  };
  if (exec == Exec::kSerial) {
    std::vector<double> z(stride), logits(k);
    for (std::size_t b = 0; b < blocks; ++b) run_block(b, z, logits);
  } else {
#pragma omp parallel
    {
      std::vector<double> z(stride), logits(k);
#pragma omp for schedule(static)
      for (std::size_t b = 0; b < blocks; ++b) run_block(b, z, logits);
    }
  }

  double loss = 0.0;
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    loss += partial_loss[b];
    const double* g = partial_grad.data() + b * width;
    for (std::size_t j = 0; j < width; ++j) grad[j] += g[j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double norm_sq = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    grad[j] = grad[j] * inv_n + config.reg_strength * weights[j];
    norm_sq += weights[j] * weights[j];
  }
  return loss * inv_n + 0.5 * config.reg_strength * norm_sq;
}

absl::StatusOr<LogRegModel> TrainLogReg(const LabeledDataset& data,
                                        const Phase1Config& config,
                                        TrainStats* stats, Exec exec) {
  DP2DP_RETURN_IF_ERROR(config.Validate());
  if (data.size() == 0) return DataError("training set is empty");
  const int first = data.y(0);
  bool varied = false;
  for (std::size_t i = 1; i < data.size() && !varied; ++i) {
    varied = data.y(i) != first;
  }
  if (!varied) {
    return DataError("training labels cover a single class; need at least 2");
  }

  LogRegModel model =
      LogRegModel::Zero(data.num_classes(), data.dim(),
                        config.use_sensitive_feature, config.reg_strength);
  std::vector<double> weights(model.weights().begin(), model.weights().end());
  std::vector<double> grad(weights.size());
  TrainStats local;
  for (int64_t it = 0; it <= config.iterations; ++it) {
    local.objective = LogRegObjective(data, config, weights, grad, exec);
    double norm_sq = 0.0;
    for (double g : grad) norm_sq += g * g;
    local.grad_norm = std::sqrt(norm_sq);
    if (!std::isfinite(local.objective) || !std::isfinite(local.grad_norm)) {
      return NumericError(absl::StrCat(
          "logistic regression diverged at iteration ", it,
          "; lower learning_rate (currently ", config.learning_rate, ")"));
    }
    if (local.grad_norm <= config.grad_tol) {
      local.converged = true;
      break;
    }
    if (it == config.iterations) break;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      weights[j] -= config.learning_rate * grad[j];
    }
    local.iterations = it + 1;
  }
  if (stats != nullptr) *stats = local;
  DP2DP_ASSIGN_OR_RETURN(
      LogRegModel trained,
      LogRegModel::Create(data.num_classes(), data.dim(),
                          config.use_sensitive_feature, std::move(weights),
                          config.reg_strength));
  trained.set_provenance(0.0, config.seed);
  return trained;
}

LogRegModel PerturbOutput(const LogRegModel& model, double sigma, Rng& rng) {
  std::vector<double> weights(model.weights().begin(), model.weights().end());
  if (sigma > 0.0) {
    for (double& w : weights) w += sigma * rng.Normal();
  }
  LogRegModel out = *LogRegModel::Create(
      model.num_classes(), model.dim(), model.use_sensitive_feature(),
      std::move(weights), model.reg_strength());
  out.set_provenance(sigma, model.seed());
  return out;
}

absl::StatusOr<double> Phase1Sensitivity(std::size_t n,
                                         const Phase1Config& config) {
  if (n == 0) return DataError("training set is empty");
  if (!(config.feature_clip > 0.0)) {
    return ConfigError(
        "feature_clip: must be > 0 to bound the phase-1 sensitivity");
  }
  const double r = config.feature_clip;
  const double extra = config.use_sensitive_feature ? 2.0 : 1.0;
  return 2.0 * std::numbers::sqrt2 * std::sqrt(r * r + extra) /
         (static_cast<double>(n) * config.reg_strength);
}

}  // namespace dp2dp
