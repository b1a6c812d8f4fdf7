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

#include "dp2dp/experiment.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dp2dp/metrics.h"
#include "dp2dp/parallel.h"
#include "dp2dp/random.h"
#include "dp2dp/status.h"
#include "json.hpp"

namespace dp2dp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultDelta = 1e-5;

// Stage identifiers for DeriveSeed.
enum SeedStage : uint64_t {
  kSynthStage = 1,
  kSplitStage = 2,
  kTrainStage = 3,
  kPerturbStage = 4,
  kPostprocessStage = 5,
};

std::string CsvQuote(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c == '\n' ? ' ' : c);
  }
  out.push_back('"');
  return out;
}

std::string Num(double v) { return absl::StrFormat("%.17g", v); }

absl::StatusOr<PrivacyBudget> ParseBudget(const nlohmann::json& doc) {
  PrivacyBudget budget;
  budget.epsilon = doc.at("epsilon").get<double>();
  budget.delta = doc.value("delta", kDefaultDelta);
  if (!(budget.epsilon > 0.0) || !(budget.delta > 0.0 && budget.delta < 1.0)) {
    return ConfigError(
        absl::StrCat("target: need epsilon > 0 and delta in "
                     "(0, 1), got (",
                     budget.epsilon, ", ", budget.delta, ")"));
  }
  return budget;
}

nlohmann::json BudgetJson(const PrivacyBudget& b) {
  return {{"epsilon", b.epsilon}, {"delta", b.delta}};
}

double MeanOf(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = MeanOf(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string BudgetKey(const PrivacyBudget& b) {
  return absl::StrFormat("%a,%a", b.epsilon, b.delta);
}

}  // namespace

absl::Status ExperimentConfig::Validate() const {
  if (csv.has_value()) {
    if (csv->path.empty() || csv->schema_path.empty()) {
      return ConfigError("csv: both 'path' and 'schema' are required");
    }
  } else {
    DP2DP_RETURN_IF_ERROR(synth.Validate());
  }
  DP2DP_RETURN_IF_ERROR(split.Validate());
  DP2DP_RETURN_IF_ERROR(phase1.Validate());
  DP2DP_RETURN_IF_ERROR(dp2dp.Validate());
  if (repeats < 1) {
    return ConfigError(absl::StrCat("repeats: must be >= 1, got ", repeats));
  }
  if (pool_limit < 0) return ConfigError("pool_limit: must be >= 0");
  if (threads < 0) return ConfigError("threads: must be >= 0");
  for (const auto* budget : {&target, &phase1_target}) {
    if (budget->has_value() &&
        (!((*budget)->epsilon > 0.0) ||
         !((*budget)->delta > 0.0 && (*budget)->delta < 1.0))) {
      return ConfigError("target: need epsilon > 0 and delta in (0, 1)");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<ExperimentConfig> ExperimentConfig::FromJson(
    const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return ConfigError("config: not a JSON object");
  }
  ExperimentConfig c;
  try {
    c.seed = doc.value("seed", c.seed);
    c.repeats = doc.value("repeats", c.repeats);
    c.output_dir = doc.value("output_dir", c.output_dir);
    c.threads = doc.value("threads", c.threads);
    c.pool_limit = doc.value("pool_limit", c.pool_limit);
    if (doc.contains("synth")) {
      const auto& s = doc["synth"];
      c.synth.n = s.value("n", c.synth.n);
      c.synth.d = s.value("d", c.synth.d);
      c.synth.num_classes = s.value("K", c.synth.num_classes);
      c.synth.components = s.value("m", c.synth.components);
      c.synth.p = s.value("p", c.synth.p);
    }
    if (doc.contains("csv")) {
      const auto& s = doc["csv"];
      c.csv = CsvSource{s.at("path").get<std::string>(),
                        s.at("schema").get<std::string>(),
                        s.value("standardize", true)};
    }
    if (doc.contains("split")) {
      const auto& s = doc["split"];
      c.split.train_frac = s.value("train", c.split.train_frac);
      c.split.pool_frac = s.value("pool", c.split.pool_frac);
      c.split.test_frac = s.value("test", c.split.test_frac);
    }
    if (doc.contains("phase1")) {
      const auto& s = doc["phase1"];
      Phase1Config& p = c.phase1;
      p.iterations = s.value("iterations", p.iterations);
      p.learning_rate = s.value("learning_rate", p.learning_rate);
      p.reg_strength = s.value("reg_strength", p.reg_strength);
      p.grad_tol = s.value("grad_tol", p.grad_tol);
      p.feature_clip = s.value("feature_clip", p.feature_clip);
      p.use_sensitive_feature =
          s.value("use_sensitive_feature", p.use_sensitive_feature);
      p.perturb_sigma = s.value("perturb_sigma", p.perturb_sigma);
    }
    if (doc.contains("dp2dp")) {
      const auto& s = doc["dp2dp"];
      Dp2dpConfig& p = c.dp2dp;
      p.rho = s.value("rho", p.rho);
      p.beta = s.value("beta", p.beta);
      p.iterations = s.value("T", p.iterations);
      p.batch_size = s.value("b", p.batch_size);
      if (s.contains("schedule")) {
        DP2DP_ASSIGN_OR_RETURN(
            p.schedule.kind,
            StepSchedule::ParseKind(s["schedule"].get<std::string>()));
      }
      p.schedule.eta = s.value("eta", p.schedule.eta);
      p.sigma_pi = s.value("sigma_pi", p.sigma_pi);
      p.sigma_sgd = s.value("sigma_sgd", p.sigma_sgd);
      p.c_lambda = s.value("c_lambda", p.c_lambda);
      p.probe_size = s.value("probe_size", p.probe_size);
      p.noise_on_average = s.value("noise_on_average", p.noise_on_average);
    }
    if (doc.contains("target") && !doc["target"].is_null()) {
      DP2DP_ASSIGN_OR_RETURN(c.target, ParseBudget(doc["target"]));
    }
    if (doc.contains("phase1_target") && !doc["phase1_target"].is_null()) {
      DP2DP_ASSIGN_OR_RETURN(c.phase1_target,
                             ParseBudget(doc["phase1_target"]));
    }
  } catch (const nlohmann::json::exception& e) {
    return ConfigError(absl::StrCat("config: ", e.what()));
  }
  DP2DP_RETURN_IF_ERROR(c.Validate());
  return c;
}

std::string ExperimentConfig::ToJson() const {
  nlohmann::json doc;
  doc["seed"] = seed;
  doc["repeats"] = repeats;
  doc["output_dir"] = output_dir;
  doc["threads"] = threads;
  doc["pool_limit"] = pool_limit;
  if (csv.has_value()) {
    doc["csv"] = {{"path", csv->path},
                  {"schema", csv->schema_path},
                  {"standardize", csv->standardize}};
  } else {
    doc["synth"] = {{"n", synth.n},
                    {"d", synth.d},
                    {"K", synth.num_classes},
                    {"m", synth.components},
                    {"p", synth.p}};
  }
  doc["split"] = {{"train", split.train_frac},
                  {"pool", split.pool_frac},
                  {"test", split.test_frac}};
  doc["phase1"] = {{"iterations", phase1.iterations},
                   {"learning_rate", phase1.learning_rate},
                   {"reg_strength", phase1.reg_strength},
                   {"grad_tol", phase1.grad_tol},
                   {"feature_clip", phase1.feature_clip},
                   {"use_sensitive_feature", phase1.use_sensitive_feature},
                   {"perturb_sigma", phase1.perturb_sigma}};
  doc["dp2dp"] = {{"rho", dp2dp.rho},
                  {"beta", dp2dp.beta},
                  {"T", dp2dp.iterations},
                  {"b", dp2dp.batch_size},
                  {"schedule", dp2dp.schedule.Name()},
                  {"eta", dp2dp.schedule.eta},
                  {"sigma_pi", dp2dp.sigma_pi},
                  {"sigma_sgd", dp2dp.sigma_sgd},
                  {"c_lambda", dp2dp.c_lambda},
                  {"probe_size", dp2dp.probe_size},
                  {"noise_on_average", dp2dp.noise_on_average}};
  if (target.has_value()) doc["target"] = BudgetJson(*target);
  if (phase1_target.has_value()) {
    doc["phase1_target"] = BudgetJson(*phase1_target);
  }
  return doc.dump(2);
}

absl::StatusOr<NoiseCalibration> CalibrationCache::Phase2(
    const PrivacyBudget& target, const Dp2dpPrivacyParams& params) {
  const std::string key = absl::StrFormat(
      "%s|%d,%d,%d,%a,%a,%d,%a", BudgetKey(target), params.iterations,
      params.batch_size, params.pool_size, params.step_size.value_or(-1.0),
      params.c_lambda, params.num_classes, params.beta);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = phase2_.find(key);
    if (it != phase2_.end()) return it->second;
  }
  DP2DP_ASSIGN_OR_RETURN(NoiseCalibration calibration,
                         CalibrateSigma(target, params));
  std::lock_guard<std::mutex> lock(mu_);
  phase2_.emplace(key, calibration);
  return calibration;
}

absl::StatusOr<double> CalibrationCache::Phase1(const PrivacyBudget& target,
                                                double sensitivity) {
  const std::string key =
      absl::StrFormat("%s|%a", BudgetKey(target), sensitivity);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = phase1_.find(key);
    if (it != phase1_.end()) return it->second;
  }
  DP2DP_ASSIGN_OR_RETURN(const double sigma,
                         CalibrateGaussianSigma(target, sensitivity));
  std::lock_guard<std::mutex> lock(mu_);
  phase1_.emplace(key, sigma);
  return sigma;
}

Dp2dpPrivacyParams PrivacyParamsFor(const Dp2dpConfig& config,
                                    int64_t pool_size, int num_classes) {
  Dp2dpPrivacyParams params;
  params.iterations = config.iterations;
  params.batch_size = config.batch_size;
  params.pool_size = pool_size;
  if (config.schedule.kind == StepSchedule::Kind::kConstant) {
    params.step_size = config.schedule.eta;
  }
  params.sigma_sgd = config.sigma_sgd;
  params.sigma_pi = config.sigma_pi;
  params.c_lambda = config.c_lambda;
  params.num_classes = num_classes;
  params.beta = config.beta;
  return params;
}

absl::StatusOr<SplitData> PrepareSplits(const ExperimentConfig& config,
                                        uint64_t seed) {
  SplitSpec split = config.split;
  split.seed = DeriveSeed(seed, {kSplitStage});
  absl::StatusOr<SplitData> data;
  if (config.csv.has_value()) {
    DP2DP_ASSIGN_OR_RETURN(const std::string schema_text,
                           ReadTextFile(config.csv->schema_path));
    DP2DP_ASSIGN_OR_RETURN(const DatasetSchema schema,
                           DatasetSchema::FromJson(schema_text));
    DP2DP_ASSIGN_OR_RETURN(const RawTable table, ReadCsvFile(config.csv->path));
    data = EncodeAndSplit(table, schema, split, config.csv->standardize);
  } else {
    SynthConfig synth = config.synth;
    synth.seed = DeriveSeed(seed, {kSynthStage});
    DP2DP_ASSIGN_OR_RETURN(const LabeledDataset all, Generate(synth));
    data = Split(all, split);
  }
  if (!data.ok()) return data.status();
  if (config.pool_limit > 0) {
    const std::size_t limit = config.pool_limit;
    if (limit > data->pool.size()) {
      return ConfigError(absl::StrCat("pool_limit: ", limit,
                                      " exceeds the pool split of ",
                                      data->pool.size(), " rows"));
    }
    std::vector<std::size_t> keep(limit);
    std::iota(keep.begin(), keep.end(), 0);
    data->pool = data->pool.Select(keep);
  }
  return data;
}

absl::StatusOr<double> Phase1Epsilon(double sensitivity, double sigma,
                                     double delta) {
  if (!(sigma > 0.0)) return kInf;
  DP2DP_ASSIGN_OR_RETURN(const RdpCurve curve, RdpCurve::Create([&](double a) {
                           return GaussianRdp(a, sensitivity, sigma);
                         }));
  DP2DP_ASSIGN_OR_RETURN(const DpConversion dp, RdpToDp(curve, delta));
  return dp.budget.epsilon;
}

absl::StatusOr<double> Phase2Epsilon(const Dp2dpPrivacyParams& params,
                                     double delta) {
  if (!(params.sigma_pi > 0.0) || !(params.sigma_sgd > 0.0)) return kInf;
  DP2DP_ASSIGN_OR_RETURN(const RdpCurve curve, Dp2dpRdpCurve(params));
  DP2DP_ASSIGN_OR_RETURN(const DpConversion dp, RdpToDp(curve, delta));
  return dp.budget.epsilon;
}

namespace {

absl::Status RunCellImpl(const ExperimentConfig& config, uint64_t seed,
                         CalibrationCache& cache, CellResult& out) {
  DP2DP_ASSIGN_OR_RETURN(SplitData data, PrepareSplits(config, seed));
  const int k = data.train.num_classes();
  out.pool_size = static_cast<int64_t>(data.pool.size());
  const double delta =
      config.target.has_value() ? config.target->delta : kDefaultDelta;
  out.delta = delta;

  Phase1Config phase1 = config.phase1;
  phase1.seed = DeriveSeed(seed, {kTrainStage});
  DP2DP_ASSIGN_OR_RETURN(LogRegModel trained, TrainLogReg(data.train, phase1));
  const std::optional<PrivacyBudget> phase1_target =
      config.phase1_target.has_value() ? config.phase1_target : config.target;
  double perturb_sigma = phase1.perturb_sigma;
  std::optional<double> sensitivity;
  if (phase1.feature_clip > 0.0) {
    DP2DP_ASSIGN_OR_RETURN(sensitivity,
                           Phase1Sensitivity(data.train.size(), phase1));
  }
  if (phase1_target.has_value()) {
    if (!sensitivity.has_value()) {
      return ConfigError(
          "phase1.feature_clip: must be > 0 when a privacy target is set");
    }
    DP2DP_ASSIGN_OR_RETURN(perturb_sigma,
                           cache.Phase1(*phase1_target, *sensitivity));
  }
  Rng perturb_rng(DeriveSeed(seed, {kPerturbStage}));
  auto model = std::make_shared<const LogRegModel>(
      PerturbOutput(trained, perturb_sigma, perturb_rng));
  out.perturb_sigma = perturb_sigma;
  out.epsilon_phase1 = kInf;
  if (sensitivity.has_value()) {
    DP2DP_ASSIGN_OR_RETURN(out.epsilon_phase1,
                           Phase1Epsilon(*sensitivity, perturb_sigma, delta));
  }

  Dp2dpConfig post = config.dp2dp;
  post.seed = DeriveSeed(seed, {kPostprocessStage});
  const int64_t pool_size = static_cast<int64_t>(data.pool.size());
  if (config.target.has_value()) {
    DP2DP_ASSIGN_OR_RETURN(
        const NoiseCalibration calibration,
        cache.Phase2(*config.target, PrivacyParamsFor(post, pool_size, k)));
    post.sigma_pi = calibration.sigma_pi;
    post.sigma_sgd = calibration.sigma_sgd;
  }
  out.sigma_pi = post.sigma_pi;
  out.sigma_sgd = post.sigma_sgd;
  DP2DP_ASSIGN_OR_RETURN(
      out.epsilon_phase2,
      Phase2Epsilon(PrivacyParamsFor(post, pool_size, k), delta));
  out.epsilon = std::max(out.epsilon_phase1, out.epsilon_phase2);

  DP2DP_ASSIGN_OR_RETURN(const Dp2dpResult result,
                         RunDp2dp(data.pool, model, post));
  DP2DP_ASSIGN_OR_RETURN(const EvalReport report,
                         Evaluate(result.classifier, data.test));
  out.accuracy = report.accuracy;
  out.unfairness = report.unfairness;
  out.lambda = result.classifier.lambda().Flat();
  return absl::OkStatus();
}

}  // namespace

CellResult RunCell(const ExperimentConfig& config, uint64_t seed,
                   CalibrationCache* cache) {
  CalibrationCache local;
  CellResult out;
  out.seed = seed;
  const absl::Status status =
      RunCellImpl(config, seed, cache != nullptr ? *cache : local, out);
  out.ok = status.ok();
  if (!status.ok()) {
    out.error = std::string(status.message());
    out.code = status.code();
  }
  return out;
}

absl::StatusOr<RunSummary> RunExperiment(const ExperimentConfig& config) {
  DP2DP_RETURN_IF_ERROR(config.Validate());
  CalibrationCache cache;
  RunSummary summary;
  std::vector<double> accuracy, unfairness;
  for (int64_t r = 0; r < config.repeats; ++r) {
    CellResult row = RunCell(config, config.seed + r, &cache);
    if (row.ok) {
      accuracy.push_back(row.accuracy);
      unfairness.push_back(row.unfairness);
    } else {
      ++summary.failures;
    }
    summary.rows.push_back(std::move(row));
  }
  if (summary.failures == config.repeats) {
    const CellResult& first = summary.rows.front();
    return absl::Status(
        first.code,
        absl::StrCat("every repeat failed; first error: ", first.error));
  }
  summary.accuracy_mean = MeanOf(accuracy);
  summary.accuracy_std = SampleStd(accuracy);
  summary.unfairness_mean = MeanOf(unfairness);
  summary.unfairness_std = SampleStd(unfairness);
  return summary;
}

namespace {

constexpr char kCellColumns[] =
    "status,accuracy,unfairness,sigma_pi,sigma_sgd,perturb_sigma,"
    "epsilon_phase1,epsilon_phase2,epsilon,delta,pool_size";

std::string CellFields(const CellResult& r) {
  if (!r.ok) return "failed,,,,,,,,,,";
  return absl::StrCat("ok,", Num(r.accuracy), ",", Num(r.unfairness), ",",
                      Num(r.sigma_pi), ",", Num(r.sigma_sgd), ",",
                      Num(r.perturb_sigma), ",", Num(r.epsilon_phase1), ",",
                      Num(r.epsilon_phase2), ",", Num(r.epsilon), ",",
                      Num(r.delta), ",", r.pool_size);
}

}  // namespace

std::string RunCsv(const RunSummary& summary) {
  std::string out = absl::StrCat("repeat,seed,", kCellColumns,
                                 ",accuracy_std,unfairness_std,error\n");
  for (std::size_t r = 0; r < summary.rows.size(); ++r) {
    const CellResult& row = summary.rows[r];
    absl::StrAppend(&out, r, ",", row.seed, ",", CellFields(row), ",,,",
                    CsvQuote(row.error), "\n");
  }
  const int64_t ok =
      static_cast<int64_t>(summary.rows.size()) - summary.failures;
  absl::StrAppend(&out, "summary,,", ok > 0 ? "ok" : "failed", ",",
                  Num(summary.accuracy_mean), ",", Num(summary.unfairness_mean),
                  ",,,,,,,,,", Num(summary.accuracy_std), ",",
                  Num(summary.unfairness_std), ",\n");
  return out;
}

std::string RunSummaryJson(const RunSummary& summary) {
  nlohmann::json doc;
  doc["repeats"] = summary.rows.size();
  doc["failures"] = summary.failures;
  doc["accuracy"] = {{"mean", summary.accuracy_mean},
                     {"std", summary.accuracy_std}};
  doc["unfairness"] = {{"mean", summary.unfairness_mean},
                       {"std", summary.unfairness_std}};
  nlohmann::json eps = nlohmann::json::array();
  for (const CellResult& r : summary.rows) {
    if (r.ok)
      eps.push_back(std::isfinite(r.epsilon) ? nlohmann::json(r.epsilon)
                                             : nlohmann::json("inf"));
  }
  doc["achieved_epsilon"] = eps;
  return doc.dump(2);
}

absl::StatusOr<SweepAxis> ParseSweepAxis(const std::string& name) {
  if (name == "rho") return SweepAxis::kRho;
  if (name == "p") return SweepAxis::kP;
  if (name == "epsilon") return SweepAxis::kEpsilon;
  if (name == "N") return SweepAxis::kPoolSize;
  return ConfigError(
      absl::StrCat("axis: unknown '", name, "' (expected rho, p, epsilon, N)"));
}

std::string SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRho:
      return "rho";
    case SweepAxis::kP:
      return "p";
    case SweepAxis::kEpsilon:
      return "epsilon";
    case SweepAxis::kPoolSize:
      return "N";
  }
  return "unknown";
}

absl::StatusOr<ExperimentConfig> WithAxisValue(const ExperimentConfig& config,
                                               SweepAxis axis, double value) {
  ExperimentConfig out = config;
  switch (axis) {
    case SweepAxis::kRho:
      out.dp2dp.rho = value;
      break;
    case SweepAxis::kP:
      if (out.csv.has_value()) {
        return ConfigError("axis p: only applies to synthetic data");
      }
      out.synth.p = value;
      break;
    case SweepAxis::kEpsilon:
      if (!out.target.has_value())
        out.target = PrivacyBudget{value, kDefaultDelta};
      out.target->epsilon = value;
      break;
    case SweepAxis::kPoolSize:
      if (!(value >= 1.0) || value != std::floor(value)) {
        return ConfigError(
            absl::StrCat("axis N: need a positive integer, got ", value));
      }
      out.pool_limit = static_cast<int64_t>(value);
      break;
  }
  DP2DP_RETURN_IF_ERROR(out.Validate());
  return out;
}

uint64_t SweepCellSeed(uint64_t root, SweepAxis axis, double value,
                       int64_t repeat) {
  return DeriveSeed(root, {static_cast<uint64_t>(axis) + 1,
                           std::bit_cast<uint64_t>(value + 0.0),
                           static_cast<uint64_t>(repeat)});
}

absl::StatusOr<std::vector<SweepCell>> RunSweep(
    const ExperimentConfig& config, SweepAxis axis,
    const std::vector<double>& values) {
  DP2DP_RETURN_IF_ERROR(config.Validate());
  if (values.empty()) return ConfigError("axis: no values given");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<ExperimentConfig> configs;
  for (double v : sorted) {
    DP2DP_ASSIGN_OR_RETURN(ExperimentConfig c, WithAxisValue(config, axis, v));
    configs.push_back(std::move(c));
  }

  std::vector<SweepCell> cells;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (int64_t r = 0; r < config.repeats; ++r) {
      cells.push_back({sorted[i], r, {}});
    }
  }
  CalibrationCache cache;
  const int workers = config.threads > 0 ? config.threads : MaxThreads();
  const int64_t count = static_cast<int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int64_t c = 0; c < count; ++c) {
    SweepCell& cell = cells[c];
    const std::size_t index =
        std::lower_bound(sorted.begin(), sorted.end(), cell.value) -
        sorted.begin();
    cell.result = RunCell(
        configs[index],
        SweepCellSeed(config.seed, axis, cell.value, cell.repeat), &cache);
  }
  bool any_ok = false;
  for (const SweepCell& cell : cells) any_ok = any_ok || cell.result.ok;
  if (!any_ok) {
    return absl::Status(cells.front().result.code,
                        absl::StrCat("every sweep cell failed; first error: ",
                                     cells.front().result.error));
  }
  return cells;
}

std::string SweepCsv(SweepAxis axis, const std::vector<SweepCell>& cells) {
  std::string out =
      absl::StrCat("axis,value,repeat,seed,", kCellColumns, ",error\n");
  for (const SweepCell& cell : cells) {
    absl::StrAppend(&out, SweepAxisName(axis), ",",
                    absl::StrFormat("%.15g", cell.value), ",", cell.repeat, ",",
                    cell.result.seed, ",", CellFields(cell.result), ",",
                    CsvQuote(cell.result.error), "\n");
  }
  return out;
}

absl::Status WriteOutputFile(const std::string& output_dir,
                             const std::string& name,
                             const std::string& contents) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) {
    return DataError(
        absl::StrCat("cannot create '", output_dir, "': ", ec.message()));
  }
  const std::filesystem::path path = std::filesystem::path(output_dir) / name;
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out)
    return DataError(absl::StrCat("cannot write '", path.string(), "'"));
  return absl::OkStatus();
}

}  // namespace dp2dp
