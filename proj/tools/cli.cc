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

#include "cli.h"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dp2dp/accountant.h"
#include "dp2dp/experiment.h"
#include "dp2dp/ingest.h"
#include "dp2dp/logreg.h"
#include "dp2dp/metrics.h"
#include "dp2dp/parallel.h"
#include "dp2dp/postprocess.h"
#include "dp2dp/random.h"
#include "dp2dp/status.h"
#include "dp2dp/synthgen.h"
#include "dp2dp/types.h"
#include "json.hpp"

namespace dp2dp::cli {
namespace {

using nlohmann::json;

constexpr char kVersion[] = "0.1.0";
constexpr double kDefaultDelta = 1e-5;

// Options of a subcommand that only take effect when given on the command
// line; values from a config file stay in place otherwise.
bool Given(const CLI::App* app, const std::string& name) {
  return app->count(name) > 0;
}

absl::StatusOr<json> ParseJson(const std::string& text,
                               const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    return DataError(absl::StrCat(what, ": ", e.what()));
  }
}

absl::Status WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return DataError(absl::StrCat("cannot write '", path, "'"));
  out << contents;
  out.close();
  if (!out) return DataError(absl::StrCat("failed writing '", path, "'"));
  return absl::OkStatus();
}

// "-" means standard output.
absl::Status Emit(const std::string& path, const std::string& contents,
                  std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
    return absl::OkStatus();
  }
  return WriteFile(path, contents);
}

std::string JsonNumber(double v) {
  return std::isfinite(v) ? absl::StrFormat("%.17g", v) : "\"inf\"";
}

json NumberOrInf(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

std::string UtcNow() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

// Timestamps live here so that every other output file is reproducible.
std::string MetadataJson(const std::vector<std::string>& args) {
  json doc;
  doc["created_utc"] = UtcNow();
  doc["command"] = args;
  doc["version"] = kVersion;
  doc["max_threads"] = MaxThreads();
  return doc.dump(2) + "\n";
}

// Flags shared by `run` and `sweep`, layered over an optional config file.
struct ExperimentFlags {
  std::string config_path;
  std::string data_path;
  std::string schema_path;
  bool no_standardize = false;
  int64_t n = 0, d = 0, m = 0;
  int k = 0;
  double p = 0;
  std::vector<double> split;
  int64_t phase1_iterations = 0;
  double reg = 0, clip = 0, perturb_sigma = 0;
  double rho = 0, beta = 0, eta = 0, sigma_pi = 0, sigma_sgd = 0, c_lambda = 0;
  int64_t t = 0, b = 0;
  std::string schedule;
  double epsilon = 0, delta = 0, phase1_epsilon = 0;
  int64_t pool_limit = 0, repeats = 0;
  uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;

  void Register(CLI::App* app) {
    app->add_option("--config", config_path, "JSON experiment config");
    app->add_option("--data", data_path, "Raw CSV table (needs --schema)");
    app->add_option("--schema", schema_path, "JSON schema of the raw table");
    app->add_flag("--no-standardize", no_standardize,
                  "Keep numeric columns unscaled");
    app->add_option("--n", n, "Synthetic sample count");
    app->add_option("--d", d, "Synthetic feature dimension");
    app->add_option("--K", k, "Synthetic class count");
    app->add_option("--m", m, "Mixture components per class");
    app->add_option("--p", p, "Synthetic unfairness parameter");
    app->add_option("--split", split, "train,pool,test fractions")
        ->delimiter(',')
        ->expected(3);
    app->add_option("--phase1-iterations", phase1_iterations,
                    "Logistic regression iterations");
    app->add_option("--reg", reg, "L2 regularization strength");
    app->add_option("--clip", clip, "Feature norm clip for phase 1");
    app->add_option("--perturb-sigma", perturb_sigma,
                    "Phase-1 weight noise (ignored with a target)");
    app->add_option("--rho", rho, "Unfairness tolerance");
    app->add_option("--beta", beta, "Smoothing constant");
    app->add_option("--T", t, "SGD iterations");
    app->add_option("--b", b, "Minibatch size");
    app->add_option("--schedule", schedule,
                    "constant, inverse_sqrt or utility");
    app->add_option("--eta", eta, "Step size (or eta0)");
    app->add_option("--sigma-pi", sigma_pi, "Frequency noise");
    app->add_option("--sigma-sgd", sigma_sgd, "Gradient noise");
    app->add_option("--c-lambda", c_lambda, "Multiplier box bound");
    app->add_option("--epsilon", epsilon, "Target epsilon (calibrates noise)");
    app->add_option("--delta", delta, "Target delta");
    app->add_option("--phase1-epsilon", phase1_epsilon,
                    "Separate target epsilon for phase 1");
    app->add_option("--pool-limit", pool_limit, "Keep the first N pool rows");
    app->add_option("--repeats", repeats, "Repeats per cell");
    app->add_option("--seed", seed, "Root seed");
    app->add_option("--out-dir", out_dir, "Output directory");
    app->add_option("--threads", threads, "Worker cap");
  }

  absl::StatusOr<ExperimentConfig> Resolve(const CLI::App* app) const {
    ExperimentConfig c;
    if (!config_path.empty()) {
      DP2DP_ASSIGN_OR_RETURN(const std::string text, ReadTextFile(config_path));
      DP2DP_ASSIGN_OR_RETURN(c, ExperimentConfig::FromJson(text));
    }
    if (Given(app, "--data") || Given(app, "--schema")) {
      CsvSource source = c.csv.value_or(CsvSource{});
      if (Given(app, "--data")) source.path = data_path;
      if (Given(app, "--schema")) source.schema_path = schema_path;
      c.csv = source;
    }
    if (no_standardize && c.csv.has_value()) c.csv->standardize = false;
    if (Given(app, "--n")) c.synth.n = n;
    if (Given(app, "--d")) c.synth.d = d;
    if (Given(app, "--K")) c.synth.num_classes = k;
    if (Given(app, "--m")) c.synth.components = m;
    if (Given(app, "--p")) c.synth.p = p;
    if (Given(app, "--split")) {
      c.split.train_frac = split[0];
      c.split.pool_frac = split[1];
      c.split.test_frac = split[2];
    }
    if (Given(app, "--phase1-iterations"))
      c.phase1.iterations = phase1_iterations;
    if (Given(app, "--reg")) c.phase1.reg_strength = reg;
    if (Given(app, "--clip")) c.phase1.feature_clip = clip;
    if (Given(app, "--perturb-sigma")) c.phase1.perturb_sigma = perturb_sigma;
    if (Given(app, "--rho")) c.dp2dp.rho = rho;
    if (Given(app, "--beta")) c.dp2dp.beta = beta;
    if (Given(app, "--T")) c.dp2dp.iterations = t;
    if (Given(app, "--b")) c.dp2dp.batch_size = b;
    if (Given(app, "--schedule")) {
      DP2DP_ASSIGN_OR_RETURN(c.dp2dp.schedule.kind,
                             StepSchedule::ParseKind(schedule));
    }
    if (Given(app, "--eta")) c.dp2dp.schedule.eta = eta;
    if (Given(app, "--sigma-pi")) c.dp2dp.sigma_pi = sigma_pi;
    if (Given(app, "--sigma-sgd")) c.dp2dp.sigma_sgd = sigma_sgd;
    if (Given(app, "--c-lambda")) c.dp2dp.c_lambda = c_lambda;
    if (Given(app, "--epsilon")) {
      c.target =
          PrivacyBudget{epsilon, c.target ? c.target->delta : kDefaultDelta};
    }
    if (Given(app, "--phase1-epsilon")) {
      const PrivacyBudget base = c.phase1_target.value_or(
          c.target.value_or(PrivacyBudget{0.0, kDefaultDelta}));
      c.phase1_target = PrivacyBudget{phase1_epsilon, base.delta};
    }
    if (Given(app, "--delta")) {
      if (!c.target && !c.phase1_target) {
        return ConfigError("--delta: needs a target (--epsilon)");
      }
      if (c.target) c.target->delta = delta;
      if (c.phase1_target) c.phase1_target->delta = delta;
    }
    if (Given(app, "--pool-limit")) c.pool_limit = pool_limit;
    if (Given(app, "--repeats")) c.repeats = repeats;
    if (Given(app, "--seed")) c.seed = seed;
    if (Given(app, "--out-dir")) c.output_dir = out_dir;
    if (Given(app, "--threads")) c.threads = threads;
    DP2DP_RETURN_IF_ERROR(c.Validate());
    return c;
  }
};

// Post-processing flags for the `postprocess` and `account` subcommands.
struct PostFlags {
  double rho = 0.0;
  double beta = Dp2dpConfig().beta;
  int64_t t = Dp2dpConfig().iterations;
  int64_t b = Dp2dpConfig().batch_size;
  std::string schedule = Dp2dpConfig().schedule.Name();
  double eta = Dp2dpConfig().schedule.eta;
  double sigma_pi = 0.0;
  double sigma_sgd = 0.0;
  double c_lambda = 1.0;
  bool noise_on_average = false;

  void Register(CLI::App* app, bool with_runtime) {
    app->add_option("--beta", beta, "Smoothing constant")
        ->capture_default_str();
    app->add_option("--T", t, "SGD iterations")->capture_default_str();
    app->add_option("--b", b, "Minibatch size")->capture_default_str();
    app->add_option("--schedule", schedule, "constant, inverse_sqrt or utility")
        ->capture_default_str();
    app->add_option("--eta", eta, "Step size (or eta0)")->capture_default_str();
    app->add_option("--sigma-pi", sigma_pi, "Frequency noise");
    app->add_option("--sigma-sgd", sigma_sgd, "Gradient noise");
    app->add_option("--c-lambda", c_lambda, "Multiplier box bound")
        ->capture_default_str();
    if (with_runtime) {
      app->add_option("--rho", rho, "Unfairness tolerance");
      app->add_flag("--noise-on-average", noise_on_average,
                    "Scale gradient noise by b");
    }
  }

  absl::StatusOr<Dp2dpConfig> Config() const {
    Dp2dpConfig c;
    c.rho = rho;
    c.beta = beta;
    c.iterations = t;
    c.batch_size = b;
    DP2DP_ASSIGN_OR_RETURN(c.schedule.kind, StepSchedule::ParseKind(schedule));
    c.schedule.eta = eta;
    c.sigma_pi = sigma_pi;
    c.sigma_sgd = sigma_sgd;
    c.c_lambda = c_lambda;
    c.noise_on_average = noise_on_average;
    DP2DP_RETURN_IF_ERROR(c.Validate());
    return c;
  }
};

// Serialized classifier: the phase-1 model plus the post-processing output.
struct StoredClassifier {
  std::shared_ptr<const LogRegModel> model;
  PrivatizedProportions proportions;
  LagrangeParams lambda = LagrangeParams::Zero(2, 1.0);
};

std::string ClassifierJson(const LogRegModel& model,
                           const FairClassifier& classifier,
                           const Dp2dpConfig& config, double epsilon,
                           double delta, const RunTrace& trace) {
  json doc;
  doc["model"] = json::parse(model.ToJson());
  doc["pi_bar"] = {{"-1", classifier.proportions()[SensitiveAttr::kMinus]},
                   {"1", classifier.proportions()[SensitiveAttr::kPlus]}};
  const auto l1 = classifier.lambda().lambda1();
  const auto l2 = classifier.lambda().lambda2();
  doc["lambda1"] = std::vector<double>(l1.begin(), l1.end());
  doc["lambda2"] = std::vector<double>(l2.begin(), l2.end());
  doc["c_lambda"] = classifier.lambda().c_lambda();
  doc["rho"] = config.rho;
  doc["beta"] = config.beta;
  doc["schedule"] = trace.schedule;
  doc["privacy"] = {{"sigma_pi", config.sigma_pi},
                    {"sigma_sgd", config.sigma_sgd},
                    {"epsilon", NumberOrInf(epsilon)},
                    {"delta", delta}};
  doc["warnings"] = trace.warnings;
  return doc.dump(2) + "\n";
}

absl::StatusOr<FairClassifier> LoadClassifier(const std::string& path) {
  DP2DP_ASSIGN_OR_RETURN(const std::string text, ReadTextFile(path));
  DP2DP_ASSIGN_OR_RETURN(const json doc, ParseJson(text, path));
  try {
    DP2DP_ASSIGN_OR_RETURN(LogRegModel model,
                           LogRegModel::FromJson(doc.at("model").dump()));
    PrivatizedProportions pi;
    pi.pi_bar[GroupIndex(SensitiveAttr::kMinus)] =
        doc.at("pi_bar").at("-1").get<double>();
    pi.pi_bar[GroupIndex(SensitiveAttr::kPlus)] =
        doc.at("pi_bar").at("1").get<double>();
    DP2DP_ASSIGN_OR_RETURN(
        LagrangeParams lambda,
        LagrangeParams::Create(doc.at("lambda1").get<std::vector<double>>(),
                               doc.at("lambda2").get<std::vector<double>>(),
                               doc.at("c_lambda").get<double>()));
    return FairClassifier::Create(
        std::make_shared<const LogRegModel>(std::move(model)), pi,
        std::move(lambda));
  } catch (const json::exception& e) {
    return DataError(absl::StrCat(path, ": ", e.what()));
  }
}

absl::Status CmdGenerate(const CLI::App* app, const std::string& config_path,
                         SynthConfig flags, const std::string& out_path,
                         std::ostream& out) {
  SynthConfig c;
  if (!config_path.empty()) {
    DP2DP_ASSIGN_OR_RETURN(const std::string text, ReadTextFile(config_path));
    DP2DP_ASSIGN_OR_RETURN(const ExperimentConfig config,
                           ExperimentConfig::FromJson(text));
    c = config.synth;
  }
  if (Given(app, "--n")) c.n = flags.n;
  if (Given(app, "--d")) c.d = flags.d;
  if (Given(app, "--K")) c.num_classes = flags.num_classes;
  if (Given(app, "--m")) c.components = flags.components;
  if (Given(app, "--p")) c.p = flags.p;
  if (Given(app, "--seed")) c.seed = flags.seed;
  DP2DP_ASSIGN_OR_RETURN(const LabeledDataset data, Generate(c));
  std::ostringstream csv;
  WriteDatasetCsv(data, csv);
  return Emit(out_path, csv.str(), out);
}

struct TrainFlags {
  std::string data;
  std::string out;
  int classes = 0;
  Phase1Config phase1;
  double epsilon = 0.0;
  double delta = kDefaultDelta;
};

absl::Status CmdTrain(const CLI::App* app, const TrainFlags& flags,
                      std::ostream& out) {
  DP2DP_ASSIGN_OR_RETURN(const LabeledDataset data,
                         ReadDatasetCsv(flags.data, flags.classes));
  Phase1Config phase1 = flags.phase1;
  DP2DP_RETURN_IF_ERROR(phase1.Validate());
  TrainStats stats;
  DP2DP_ASSIGN_OR_RETURN(const LogRegModel trained,
                         TrainLogReg(data, phase1, &stats));
  std::optional<double> sensitivity;
  if (phase1.feature_clip > 0.0) {
    DP2DP_ASSIGN_OR_RETURN(sensitivity, Phase1Sensitivity(data.size(), phase1));
  }
  double sigma = phase1.perturb_sigma;
  if (Given(app, "--epsilon")) {
    if (!sensitivity) {
      return ConfigError("--clip: must be > 0 when --epsilon is set");
    }
    DP2DP_ASSIGN_OR_RETURN(
        sigma,
        CalibrateGaussianSigma({flags.epsilon, flags.delta}, *sensitivity));
  }
  double epsilon = std::numeric_limits<double>::infinity();
  if (sensitivity) {
    DP2DP_ASSIGN_OR_RETURN(epsilon,
                           Phase1Epsilon(*sensitivity, sigma, flags.delta));
  }
  const uint64_t perturb_seed = DeriveSeed(phase1.seed, {1});
  Rng rng(perturb_seed);
  LogRegModel model = PerturbOutput(trained, sigma, rng);
  model.set_provenance(sigma, phase1.seed);
  DP2DP_RETURN_IF_ERROR(WriteFile(flags.out, model.ToJson()));
  out << absl::StrFormat(
      "{\"rows\": %d, \"iterations\": %d, \"objective\": %.17g, "
      "\"converged\": %s, \"perturb_sigma\": %.17g, \"epsilon\": %s, "
      "\"delta\": %.17g}\n",
      data.size(), stats.iterations, stats.objective,
      stats.converged ? "true" : "false", sigma, JsonNumber(epsilon),
      flags.delta);
  return absl::OkStatus();
}

struct PostprocessFlags {
  std::string model;
  std::string pool;
  std::string out;
  std::string trace;
  PostFlags post;
  double epsilon = 0.0;
  double delta = kDefaultDelta;
  uint64_t seed = 0;
};

absl::Status CmdPostprocess(const CLI::App* app, const PostprocessFlags& flags,
                            std::ostream& out) {
  DP2DP_ASSIGN_OR_RETURN(const std::string model_text,
                         ReadTextFile(flags.model));
  DP2DP_ASSIGN_OR_RETURN(LogRegModel model, LogRegModel::FromJson(model_text));
  DP2DP_ASSIGN_OR_RETURN(const UnlabeledDataset pool, ReadPoolCsv(flags.pool));
  if (pool.dim() != model.dim()) {
    return DataError(absl::StrCat("pool has dimension ", pool.dim(),
                                  ", model expects ", model.dim()));
  }
  DP2DP_ASSIGN_OR_RETURN(Dp2dpConfig config, flags.post.Config());
  config.seed = flags.seed;
  const int64_t n = static_cast<int64_t>(pool.size());
  if (Given(app, "--epsilon")) {
    DP2DP_ASSIGN_OR_RETURN(
        const NoiseCalibration calibration,
        CalibrateSigma({flags.epsilon, flags.delta},
                       PrivacyParamsFor(config, n, model.num_classes())));
    config.sigma_pi = calibration.sigma_pi;
    config.sigma_sgd = calibration.sigma_sgd;
  }
  DP2DP_ASSIGN_OR_RETURN(
      const double epsilon,
      Phase2Epsilon(PrivacyParamsFor(config, n, model.num_classes()),
                    flags.delta));
  auto shared = std::make_shared<const LogRegModel>(model);
  DP2DP_ASSIGN_OR_RETURN(const Dp2dpResult result,
                         RunDp2dp(pool, shared, config));
  DP2DP_RETURN_IF_ERROR(
      WriteFile(flags.out, ClassifierJson(model, result.classifier, config,
                                          epsilon, flags.delta, result.trace)));
  if (!flags.trace.empty()) {
    std::ostringstream trace;
    WriteTraceCsv(result.trace, trace);
    DP2DP_RETURN_IF_ERROR(WriteFile(flags.trace, trace.str()));
  }
  out << absl::StrFormat(
      "{\"pool_size\": %d, \"sigma_pi\": %.17g, \"sigma_sgd\": %.17g, "
      "\"epsilon\": %s, \"delta\": %.17g, \"warnings\": %d}\n",
      n, config.sigma_pi, config.sigma_sgd, JsonNumber(epsilon), flags.delta,
      result.trace.warnings.size());
  return absl::OkStatus();
}

absl::Status CmdEvaluate(const std::string& classifier_path,
                         const std::string& data_path,
                         const std::string& format, std::ostream& out) {
  DP2DP_ASSIGN_OR_RETURN(const FairClassifier classifier,
                         LoadClassifier(classifier_path));
  DP2DP_ASSIGN_OR_RETURN(const LabeledDataset data,
                         ReadDatasetCsv(data_path, classifier.num_classes()));
  if (data.dim() != classifier.dim()) {
    return DataError(absl::StrCat("data has dimension ", data.dim(),
                                  ", classifier expects ", classifier.dim()));
  }
  DP2DP_ASSIGN_OR_RETURN(const EvalReport report, Evaluate(classifier, data));
  if (format == "csv") {
    out << EvalReport::CsvHeader() << "\n" << report.CsvRow() << "\n";
  } else {
    out << report.ToJson() << "\n";
  }
  return absl::OkStatus();
}

struct AccountFlags {
  int64_t n = 0;
  int classes = 2;
  std::optional<double> eta;
  PostFlags post;
  double epsilon = 0.0;
  double delta = kDefaultDelta;
};

absl::Status CmdAccount(const CLI::App* app, const AccountFlags& flags,
                        std::ostream& out) {
  Dp2dpPrivacyParams params;
  params.iterations = flags.post.t;
  params.batch_size = flags.post.b;
  params.pool_size = flags.n;
  params.step_size = flags.eta;
  params.sigma_pi = flags.post.sigma_pi;
  params.sigma_sgd = flags.post.sigma_sgd;
  params.c_lambda = flags.post.c_lambda;
  params.num_classes = flags.classes;
  params.beta = flags.post.beta;
  if (Given(app, "--epsilon")) {
    DP2DP_ASSIGN_OR_RETURN(
        const NoiseCalibration calibration,
        CalibrateSigma({flags.epsilon, flags.delta}, params));
    params.sigma_pi = calibration.sigma_pi;
    params.sigma_sgd = calibration.sigma_sgd;
  } else if (!Given(app, "--sigma-sgd") || !Given(app, "--sigma-pi")) {
    return ConfigError(
        "account: give --sigma-pi and --sigma-sgd, or --epsilon to calibrate");
  }
  DP2DP_RETURN_IF_ERROR(params.Validate());
  DP2DP_ASSIGN_OR_RETURN(const RdpCurve curve, Dp2dpRdpCurve(params));
  DP2DP_ASSIGN_OR_RETURN(const DpConversion best, RdpToDp(curve, flags.delta));
  std::string csv =
      "alpha,rdp_epsilon,epsilon,delta,optimal,sigma_pi,sigma_sgd\n";
  for (std::size_t i = 0; i < curve.orders().size(); ++i) {
    const double alpha = curve.orders()[i];
    const double rdp = curve.values()[i];
    // The single-order conversion goes through the same routine as the
    // optimum, so the optimal row matches it bit for bit.
    const std::vector<double> one = {alpha};
    DP2DP_ASSIGN_OR_RETURN(
        const RdpCurve single,
        RdpCurve::Create(
            [rdp](double) -> absl::StatusOr<double> { return rdp; }, one));
    DP2DP_ASSIGN_OR_RETURN(const DpConversion dp, RdpToDp(single, flags.delta));
    absl::StrAppend(
        &csv, absl::StrFormat("%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", alpha,
                              rdp, dp.budget.epsilon, flags.delta,
                              alpha == best.order ? 1 : 0, params.sigma_pi,
                              params.sigma_sgd));
  }
  out << csv;
  return absl::OkStatus();
}

absl::Status WriteRunOutputs(const ExperimentConfig& config,
                             const std::vector<std::string>& args,
                             const std::string& csv_name,
                             const std::string& csv) {
  DP2DP_RETURN_IF_ERROR(WriteOutputFile(config.output_dir, "config.json",
                                        config.ToJson() + "\n"));
  DP2DP_RETURN_IF_ERROR(
      WriteOutputFile(config.output_dir, "metadata.json", MetadataJson(args)));
  return WriteOutputFile(config.output_dir, csv_name, csv);
}

absl::Status CmdRun(const CLI::App* app, const ExperimentFlags& flags,
                    const std::vector<std::string>& args, std::ostream& out) {
  DP2DP_ASSIGN_OR_RETURN(const ExperimentConfig config, flags.Resolve(app));
  if (config.threads > 0) SetMaxThreads(config.threads);
  DP2DP_ASSIGN_OR_RETURN(const RunSummary summary, RunExperiment(config));
  const std::string csv = RunCsv(summary);
  DP2DP_RETURN_IF_ERROR(WriteRunOutputs(config, args, "runs.csv", csv));
  DP2DP_RETURN_IF_ERROR(WriteOutputFile(config.output_dir, "summary.json",
                                        RunSummaryJson(summary) + "\n"));
  out << csv;
  return absl::OkStatus();
}

absl::Status CmdSweep(const CLI::App* app, const ExperimentFlags& flags,
                      const std::string& axis_name,
                      const std::vector<double>& values,
                      const std::vector<std::string>& args, std::ostream& out) {
  DP2DP_ASSIGN_OR_RETURN(const ExperimentConfig config, flags.Resolve(app));
  DP2DP_ASSIGN_OR_RETURN(const SweepAxis axis, ParseSweepAxis(axis_name));
  DP2DP_ASSIGN_OR_RETURN(const std::vector<SweepCell> cells,
                         RunSweep(config, axis, values));
  const std::string csv = SweepCsv(axis, cells);
  DP2DP_RETURN_IF_ERROR(WriteRunOutputs(config, args, "sweep.csv", csv));
  out << csv;
  return absl::OkStatus();
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Differentially private fair post-processing"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  // generate
  CLI::App* generate =
      app.add_subcommand("generate", "Write a synthetic dataset");
  std::string generate_config;
  std::string generate_out = "-";
  SynthConfig synth;
  generate->add_option("--config", generate_config, "JSON experiment config");
  generate->add_option("--n", synth.n, "Rows")->capture_default_str();
  generate->add_option("--d", synth.d, "Feature dimension")
      ->capture_default_str();
  generate->add_option("--K", synth.num_classes, "Classes")
      ->capture_default_str();
  generate->add_option("--m", synth.components, "Mixture components per class")
      ->capture_default_str();
  generate->add_option("--p", synth.p, "Unfairness parameter in [0, 1]")
      ->capture_default_str();
  generate->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  generate->add_option("--out", generate_out, "Output CSV ('-' for stdout)");

  // train
  CLI::App* train = app.add_subcommand("train", "Train the phase-1 model");
  TrainFlags train_flags;
  train->add_option("--data", train_flags.data, "Dataset CSV (x1..xd,s,y)")
      ->required();
  train->add_option("--out", train_flags.out, "Model JSON")->required();
  train->add_option("--K", train_flags.classes,
                    "Class count (default: largest label)");
  train->add_option("--iterations", train_flags.phase1.iterations)
      ->capture_default_str();
  train->add_option("--lr", train_flags.phase1.learning_rate)
      ->capture_default_str();
  train->add_option("--reg", train_flags.phase1.reg_strength)
      ->capture_default_str();
  train->add_option("--grad-tol", train_flags.phase1.grad_tol)
      ->capture_default_str();
  train->add_option("--clip", train_flags.phase1.feature_clip)
      ->capture_default_str();
  train->add_flag("--use-s", train_flags.phase1.use_sensitive_feature,
                  "Append s as a feature");
  train->add_option("--perturb-sigma", train_flags.phase1.perturb_sigma,
                    "Weight noise (ignored with --epsilon)");
  train->add_option("--epsilon", train_flags.epsilon,
                    "Target epsilon for the weight release");
  train->add_option("--delta", train_flags.delta)->capture_default_str();
  train->add_option("--seed", train_flags.phase1.seed)->capture_default_str();

  // postprocess
  CLI::App* postprocess =
      app.add_subcommand("postprocess", "Run the fair post-processing");
  PostprocessFlags post_flags;
  postprocess->add_option("--model", post_flags.model, "Model JSON")
      ->required();
  postprocess
      ->add_option("--pool", post_flags.pool,
                   "Unlabeled pool CSV (x1..xd,s[,y])")
      ->required();
  postprocess->add_option("--out", post_flags.out, "Classifier JSON")
      ->required();
  postprocess->add_option("--trace", post_flags.trace, "Trace CSV");
  post_flags.post.Register(postprocess, /*with_runtime=*/true);
  postprocess->add_option("--epsilon", post_flags.epsilon,
                          "Target epsilon (calibrates both noise levels)");
  postprocess->add_option("--delta", post_flags.delta)->capture_default_str();
  postprocess->add_option("--seed", post_flags.seed)->capture_default_str();

  // evaluate
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Accuracy and unfairness");
  std::string eval_classifier, eval_data, eval_format = "json";
  evaluate->add_option("--classifier", eval_classifier, "Classifier JSON")
      ->required();
  evaluate->add_option("--data", eval_data, "Labeled CSV")->required();
  evaluate->add_option("--format", eval_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // account
  CLI::App* account = app.add_subcommand("account", "Privacy accounting table");
  AccountFlags account_flags;
  account->add_option("--N", account_flags.n, "Pool size")->required();
  account->add_option("--K", account_flags.classes, "Classes")
      ->capture_default_str();
  double account_eta = 0.0;
  account->add_option("--step", account_eta,
                      "Constant step size (enables the shifted branch)");
  account_flags.post.Register(account, /*with_runtime=*/false);
  account->add_option("--epsilon", account_flags.epsilon,
                      "Calibrate noise to this epsilon first");
  account->add_option("--delta", account_flags.delta)->capture_default_str();

  // run
  CLI::App* run = app.add_subcommand("run", "Repeated end-to-end runs");
  ExperimentFlags run_flags;
  run_flags.Register(run);

  // sweep
  CLI::App* sweep = app.add_subcommand("sweep", "Sweep one parameter");
  ExperimentFlags sweep_flags;
  sweep_flags.Register(sweep);
  std::string axis;
  std::vector<double> values;
  sweep->add_option("--axis", axis, "rho, p, epsilon or N")->required();
  sweep->add_option("--values", values, "Comma-separated axis values")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  absl::Status status;
  if (generate->parsed()) {
    status = CmdGenerate(generate, generate_config, synth, generate_out, out);
  } else if (train->parsed()) {
    status = CmdTrain(train, train_flags, out);
  } else if (postprocess->parsed()) {
    status = CmdPostprocess(postprocess, post_flags, out);
  } else if (evaluate->parsed()) {
    status = CmdEvaluate(eval_classifier, eval_data, eval_format, out);
  } else if (account->parsed()) {
    if (Given(account, "--step")) account_flags.eta = account_eta;
    status = CmdAccount(account, account_flags, out);
  } else if (run->parsed()) {
    status = CmdRun(run, run_flags, args, out);
  } else if (sweep->parsed()) {
    status = CmdSweep(sweep, sweep_flags, axis, values, args, out);
  }
  if (!status.ok()) {
    err << "error: " << status.message() << "\n";
    return ExitCodeFor(status);
  }
  return 0;
}

}  // namespace dp2dp::cli
