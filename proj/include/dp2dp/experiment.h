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

#ifndef DP2DP_EXPERIMENT_H_
#define DP2DP_EXPERIMENT_H_

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dp2dp/accountant.h"
#include "dp2dp/ingest.h"
#include "dp2dp/logreg.h"
#include "dp2dp/postprocess.h"
#include "dp2dp/synthgen.h"

namespace dp2dp {

struct CsvSource {
  std::string path;
  std::string schema_path;
  bool standardize = true;
};

// One experiment: data source, split, both phases and an optional budget.
// JSON layout (every key optional):
//   {"seed": 0, "repeats": 1, "output_dir": "out", "threads": 0,
//    "pool_limit": 0,
//    "synth": {"n", "d", "K", "m", "p"},
//    "csv": {"path", "schema", "standardize"},
//    "split": {"train", "pool", "test"},
//    "phase1": {"iterations", "learning_rate", "reg_strength", "grad_tol",
//               "feature_clip", "use_sensitive_feature", "perturb_sigma"},
//    "dp2dp": {"rho", "beta", "T", "b", "schedule", "eta", "sigma_pi",
//              "sigma_sgd", "c_lambda", "probe_size", "noise_on_average"},
//    "target": {"epsilon", "delta"},
//    "phase1_target": {"epsilon", "delta"}}
// "csv" replaces "synth" when present. Seeds inside the module configs are
// derived from the experiment seed and ignored on input.
struct ExperimentConfig {
  SynthConfig synth;
  std::optional<CsvSource> csv;
  SplitSpec split;
  Phase1Config phase1;
  Dp2dpConfig dp2dp;
  // Calibrates sigma_pi and sigma_sgd for the post-processing phase.
  std::optional<PrivacyBudget> target;
  // Calibrates the phase-1 output perturbation. Defaults to `target`: the
  // phases read disjoint splits, so the release meets the larger of the two.
  std::optional<PrivacyBudget> phase1_target;
  // Keeps only the first pool_limit pool rows when positive.
  int64_t pool_limit = 0;
  int64_t repeats = 1;
  uint64_t seed = 0;
  std::string output_dir = "dp2dp_out";
  // Worker cap for sweeps; 0 keeps the OpenMP default.
  int threads = 0;

  absl::Status Validate() const;
  static absl::StatusOr<ExperimentConfig> FromJson(const std::string& text);
  std::string ToJson() const;
};

struct CellResult {
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  absl::StatusCode code = absl::StatusCode::kOk;
  double accuracy = 0.0;
  double unfairness = 0.0;
  double sigma_pi = 0.0;
  double sigma_sgd = 0.0;
  double perturb_sigma = 0.0;
  // From the accountant, for the noise actually used; +inf without noise.
  double epsilon_phase1 = 0.0;
  double epsilon_phase2 = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  int64_t pool_size = 0;
  std::vector<double> lambda;
};

// Calibrations keyed by everything they depend on; safe to share across
// threads.
class CalibrationCache {
 public:
  absl::StatusOr<NoiseCalibration> Phase2(const PrivacyBudget& target,
                                          const Dp2dpPrivacyParams& params);
  absl::StatusOr<double> Phase1(const PrivacyBudget& target,
                                double sensitivity);

 private:
  std::mutex mu_;
  std::map<std::string, NoiseCalibration> phase2_;
  std::map<std::string, double> phase1_;
};

// Privacy parameters of the post-processing phase for a pool of size N.
Dp2dpPrivacyParams PrivacyParamsFor(const Dp2dpConfig& config,
                                    int64_t pool_size, int num_classes);

// (epsilon, delta) of the phase-1 Gaussian output perturbation; +inf when
// sigma is 0.
absl::StatusOr<double> Phase1Epsilon(double sensitivity, double sigma,
                                     double delta);
// (epsilon, delta) of a post-processing run from the RDP bound; +inf unless
// both noise levels are positive.
absl::StatusOr<double> Phase2Epsilon(const Dp2dpPrivacyParams& params,
                                     double delta);

// split -> phase 1 -> post-processing -> metrics, with every stage seeded
// from `seed`. Failures are reported in the result, not as a status.
CellResult RunCell(const ExperimentConfig& config, uint64_t seed,
                   CalibrationCache* cache = nullptr);

// Generates or loads the data for a cell, splits it and applies pool_limit.
absl::StatusOr<SplitData> PrepareSplits(const ExperimentConfig& config,
                                        uint64_t seed);

struct RunSummary {
  std::vector<CellResult> rows;
  int64_t failures = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double unfairness_mean = 0.0;
  double unfairness_std = 0.0;
};

// Repeat r uses seed + r. Fails only when every repeat fails.
absl::StatusOr<RunSummary> RunExperiment(const ExperimentConfig& config);

// runs.csv: one row per repeat, then a summary row holding means (and
// sample standard deviations in the *_std columns).
std::string RunCsv(const RunSummary& summary);
std::string RunSummaryJson(const RunSummary& summary);

enum class SweepAxis { kRho, kP, kEpsilon, kPoolSize };
absl::StatusOr<SweepAxis> ParseSweepAxis(const std::string& name);
std::string SweepAxisName(SweepAxis axis);

// Applies one axis value to a copy of `config`.
absl::StatusOr<ExperimentConfig> WithAxisValue(const ExperimentConfig& config,
                                               SweepAxis axis, double value);

// Seed of one sweep cell; depends only on the cell identity.
uint64_t SweepCellSeed(uint64_t root, SweepAxis axis, double value,
                       int64_t repeat);

struct SweepCell {
  double value = 0.0;
  int64_t repeat = 0;
  CellResult result;
};

// Cells run concurrently; the result is sorted by (value, repeat).
absl::StatusOr<std::vector<SweepCell>> RunSweep(
    const ExperimentConfig& config, SweepAxis axis,
    const std::vector<double>& values);

std::string SweepCsv(SweepAxis axis, const std::vector<SweepCell>& cells);

// Writes `contents` to output_dir/name, creating the directory.
absl::Status WriteOutputFile(const std::string& output_dir,
                             const std::string& name,
                             const std::string& contents);

}  // namespace dp2dp

#endif  // DP2DP_EXPERIMENT_H_
