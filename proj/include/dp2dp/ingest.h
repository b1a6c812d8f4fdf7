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

#ifndef DP2DP_INGEST_H_
#define DP2DP_INGEST_H_

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dp2dp/types.h"

namespace dp2dp {

enum class ColumnKind { kNumeric, kCategorical, kLabel, kSensitive, kIgnore };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Sensitive column: raw value -> -1 or +1. Label column: raw value ->
  // 1-based class. Unused otherwise.
  std::map<std::string, int> map;
};

struct DatasetSchema {
  std::vector<ColumnSpec> columns;

  absl::Status Validate() const;
  // {"columns": [{"name": ..., "kind": "numeric" | "categorical" | "label" |
  //  "sensitive" | "ignore", "map": {...}}]}
  static absl::StatusOr<DatasetSchema> FromJson(const std::string& text);
  // Layout written by WriteDatasetCsv: numeric x1..xd, then s, then y.
  static DatasetSchema ForDatasetHeader(std::span<const std::string> header);
};

// Parsed cells, still as text.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row.
  std::vector<int64_t> lines;
};

// Comma-separated with a header row; double quotes escape commas and quotes.
absl::StatusOr<RawTable> ParseCsv(const std::string& text);
// Whole file as bytes; a missing file is a data error.
absl::StatusOr<std::string> ReadTextFile(const std::string& path);
absl::StatusOr<RawTable> ReadCsvFile(const std::string& path);

struct SplitSpec {
  double train_frac = 0.6;
  double pool_frac = 0.2;
  double test_frac = 0.2;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Seeded Fisher-Yates shuffle of 0..n-1 cut into train, pool and test.
// Sizes use largest remainders, so each is within one row of n * frac.
absl::StatusOr<std::array<std::vector<std::size_t>, 3>> SplitIndices(
    std::size_t n, const SplitSpec& spec);

// Column statistics fitted on training rows.
class TableEncoder {
 public:
  // Numeric columns are standardized with training mean and variance
  // (variance floored at 1e-12) when `standardize` is set; categorical
  // columns are one-hot encoded over the training levels in sorted order.
  static absl::StatusOr<TableEncoder> Fit(const RawTable& table,
                                          const DatasetSchema& schema,
                                          std::span<const std::size_t> rows,
                                          bool standardize = true);

  absl::StatusOr<LabeledDataset> Transform(const RawTable& table,
                                           std::span<const std::size_t> rows);

  std::size_t dim() const { return feature_names_.size(); }
  int num_classes() const { return static_cast<int>(label_levels_.size()); }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  // Categorical cells with a level absent from the training rows; they
  // encode to all zeros.
  int64_t unseen_categories() const { return unseen_categories_; }

 private:
  struct Column {
    std::size_t source = 0;
    ColumnKind kind = ColumnKind::kNumeric;
    double mean = 0.0;
    double scale = 1.0;
    std::vector<std::string> levels;
  };

  std::vector<Column> columns_;
  std::size_t label_column_ = 0;
  std::size_t sensitive_column_ = 0;
  std::map<std::string, int> label_index_;
  std::vector<std::string> label_levels_;
  std::map<std::string, int> sensitive_map_;
  std::vector<std::string> feature_names_;
  int64_t unseen_categories_ = 0;
};

struct SplitData {
  LabeledDataset train;
  UnlabeledDataset pool;
  LabeledDataset test;
  int64_t unseen_categories = 0;
};

// Splits then fits the encoder on the training rows only.
absl::StatusOr<SplitData> EncodeAndSplit(const RawTable& table,
                                         const DatasetSchema& schema,
                                         const SplitSpec& spec,
                                         bool standardize = true);

// For datasets already in memory (no re-encoding).
absl::StatusOr<SplitData> Split(const LabeledDataset& data,
                                const SplitSpec& spec);

// Header x1..xd,s,y; s in {-1, 1}; y 1-based; values printed with %.17g.
void WriteDatasetCsv(const LabeledDataset& data, std::ostream& out);
// Reads the WriteDatasetCsv layout back without any re-encoding.
absl::StatusOr<LabeledDataset> ReadDatasetCsv(const std::string& path,
                                              int num_classes = 0);
// Same layout with the y column optional; labels are dropped.
absl::StatusOr<UnlabeledDataset> ReadPoolCsv(const std::string& path);

}  // namespace dp2dp

#endif  // DP2DP_INGEST_H_
