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

#include "dp2dp/ingest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dp2dp/random.h"
#include "dp2dp/status.h"
#include "json.hpp"

namespace dp2dp {
namespace {

constexpr double kVarianceFloor = 1e-12;

absl::StatusOr<ColumnKind> ParseKind(const std::string& name) {
  if (name == "numeric") return ColumnKind::kNumeric;
  if (name == "categorical") return ColumnKind::kCategorical;
  if (name == "label") return ColumnKind::kLabel;
  if (name == "sensitive") return ColumnKind::kSensitive;
  if (name == "ignore") return ColumnKind::kIgnore;
  return ConfigError(absl::StrCat("schema: unknown column kind '", name, "'"));
}

absl::StatusOr<std::vector<std::string>> SplitRecord(const std::string& line,
                                                     int64_t line_number) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) {
    return DataError(
        absl::StrCat("line ", line_number, ": unterminated quote"));
  }
  cells.push_back(std::move(cell));
  for (std::string& c : cells) {
    const auto first = c.find_first_not_of(" \t");
    const auto last = c.find_last_not_of(" \t");
    c = first == std::string::npos ? "" : c.substr(first, last - first + 1);
  }
  return cells;
}

absl::StatusOr<double> ParseNumber(const std::string& cell, int64_t line,
                                   const std::string& column) {
  double value = 0.0;
  if (!absl::SimpleAtod(cell, &value) || !std::isfinite(value)) {
    return DataError(absl::StrCat("line ", line, ": column '", column,
                                  "' has non-numeric value '", cell, "'"));
  }
  return value;
}

// -1/+1 parsing for the sensitive column without an explicit map.
absl::StatusOr<SensitiveAttr> ParseSensitive(
    const std::map<std::string, int>& map, const std::string& cell,
    int64_t line) {
  int value = 0;
  if (!map.empty()) {
    auto it = map.find(cell);
    if (it == map.end()) {
      return DataError(absl::StrCat("line ", line, ": sensitive value '", cell,
                                    "' is not in the schema map"));
    }
    value = it->second;
  } else if (!absl::SimpleAtoi(cell, &value)) {
    return DataError(absl::StrCat("line ", line, ": sensitive value '", cell,
                                  "' is not -1 or 1"));
  }
  absl::StatusOr<SensitiveAttr> s = SensitiveAttrFromInt(value);
  if (!s.ok()) {
    return DataError(absl::StrCat("line ", line, ": ", s.status().message()));
  }
  return s;
}

}  // namespace

absl::Status DatasetSchema::Validate() const {
  int labels = 0;
  int sensitive = 0;
  std::set<std::string> names;
  for (const ColumnSpec& c : columns) {
    if (!names.insert(c.name).second) {
      return ConfigError(
          absl::StrCat("schema: duplicate column '", c.name, "'"));
    }
    labels += c.kind == ColumnKind::kLabel;
    if (c.kind == ColumnKind::kSensitive) {
      ++sensitive;
      for (const auto& [raw, value] : c.map) {
        if (value != -1 && value != 1) {
          return ConfigError(absl::StrCat("schema: sensitive map sends '", raw,
                                          "' to ", value, "; use -1 or 1"));
        }
      }
    }
    if (c.kind == ColumnKind::kLabel) {
      for (const auto& [raw, value] : c.map) {
        if (value < 1) {
          return ConfigError(absl::StrCat("schema: label map sends '", raw,
                                          "' to ", value,
                                          "; classes are 1..K"));
        }
      }
    }
  }
  if (labels != 1) {
    return ConfigError(
        absl::StrCat("schema: need exactly one label column, got ", labels));
  }
  if (sensitive != 1) {
    return ConfigError(absl::StrCat(
        "schema: need exactly one sensitive column, got ", sensitive));
  }
  return absl::OkStatus();
}

absl::StatusOr<DatasetSchema> DatasetSchema::FromJson(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("columns") ||
      !doc["columns"].is_array()) {
    return ConfigError("schema: expected an object with a 'columns' array");
  }
  DatasetSchema schema;
  try {
    for (const auto& entry : doc["columns"]) {
      ColumnSpec column;
      column.name = entry.at("name").get<std::string>();
      DP2DP_ASSIGN_OR_RETURN(column.kind,
                             ParseKind(entry.at("kind").get<std::string>()));
      if (entry.contains("map")) {
        for (const auto& [key, value] : entry["map"].items()) {
          column.map[key] = value.get<int>();
        }
      }
      schema.columns.push_back(std::move(column));
    }
  } catch (const nlohmann::json::exception& e) {
    return ConfigError(absl::StrCat("schema: ", e.what()));
  }
  DP2DP_RETURN_IF_ERROR(schema.Validate());
  return schema;
}

DatasetSchema DatasetSchema::ForDatasetHeader(
    std::span<const std::string> header) {
  DatasetSchema schema;
  for (const std::string& name : header) {
    ColumnSpec column{name, ColumnKind::kNumeric, {}};
    if (name == "s") column.kind = ColumnKind::kSensitive;
    if (name == "y") column.kind = ColumnKind::kLabel;
    schema.columns.push_back(std::move(column));
  }
  return schema;
}

absl::StatusOr<RawTable> ParseCsv(const std::string& text) {
  RawTable table;
  std::istringstream in(text);
  std::string line;
  int64_t line_number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    DP2DP_ASSIGN_OR_RETURN(std::vector<std::string> cells,
                           SplitRecord(line, line_number));
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      return DataError(absl::StrCat("line ", line_number, ": expected ",
                                    table.header.size(), " fields, got ",
                                    cells.size()));
    }
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_number);
  }
  if (!have_header) return DataError("CSV input has no header row");
  return table;
}

absl::StatusOr<std::string> ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return DataError(absl::StrCat("cannot open '", path, "'"));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

absl::StatusOr<RawTable> ReadCsvFile(const std::string& path) {
  DP2DP_ASSIGN_OR_RETURN(const std::string text, ReadTextFile(path));
  return ParseCsv(text);
}

absl::Status SplitSpec::Validate() const {
  if (!(train_frac > 0.0 && pool_frac > 0.0 && test_frac > 0.0)) {
    return ConfigError("split: train, pool and test fractions must be > 0");
  }
  const double total = train_frac + pool_frac + test_frac;
  if (std::abs(total - 1.0) > 1e-9) {
    return ConfigError(
        absl::StrFormat("split: fractions must sum to 1, got %.12g", total));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::array<std::vector<std::size_t>, 3>> SplitIndices(
    std::size_t n, const SplitSpec& spec) {
  DP2DP_RETURN_IF_ERROR(spec.Validate());
  const std::array<double, 3> fracs = {spec.train_frac, spec.pool_frac,
                                       spec.test_frac};
  std::array<std::size_t, 3> sizes;
  std::array<double, 3> remainders;
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * fracs[i];
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (int i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 3]];
  static constexpr const char* kNames[] = {"train", "pool", "test"};
  for (int i = 0; i < 3; ++i) {
    if (sizes[i] == 0) {
      return ConfigError(absl::StrCat("split: ", kNames[i], " split of ", n,
                                      " rows would be empty"));
    }
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(spec.seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.UniformIndex(i)]);
  }
  std::array<std::vector<std::size_t>, 3> out;
  std::size_t offset = 0;
  for (int i = 0; i < 3; ++i) {
    out[i].assign(perm.begin() + offset, perm.begin() + offset + sizes[i]);
    offset += sizes[i];
  }
  return out;
}

absl::StatusOr<TableEncoder> TableEncoder::Fit(
    const RawTable& table, const DatasetSchema& schema,
    std::span<const std::size_t> rows, bool standardize) {
  DP2DP_RETURN_IF_ERROR(schema.Validate());
  if (rows.empty()) return DataError("encoder: no training rows");
  TableEncoder encoder;
  for (const ColumnSpec& spec : schema.columns) {
    auto it = std::find(table.header.begin(), table.header.end(), spec.name);
    if (it == table.header.end()) {
      return DataError(absl::StrCat("header has no column '", spec.name,
                                    "' from the schema"));
    }
    const std::size_t source = it - table.header.begin();
    switch (spec.kind) {
      case ColumnKind::kIgnore:
        break;
      case ColumnKind::kLabel: {
        encoder.label_column_ = source;
        if (!spec.map.empty()) {
          int k = 0;
          for (const auto& [raw, value] : spec.map) {
            encoder.label_index_[raw] = value - 1;
            k = std::max(k, value);
          }
          encoder.label_levels_.assign(k, "");
          for (const auto& [raw, value] : spec.map) {
            encoder.label_levels_[value - 1] = raw;
          }
          break;
        }
        // Levels come from every row so all splits share one class set.
        std::set<std::string> levels;
        for (const auto& row : table.rows) levels.insert(row[source]);
        std::vector<std::string> sorted(levels.begin(), levels.end());
        bool numeric = true;
        for (const std::string& v : sorted) {
          double unused;
          numeric = numeric && absl::SimpleAtod(v, &unused);
        }
        if (numeric) {
          std::stable_sort(sorted.begin(), sorted.end(),
                           [](const std::string& a, const std::string& b) {
                             double x = 0, y = 0;
                             const bool ok = absl::SimpleAtod(a, &x) &&
                                             absl::SimpleAtod(b, &y);
                             return ok && x < y;
                           });
        }
        for (std::size_t i = 0; i < sorted.size(); ++i) {
          encoder.label_index_[sorted[i]] = static_cast<int>(i);
        }
        encoder.label_levels_ = std::move(sorted);
        break;
      }
      case ColumnKind::kSensitive:
        encoder.sensitive_column_ = source;
        encoder.sensitive_map_ = spec.map;
        break;
      case ColumnKind::kNumeric: {
        Column column{source, ColumnKind::kNumeric, 0.0, 1.0, {}};
        if (standardize) {
          double sum = 0.0;
          double count = 0.0;
          for (std::size_t r : rows) {
            const std::string& cell = table.rows[r][source];
            if (cell.empty()) continue;
            DP2DP_ASSIGN_OR_RETURN(
                const double v, ParseNumber(cell, table.lines[r], spec.name));
            sum += v;
            count += 1.0;
          }
          column.mean = count > 0 ? sum / count : 0.0;
          double ss = 0.0;
          for (std::size_t r : rows) {
            const std::string& cell = table.rows[r][source];
            if (cell.empty()) continue;
            double v = 0.0;
            if (!absl::SimpleAtod(cell, &v)) continue;
            ss += (v - column.mean) * (v - column.mean);
          }
          const double variance = count > 0 ? ss / count : 0.0;
          column.scale = 1.0 / std::sqrt(std::max(variance, kVarianceFloor));
        }
        encoder.columns_.push_back(column);
        encoder.feature_names_.push_back(spec.name);
        break;
      }
      case ColumnKind::kCategorical: {
        std::set<std::string> levels;
        for (std::size_t r : rows) levels.insert(table.rows[r][source]);
        Column column{source, ColumnKind::kCategorical, 0.0, 1.0,
                      std::vector<std::string>(levels.begin(), levels.end())};
        for (const std::string& level : column.levels) {
          encoder.feature_names_.push_back(absl::StrCat(spec.name, "=", level));
        }
        encoder.columns_.push_back(std::move(column));
        break;
      }
    }
  }
  if (encoder.label_levels_.size() < 2) {
    return DataError("label column has fewer than 2 classes");
  }
  return encoder;
}

absl::StatusOr<LabeledDataset> TableEncoder::Transform(
    const RawTable& table, std::span<const std::size_t> rows) {
  const std::size_t d = dim();
  std::vector<double> x(rows.size() * d, 0.0);
  std::vector<SensitiveAttr> s(rows.size());
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::vector<std::string>& row = table.rows[rows[i]];
    const int64_t line = table.lines[rows[i]];
    double* out = x.data() + i * d;
    std::size_t offset = 0;
    for (const Column& column : columns_) {
      const std::string& cell = row[column.source];
      if (column.kind == ColumnKind::kNumeric) {
        if (!cell.empty()) {
          DP2DP_ASSIGN_OR_RETURN(
              const double v,
              ParseNumber(cell, line, table.header[column.source]));
          out[offset] = (v - column.mean) * column.scale;
        }
        ++offset;
        continue;
      }
      auto it =
          std::lower_bound(column.levels.begin(), column.levels.end(), cell);
      if (it != column.levels.end() && *it == cell) {
        out[offset + (it - column.levels.begin())] = 1.0;
      } else {
        ++unseen_categories_;
      }
      offset += column.levels.size();
    }
    DP2DP_ASSIGN_OR_RETURN(
        s[i], ParseSensitive(sensitive_map_, row[sensitive_column_], line));
    auto label = label_index_.find(row[label_column_]);
    if (label == label_index_.end()) {
      return DataError(absl::StrCat("line ", line, ": label '",
                                    row[label_column_],
                                    "' is not in the schema map"));
    }
    y[i] = label->second;
  }
  return LabeledDataset::Create(FeatureMatrix(rows.size(), d, std::move(x)),
                                std::move(s), std::move(y), num_classes());
}

absl::StatusOr<SplitData> EncodeAndSplit(const RawTable& table,
                                         const DatasetSchema& schema,
                                         const SplitSpec& spec,
                                         bool standardize) {
  DP2DP_ASSIGN_OR_RETURN(auto parts, SplitIndices(table.rows.size(), spec));
  DP2DP_ASSIGN_OR_RETURN(
      TableEncoder encoder,
      TableEncoder::Fit(table, schema, parts[0], standardize));
  DP2DP_ASSIGN_OR_RETURN(LabeledDataset train,
                         encoder.Transform(table, parts[0]));
  DP2DP_ASSIGN_OR_RETURN(LabeledDataset pool,
                         encoder.Transform(table, parts[1]));
  DP2DP_ASSIGN_OR_RETURN(LabeledDataset test,
                         encoder.Transform(table, parts[2]));
  return SplitData{std::move(train), pool.WithoutLabels(), std::move(test),
                   encoder.unseen_categories()};
}

absl::StatusOr<SplitData> Split(const LabeledDataset& data,
                                const SplitSpec& spec) {
  DP2DP_ASSIGN_OR_RETURN(auto parts, SplitIndices(data.size(), spec));
  return SplitData{data.Select(parts[0]), data.Select(parts[1]).WithoutLabels(),
                   data.Select(parts[2]), 0};
}

void WriteDatasetCsv(const LabeledDataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j + 1 << ',';
  out << "s,y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x(i)) out << absl::StrFormat("%.17g,", v);
    out << Sign(data.s(i)) << ',' << data.y(i) + 1 << '\n';
  }
}

absl::StatusOr<LabeledDataset> ReadDatasetCsv(const std::string& path,
                                              int num_classes) {
  DP2DP_ASSIGN_OR_RETURN(const RawTable table, ReadCsvFile(path));
  const std::size_t cols = table.header.size();
  if (cols < 3 || table.header[cols - 2] != "s" ||
      table.header[cols - 1] != "y") {
    return DataError(absl::StrCat("'", path, "': expected header x1..xd,s,y"));
  }
  const std::size_t d = cols - 2;
  const std::size_t n = table.rows.size();
  if (n == 0) return DataError(absl::StrCat("'", path, "' has no rows"));
  std::vector<double> x(n * d);
  std::vector<SensitiveAttr> s(n);
  std::vector<int> y(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < d; ++j) {
      DP2DP_ASSIGN_OR_RETURN(
          x[i * d + j], ParseNumber(row[j], table.lines[i], table.header[j]));
    }
    DP2DP_ASSIGN_OR_RETURN(s[i], ParseSensitive({}, row[d], table.lines[i]));
    int label = 0;
    if (!absl::SimpleAtoi(row[d + 1], &label) || label < 1) {
      return DataError(absl::StrCat("line ", table.lines[i], ": label '",
                                    row[d + 1], "' is not a class in 1..K"));
    }
    y[i] = label - 1;
    max_label = std::max(max_label, label);
  }
  const int k = num_classes > 0 ? num_classes : std::max(max_label, 2);
  return LabeledDataset::Create(FeatureMatrix(n, d, std::move(x)), std::move(s),
                                std::move(y), k);
}

absl::StatusOr<UnlabeledDataset> ReadPoolCsv(const std::string& path) {
  DP2DP_ASSIGN_OR_RETURN(const RawTable table, ReadCsvFile(path));
  std::size_t d = table.header.size();
  if (d > 0 && table.header[d - 1] == "y") --d;
  if (d < 2 || table.header[d - 1] != "s") {
    return DataError(
        absl::StrCat("'", path, "': expected header x1..xd,s[,y]"));
  }
  --d;
  const std::size_t n = table.rows.size();
  if (n == 0) return DataError(absl::StrCat("'", path, "' has no rows"));
  std::vector<double> x(n * d);
  std::vector<SensitiveAttr> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < d; ++j) {
      DP2DP_ASSIGN_OR_RETURN(
          x[i * d + j], ParseNumber(row[j], table.lines[i], table.header[j]));
    }
    DP2DP_ASSIGN_OR_RETURN(s[i], ParseSensitive({}, row[d], table.lines[i]));
  }
  return UnlabeledDataset::Create(FeatureMatrix(n, d, std::move(x)),
                                  std::move(s));
}

}  // namespace dp2dp
