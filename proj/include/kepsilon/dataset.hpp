//
// Copyright 2026 The kepsilon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Tabular datasets, their schema, and the role each column plays in
// anonymisation.

#ifndef KEPSILON_DATASET_HPP_
#define KEPSILON_DATASET_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "kepsilon/csv.hpp"
#include "kepsilon/rng.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

enum class ColumnKind { kCategorical, kNumeric };

inline std::string_view ColumnKindName(ColumnKind kind) {
  return kind == ColumnKind::kNumeric ? "numeric" : "categorical";
}

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kCategorical;

  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

class Schema {
 public:
  Schema() = default;

  static absl::StatusOr<Schema> Create(std::vector<ColumnSpec> columns) {
    if (columns.empty()) {
      return absl::InvalidArgumentError("schema needs at least one column");
    }
    std::set<std::string_view> seen;
    for (const auto& c : columns) {
      if (c.name.empty()) {
        return absl::InvalidArgumentError("schema column with empty name");
      }
      if (!seen.insert(c.name).second) {
        return absl::InvalidArgumentError(
            StrCat("duplicate schema column '", c.name, "'"));
      }
    }
    Schema s;
    s.columns_ = std::move(columns);
    return s;
  }

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  const ColumnSpec& column(std::size_t i) const { return columns_[i]; }

  std::optional<std::size_t> IndexOf(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return i;
    }
    return std::nullopt;
  }

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<ColumnSpec> columns_;
};

// Column storage: strings for categorical columns, doubles for numeric ones.
using ColumnData = std::variant<std::vector<std::string>, std::vector<double>>;

// Immutable-by-convention table. Every transformation returns a new Dataset.
class Dataset {
 public:
  Dataset() = default;

  static absl::StatusOr<Dataset> Create(Schema schema,
                                        std::vector<ColumnData> columns) {
    if (columns.size() != schema.size()) {
      return absl::InvalidArgumentError(
          StrCat("dataset has ", columns.size(),
                       " columns but schema declares ", schema.size()));
    }
    std::size_t rows = 0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const bool numeric = schema.column(c).kind == ColumnKind::kNumeric;
      const std::size_t len = std::visit(
          [](const auto& v) { return v.size(); }, columns[c]);
      if (numeric != std::holds_alternative<std::vector<double>>(columns[c])) {
        return absl::InvalidArgumentError(StrCat(
            "column '", schema.column(c).name, "' storage does not match its ",
            ColumnKindName(schema.column(c).kind), " kind"));
      }
      if (c == 0) rows = len;
      if (len != rows) {
        return absl::InvalidArgumentError(
            StrCat("column '", schema.column(c).name, "' has ", len,
                         " values, expected ", rows));
      }
      if (numeric) {
        const auto& values = std::get<std::vector<double>>(columns[c]);
        for (std::size_t r = 0; r < values.size(); ++r) {
          if (!std::isfinite(values[r])) {
            return absl::InvalidArgumentError(
                StrCat("non-finite value in column '",
                             schema.column(c).name, "' at row ", r + 1));
          }
        }
      }
    }
    Dataset ds;
    ds.schema_ = std::move(schema);
    ds.columns_ = std::move(columns);
    ds.rows_ = rows;
    return ds;
  }

  const Schema& schema() const { return schema_; }
  std::size_t num_records() const { return rows_; }
  std::size_t num_columns() const { return columns_.size(); }
  const ColumnData& column_data(std::size_t i) const { return columns_[i]; }

  absl::StatusOr<std::size_t> ColumnIndex(std::string_view name) const {
    auto idx = schema_.IndexOf(name);
    if (!idx) {
      return absl::NotFoundError(StrCat("no column named '", name, "'"));
    }
    return *idx;
  }

  absl::StatusOr<std::span<const double>> Numeric(std::string_view name) const {
    KEPS_ASSIGN_OR_RETURN(std::size_t idx, ColumnIndex(name));
    if (schema_.column(idx).kind != ColumnKind::kNumeric) {
      return absl::InvalidArgumentError(
          StrCat("column '", name, "' is not numeric"));
    }
    return std::span<const double>(std::get<std::vector<double>>(columns_[idx]));
  }

  absl::StatusOr<std::span<const std::string>> Categorical(
      std::string_view name) const {
    KEPS_ASSIGN_OR_RETURN(std::size_t idx, ColumnIndex(name));
    if (schema_.column(idx).kind != ColumnKind::kCategorical) {
      return absl::InvalidArgumentError(
          StrCat("column '", name, "' is not categorical"));
    }
    return std::span<const std::string>(
        std::get<std::vector<std::string>>(columns_[idx]));
  }

  // Cell rendered as text; numeric cells use the shortest round-trip form.
  std::string CellText(std::size_t row, std::size_t col) const {
    if (const auto* s = std::get_if<std::vector<std::string>>(&columns_[col])) {
      return (*s)[row];
    }
    return FormatNumber(std::get<std::vector<double>>(columns_[col])[row]);
  }

  // Rows in the given order (indices may repeat or be a subset).
  Dataset SelectRows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.schema_ = schema_;
    out.rows_ = rows.size();
    out.columns_.reserve(columns_.size());
    for (const auto& col : columns_) {
      out.columns_.push_back(std::visit(
          [&](const auto& v) -> ColumnData {
            std::decay_t<decltype(v)> picked;
            picked.reserve(rows.size());
            for (std::size_t r : rows) picked.push_back(v[r]);
            return picked;
          },
          col));
    }
    return out;
  }

  Dataset DropColumns(const std::set<std::string>& names) const {
    std::vector<ColumnSpec> specs;
    std::vector<ColumnData> cols;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (names.count(schema_.column(c).name)) continue;
      specs.push_back(schema_.column(c));
      cols.push_back(columns_[c]);
    }
    Dataset out;
    out.schema_ = *Schema::Create(std::move(specs));
    out.columns_ = std::move(cols);
    out.rows_ = rows_;
    return out;
  }

  absl::StatusOr<Dataset> WithColumn(ColumnSpec spec, ColumnData data) const {
    std::vector<ColumnSpec> specs = schema_.columns();
    specs.push_back(std::move(spec));
    KEPS_ASSIGN_OR_RETURN(Schema schema, Schema::Create(std::move(specs)));
    std::vector<ColumnData> cols = columns_;
    cols.push_back(std::move(data));
    return Create(std::move(schema), std::move(cols));
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Schema schema_;
  std::vector<ColumnData> columns_;
  std::size_t rows_ = 0;
};

// Parses a CSV table against `schema`. The header must name exactly the
// schema's columns (any order); the result follows schema order.
inline absl::StatusOr<Dataset> DatasetFromCsv(const CsvTable& table,
                                              const Schema& schema) {
  std::vector<std::size_t> source(schema.size());
  std::set<std::string_view> header_names;
  for (const auto& h : table.header) {
    if (!header_names.insert(h).second) {
      return absl::InvalidArgumentError(
          StrCat("schema mismatch: duplicate header column '", h, "'"));
    }
    if (!schema.IndexOf(h)) {
      return absl::InvalidArgumentError(
          StrCat("schema mismatch: unexpected column '", h, "'"));
    }
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto it = std::find(table.header.begin(), table.header.end(),
                        schema.column(c).name);
    if (it == table.header.end()) {
      return absl::InvalidArgumentError(StrCat(
          "schema mismatch: missing column '", schema.column(c).name, "'"));
    }
    source[c] = static_cast<std::size_t>(it - table.header.begin());
  }
  if (table.rows.empty()) {
    return absl::InvalidArgumentError("empty dataset: no data rows");
  }

  std::vector<ColumnData> columns;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema.column(c).kind == ColumnKind::kNumeric) {
      columns.emplace_back(std::vector<double>());
    } else {
      columns.emplace_back(std::vector<std::string>());
    }
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const CsvRow& row = table.rows[r];
    if (row.size() != table.header.size()) {
      return absl::InvalidArgumentError(
          StrCat("row ", r + 1, ": expected ", table.header.size(),
                       " fields, found ", row.size()));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& cell = row[source[c]];
      if (TrimSpaces(cell).empty()) {
        return absl::InvalidArgumentError(
            StrCat("row ", r + 1, ": missing value in column '",
                         schema.column(c).name, "'"));
      }
      if (auto* nums = std::get_if<std::vector<double>>(&columns[c])) {
        double v;
        if (!ParseFiniteDouble(cell, v)) {
          return absl::InvalidArgumentError(
              StrCat("row ", r + 1, ": cannot parse '", cell,
                           "' as a number in column '", schema.column(c).name,
                           "'"));
        }
        nums->push_back(v);
      } else {
        std::get<std::vector<std::string>>(columns[c]).push_back(cell);
      }
    }
  }
  return Dataset::Create(schema, std::move(columns));
}

inline absl::StatusOr<Dataset> LoadCsv(const std::filesystem::path& path,
                                       const Schema& schema) {
  KEPS_ASSIGN_OR_RETURN(CsvTable table, ReadCsv(path));
  auto ds = DatasetFromCsv(table, schema);
  if (!ds.ok()) {
    return absl::Status(ds.status().code(),
                        StrCat(path.string(), ": ",
                                     ds.status().message()));
  }
  return ds;
}

inline std::string DatasetToCsv(const Dataset& ds) {
  std::string out;
  CsvRow row;
  for (const auto& c : ds.schema().columns()) row.push_back(c.name);
  AppendCsvRow(out, row);
  for (std::size_t r = 0; r < ds.num_records(); ++r) {
    row.clear();
    for (std::size_t c = 0; c < ds.num_columns(); ++c) {
      row.push_back(ds.CellText(r, c));
    }
    AppendCsvRow(out, row);
  }
  return out;
}

inline absl::Status WriteCsv(const Dataset& ds,
                             const std::filesystem::path& path) {
  return WriteStringToFile(path, DatasetToCsv(ds));
}

enum class AttributeRole { kExplicit, kKQuasi, kEpsQuasi, kSensitive };

inline std::string_view RoleName(AttributeRole role) {
  switch (role) {
    case AttributeRole::kExplicit:
      return "explicit";
    case AttributeRole::kKQuasi:
      return "k_quasi";
    case AttributeRole::kEpsQuasi:
      return "eps_quasi";
    case AttributeRole::kSensitive:
      return "sensitive";
  }
  return "?";
}

inline absl::StatusOr<AttributeRole> ParseRole(std::string_view text) {
  if (text == "explicit") return AttributeRole::kExplicit;
  if (text == "k_quasi") return AttributeRole::kKQuasi;
  if (text == "eps_quasi") return AttributeRole::kEpsQuasi;
  if (text == "sensitive") return AttributeRole::kSensitive;
  return absl::InvalidArgumentError(StrCat(
      "unknown role '", text,
      "' (expected explicit, k_quasi, eps_quasi or sensitive)"));
}

// Role of every column, in schema order.
class AttributeClassification {
 public:
  AttributeClassification() = default;

  static absl::StatusOr<AttributeClassification> Create(
      const Schema& schema, const std::map<std::string, AttributeRole>& roles) {
    AttributeClassification cls;
    for (const auto& col : schema.columns()) {
      auto it = roles.find(col.name);
      if (it == roles.end()) {
        return absl::InvalidArgumentError(
            StrCat("column '", col.name, "' has no role"));
      }
      if (it->second == AttributeRole::kEpsQuasi &&
          col.kind != ColumnKind::kNumeric) {
        return absl::InvalidArgumentError(StrCat(
            "eps_quasi column '", col.name, "' must be numeric"));
      }
      cls.entries_.emplace_back(col.name, it->second);
    }
    for (const auto& [name, role] : roles) {
      if (!schema.IndexOf(name)) {
        return absl::InvalidArgumentError(
            StrCat("role given for unknown column '", name, "'"));
      }
    }
    return cls;
  }

  std::optional<AttributeRole> RoleOf(std::string_view name) const {
    for (const auto& [n, r] : entries_) {
      if (n == name) return r;
    }
    return std::nullopt;
  }

  std::vector<std::string> ColumnsWith(AttributeRole role) const {
    std::vector<std::string> out;
    for (const auto& [n, r] : entries_) {
      if (r == role) out.push_back(n);
    }
    return out;
  }

  const std::vector<std::pair<std::string, AttributeRole>>& entries() const {
    return entries_;
  }

  // The full pipeline needs at least one k-quasi and one eps-quasi.
  absl::Status ValidateForPipeline() const {
    if (ColumnsWith(AttributeRole::kKQuasi).empty()) {
      return absl::InvalidArgumentError("classification has no k_quasi column");
    }
    if (ColumnsWith(AttributeRole::kEpsQuasi).empty()) {
      return absl::InvalidArgumentError(
          "classification has no eps_quasi column");
    }
    return absl::OkStatus();
  }

 private:
  std::vector<std::pair<std::string, AttributeRole>> entries_;
};

inline Dataset RemoveExplicitIdentifiers(const Dataset& ds,
                                         const AttributeClassification& cls) {
  std::set<std::string> drop;
  for (const auto& c : cls.ColumnsWith(AttributeRole::kExplicit)) {
    drop.insert(c);
  }
  return ds.DropColumns(drop);
}

// Fisher-Yates permutation of [0, n) driven by CounterRng(seed).
inline std::vector<std::size_t> ShufflePermutation(std::size_t n,
                                                   std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.UniformBelow(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

inline Dataset ShuffleRecords(const Dataset& ds, std::uint64_t seed) {
  const auto perm = ShufflePermutation(ds.num_records(), seed);
  return ds.SelectRows(perm);
}

}  // namespace kepsilon

#endif  // KEPSILON_DATASET_HPP_
