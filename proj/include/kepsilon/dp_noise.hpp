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

// Per-equivalence-class Laplace perturbation of the eps-quasi column.
//
// Within a class of values ec, every record receives an independent draw from
// Lap(0, diam(ec) / eps), where diam is the range of the class's original
// values. A class without variation is released unchanged.

#ifndef KEPSILON_DP_NOISE_HPP_
#define KEPSILON_DP_NOISE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "kepsilon/dataset.hpp"
#include "kepsilon/partition.hpp"
#include "kepsilon/rng.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

// Lap(mu, b): density exp(-|x - mu| / b) / 2b, variance 2b^2.
struct LaplaceParams {
  double mu = 0.0;
  double b = 0.0;

  double variance() const { return 2.0 * b * b; }
};

inline absl::StatusOr<double> Diam(std::span<const double> values) {
  if (values.empty()) {
    return absl::InvalidArgumentError("diameter of an empty vector");
  }
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  return *mx - *mn;
}

// Inverse-CDF sampling: mu - b * sgn(u) * ln(1 - 2|u|), u ~ U(-1/2, 1/2).
// A zero scale returns mu exactly and consumes no randomness.
inline double SampleLaplace(const LaplaceParams& params, CounterRng& rng) {
  if (params.b == 0.0) return params.mu;
  const double u = rng.UniformOpen() - 0.5;
  const double sign = (u > 0) - (u < 0);
  return params.mu - params.b * sign * std::log1p(-2.0 * std::fabs(u));
}

struct NoiseAssignment {
  std::vector<double> values;  // noisy values, same order as the input
  double eps = 0.0;
  double diam = 0.0;

  double scale() const { return diam / eps; }
};

inline absl::StatusOr<NoiseAssignment> PerturbEquivalenceClass(
    std::span<const double> values, double eps, CounterRng& rng) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(
        StrCat("eps must be a positive finite number, got ", eps));
  }
  KEPS_ASSIGN_OR_RETURN(const double diam, Diam(values));
  NoiseAssignment out;
  out.eps = eps;
  out.diam = diam;
  out.values.reserve(values.size());
  const LaplaceParams params{0.0, diam / eps};
  for (double v : values) out.values.push_back(v + SampleLaplace(params, rng));
  return out;
}

// Noisy eps-quasi values of every retained record, grouped by class in
// partition order. Class c uses the stream CounterRng(DeriveSeed(seed, c)).
struct NoisyColumn {
  std::vector<double> values;
  std::vector<std::size_t> source_rows;
  std::vector<std::size_t> class_of_row;
  // Noisy values <= 0, outside the physical domain of height/weight-like
  // attributes. Reported, never clamped.
  std::size_t non_positive_outputs = 0;
};

inline absl::StatusOr<NoisyColumn> PerturbPartition(
    std::span<const double> original, const Partition& partition, double eps,
    std::uint64_t seed) {
  if (partition.num_records != original.size()) {
    return absl::InvalidArgumentError(
        StrCat("partition covers ", partition.num_records,
               " records but the dataset has ", original.size()));
  }
  NoisyColumn out;
  out.values.reserve(partition.retained());
  out.source_rows.reserve(partition.retained());
  out.class_of_row.reserve(partition.retained());
  std::vector<double> scratch;
  for (std::size_t c = 0; c < partition.classes.size(); ++c) {
    const auto& members = partition.classes[c].members;
    scratch.clear();
    for (std::size_t r : members) scratch.push_back(original[r]);
    CounterRng rng(DeriveSeed(seed, c));
    KEPS_ASSIGN_OR_RETURN(NoiseAssignment na,
                          PerturbEquivalenceClass(scratch, eps, rng));
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (na.values[j] <= 0.0) ++out.non_positive_outputs;
      out.values.push_back(na.values[j]);
      out.source_rows.push_back(members[j]);
      out.class_of_row.push_back(c);
    }
  }
  return out;
}

// Output of ApplyDp. `data` is the publishable table; `source_rows` and
// `class_of_row` tie each output row back to the partitioned input and are
// meant for evaluation only.
struct AnonymisedTable {
  Dataset data;
  std::vector<std::size_t> source_rows;
  std::vector<std::size_t> class_of_row;
  std::size_t non_positive_outputs = 0;
};

// Single eps-quasi column of the classification, or an error when there is
// none or more than one.
inline absl::StatusOr<std::string> SingleEpsQuasi(
    const AttributeClassification& cls) {
  const auto eps_cols = cls.ColumnsWith(AttributeRole::kEpsQuasi);
  if (eps_cols.empty()) {
    return absl::InvalidArgumentError("no eps_quasi column");
  }
  if (eps_cols.size() > 1) {
    return absl::UnimplementedError(StrCat(
        "only one eps_quasi column is supported, found ", eps_cols.size()));
  }
  return eps_cols.front();
}

// Perturbs the eps-quasi of every retained class with its own stream
// CounterRng(DeriveSeed(master_seed, class_index)), replaces k-quasi columns
// by the class key, and drops suppressed records and explicit identifiers.
// Output rows are grouped by class in partition order.
inline absl::StatusOr<AnonymisedTable> ApplyDp(
    const Dataset& ds, const Partition& partition,
    const AttributeClassification& cls, double eps,
    std::uint64_t master_seed) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(
        StrCat("eps must be a positive finite number, got ", eps));
  }
  KEPS_ASSIGN_OR_RETURN(const std::string eps_col, SingleEpsQuasi(cls));
  KEPS_ASSIGN_OR_RETURN(const auto original, ds.Numeric(eps_col));

  KEPS_ASSIGN_OR_RETURN(NoisyColumn noisy_col,
                        PerturbPartition(original, partition, eps, master_seed));
  AnonymisedTable out;
  out.source_rows = std::move(noisy_col.source_rows);
  out.class_of_row = std::move(noisy_col.class_of_row);
  out.non_positive_outputs = noisy_col.non_positive_outputs;
  std::vector<double>& noisy = noisy_col.values;

  std::vector<ColumnSpec> specs;
  std::vector<ColumnData> columns;
  const Dataset retained = ds.SelectRows(out.source_rows);
  for (std::size_t col = 0; col < ds.num_columns(); ++col) {
    const ColumnSpec& spec = ds.schema().column(col);
    const auto role = cls.RoleOf(spec.name);
    if (!role) {
      return absl::InvalidArgumentError(
          StrCat("column '", spec.name, "' has no role"));
    }
    if (*role == AttributeRole::kExplicit) continue;
    if (*role == AttributeRole::kKQuasi) {
      const auto q = std::find(partition.quasi_columns.begin(),
                               partition.quasi_columns.end(), spec.name);
      if (q == partition.quasi_columns.end()) {
        return absl::InvalidArgumentError(StrCat(
            "k_quasi column '", spec.name, "' is not part of the partition"));
      }
      const auto a =
          static_cast<std::size_t>(q - partition.quasi_columns.begin());
      std::vector<std::string> keys;
      keys.reserve(out.class_of_row.size());
      for (std::size_t c : out.class_of_row) {
        keys.push_back(partition.classes[c].key[a]);
      }
      specs.push_back({spec.name, ColumnKind::kCategorical});
      columns.emplace_back(std::move(keys));
    } else if (spec.name == eps_col) {
      specs.push_back(spec);
      columns.emplace_back(std::move(noisy));
    } else {
      specs.push_back(spec);
      columns.push_back(retained.column_data(col));
    }
  }
  KEPS_ASSIGN_OR_RETURN(Schema schema, Schema::Create(std::move(specs)));
  KEPS_ASSIGN_OR_RETURN(out.data,
                        Dataset::Create(std::move(schema), std::move(columns)));
  return out;
}

}  // namespace kepsilon

#endif  // KEPSILON_DP_NOISE_HPP_
