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

#ifndef KEPSILON_PARTITION_HPP_
#define KEPSILON_PARTITION_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "kepsilon/generalisation.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

enum class KAnonAlgorithm { kOla, kMondrian };

inline std::string_view AlgorithmName(KAnonAlgorithm a) {
  return a == KAnonAlgorithm::kOla ? "ola" : "mondrian";
}

struct Interval {
  double lo = 0;
  double hi = 0;
};

struct EquivalenceClass {
  // Generalised k-quasi tuple, one token per k-quasi column.
  std::vector<std::string> key;
  // Record indices into the dataset that was partitioned.
  std::vector<std::size_t> members;
  // Mondrian only: per-attribute [min, max] of member values (categorical
  // attributes use ranks in their total order).
  std::vector<Interval> box;

  std::size_t size() const { return members.size(); }
};

struct Partition {
  std::vector<EquivalenceClass> classes;
  std::vector<std::size_t> suppressed;  // sorted
  int k = 0;
  KAnonAlgorithm algorithm = KAnonAlgorithm::kOla;
  std::optional<LatticeNode> node;  // OLA only
  std::vector<std::string> quasi_columns;
  std::size_t num_records = 0;

  std::size_t retained() const { return num_records - suppressed.size(); }

  // Fraction of all records suppressed by k-anonymisation.
  double suppressed_fraction() const {
    return num_records == 0 ? 0.0
                            : static_cast<double>(suppressed.size()) /
                                  static_cast<double>(num_records);
  }

  // Class index of each record, or nullopt for suppressed ones.
  std::vector<std::optional<std::size_t>> ClassOfRecord() const {
    std::vector<std::optional<std::size_t>> out(num_records);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      for (std::size_t r : classes[c].members) out[r] = c;
    }
    return out;
  }
};

// Checks the structural invariants: classes and the suppressed set are
// pairwise disjoint, jointly cover every record, and every class has at least
// k members.
inline absl::Status ValidatePartition(const Partition& p) {
  std::vector<int> seen(p.num_records, 0);
  auto mark = [&](std::size_t r) -> absl::Status {
    if (r >= p.num_records) {
      return absl::InternalError(StrCat("record index ", r, " >= n"));
    }
    if (seen[r]++) {
      return absl::InternalError(
          StrCat("record ", r, " appears more than once"));
    }
    return absl::OkStatus();
  };
  for (std::size_t c = 0; c < p.classes.size(); ++c) {
    if (p.classes[c].size() < static_cast<std::size_t>(p.k)) {
      return absl::InternalError(StrCat(
          "class ", c, " has ", p.classes[c].size(), " < k=", p.k, " members"));
    }
    for (std::size_t r : p.classes[c].members) KEPS_RETURN_IF_ERROR(mark(r));
  }
  for (std::size_t r : p.suppressed) KEPS_RETURN_IF_ERROR(mark(r));
  for (std::size_t r = 0; r < p.num_records; ++r) {
    if (!seen[r]) {
      return absl::InternalError(StrCat("record ", r, " is not covered"));
    }
  }
  return absl::OkStatus();
}

// Class-size histogram: size -> number of classes of that size.
inline std::map<std::size_t, std::size_t> ClassSizeHistogram(
    const Partition& p) {
  std::map<std::size_t, std::size_t> hist;
  for (const auto& ec : p.classes) ++hist[ec.size()];
  return hist;
}

inline nlohmann::json PartitionSummaryJson(const Partition& p) {
  nlohmann::json j;
  j["algorithm"] = AlgorithmName(p.algorithm);
  j["k"] = p.k;
  j["records"] = p.num_records;
  j["class_count"] = p.classes.size();
  j["suppressed"] = p.suppressed.size();
  j["suppressed_fraction"] = p.suppressed_fraction();
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [size, count] : ClassSizeHistogram(p)) {
    hist.push_back({{"size", size}, {"classes", count}});
  }
  j["size_histogram"] = std::move(hist);
  if (p.node) j["ola_node"] = p.node->levels;
  j["quasi_columns"] = p.quasi_columns;
  return j;
}

// Full partition report: class keys, sizes and the suppressed record indices.
inline nlohmann::json PartitionToJson(const Partition& p) {
  nlohmann::json j = PartitionSummaryJson(p);
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& ec : p.classes) {
    classes.push_back({{"key", ec.key}, {"size", ec.size()}});
  }
  j["classes"] = std::move(classes);
  j["suppressed_indices"] = p.suppressed;
  return j;
}

}  // namespace kepsilon

#endif  // KEPSILON_PARTITION_HPP_
