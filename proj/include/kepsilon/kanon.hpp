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

// k-anonymisation of the k-quasi columns.
//
// OlaAnonymise performs global recoding over the lattice of hierarchy levels
// with a record-suppression budget. MondrianAnonymise performs local recoding
// by recursive median splits (strict partitioning, no suppression).

#ifndef KEPSILON_KANON_HPP_
#define KEPSILON_KANON_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "kepsilon/dataset.hpp"
#include "kepsilon/generalisation.hpp"
#include "kepsilon/partition.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

namespace kanon_internal {

inline absl::Status CheckK(int k, std::size_t n) {
  if (k < 1) return absl::InvalidArgumentError(StrCat("k=", k, " < 1"));
  if (static_cast<std::size_t>(k) > n) {
    return absl::FailedPreconditionError(StrCat(
        "k-anonymity infeasible: k=", k, " exceeds the ", n, " records"));
  }
  return absl::OkStatus();
}

// Per-attribute, per-level token ids for every record.
struct EncodedQuasis {
  // ids[a][l][row]
  std::vector<std::vector<std::vector<std::uint32_t>>> ids;
  // tokens[a][l][id]
  std::vector<std::vector<std::vector<std::string>>> tokens;
  std::vector<int> level_counts;
};

inline absl::StatusOr<EncodedQuasis> EncodeQuasis(
    const Dataset& ds, const std::vector<std::string>& columns,
    const HierarchySet& hiers) {
  EncodedQuasis enc;
  const std::size_t n = ds.num_records();
  for (const auto& name : columns) {
    auto hit = hiers.find(name);
    if (hit == hiers.end()) {
      return absl::InvalidArgumentError(
          StrCat("k_quasi column '", name, "' has no hierarchy"));
    }
    const Hierarchy& hier = hit->second;
    KEPS_ASSIGN_OR_RETURN(std::size_t col, ds.ColumnIndex(name));
    const int h = hier.levels();
    enc.level_counts.push_back(h);
    auto& ids = enc.ids.emplace_back(h, std::vector<std::uint32_t>(n));
    auto& tokens = enc.tokens.emplace_back(h);
    std::vector<std::string> raw(n);
    for (std::size_t r = 0; r < n; ++r) raw[r] = ds.CellText(r, col);
    for (int l = 0; l < h; ++l) {
      std::unordered_map<std::string, std::uint32_t> interned;
      for (std::size_t r = 0; r < n; ++r) {
        KEPS_ASSIGN_OR_RETURN(std::string tok, hier.Generalise(raw[r], l));
        auto [it, inserted] = interned.emplace(
            std::move(tok), static_cast<std::uint32_t>(tokens[l].size()));
        if (inserted) tokens[l].push_back(it->first);
        ids[l][r] = it->second;
      }
    }
  }
  return enc;
}

// Groups records by their generalised tuple at `node`. Returns the group id
// of each record; ids are assigned in order of first appearance.
inline std::vector<std::uint32_t> GroupAtNode(const EncodedQuasis& enc,
                                              const LatticeNode& node,
                                              std::size_t n,
                                              std::uint32_t& group_count) {
  std::vector<std::uint32_t> group(n, 0);
  group_count = 1;
  for (std::size_t a = 0; a < enc.ids.size(); ++a) {
    const auto& ids = enc.ids[a][node.levels[a]];
    std::unordered_map<std::uint64_t, std::uint32_t> next;
    next.reserve(group_count * 2);
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint64_t pair = (std::uint64_t{group[r]} << 32) | ids[r];
      auto [it, inserted] =
          next.emplace(pair, static_cast<std::uint32_t>(next.size()));
      group[r] = it->second;
    }
    group_count = static_cast<std::uint32_t>(next.size());
  }
  return group;
}

inline std::size_t SuppressedAtNode(const std::vector<std::uint32_t>& group,
                                    std::uint32_t group_count, int k) {
  std::vector<std::size_t> sizes(group_count, 0);
  for (auto g : group) ++sizes[g];
  std::size_t suppressed = 0;
  for (auto s : sizes) {
    if (s < static_cast<std::size_t>(k)) suppressed += s;
  }
  return suppressed;
}

// Exact rational ordering key for the mean categorical precision loss:
// sum_a level_a * L / (h_a - 1), with L the lcm of the (h_a - 1).
inline std::vector<std::int64_t> LossWeights(const std::vector<int>& counts) {
  std::int64_t lcm = 1;
  for (int h : counts) {
    if (h >= 2) lcm = std::lcm(lcm, static_cast<std::int64_t>(h - 1));
  }
  std::vector<std::int64_t> w;
  for (int h : counts) w.push_back(h >= 2 ? lcm / (h - 1) : 0);
  return w;
}

}  // namespace kanon_internal

// Global-recoding k-anonymisation. A lattice node is feasible when, after
// generalising every k-quasi to the node's levels and suppressing all records
// in classes smaller than k, the suppressed fraction is at most
// `max_suppression`. Returns the feasible node with the smallest mean
// categorical precision loss, breaking ties by lower height and then by the
// lexicographically smaller level vector.
//
// Nodes are visited in that order; a node lying below a known-infeasible node
// is skipped without evaluation, since coarser generalisation never increases
// suppression.
inline absl::StatusOr<Partition> OlaAnonymise(const Dataset& ds,
                                              const AttributeClassification& cls,
                                              const HierarchySet& hiers, int k,
                                              double max_suppression) {
  using namespace kanon_internal;
  const std::size_t n = ds.num_records();
  KEPS_RETURN_IF_ERROR(CheckK(k, n));
  if (!(max_suppression >= 0.0 && max_suppression <= 1.0)) {
    return absl::InvalidArgumentError(
        StrCat("max_suppression=", max_suppression, " outside [0, 1]"));
  }
  const std::vector<std::string> quasis =
      cls.ColumnsWith(AttributeRole::kKQuasi);
  if (quasis.empty()) {
    return absl::InvalidArgumentError("no k_quasi columns to anonymise");
  }
  KEPS_ASSIGN_OR_RETURN(EncodedQuasis enc, EncodeQuasis(ds, quasis, hiers));

  const auto weights = LossWeights(enc.level_counts);
  std::vector<std::tuple<std::int64_t, int, LatticeNode>> order;
  for (auto& layer : LatticeEnumerate(enc.level_counts)) {
    for (auto& node : layer) {
      std::int64_t loss = 0;
      for (std::size_t a = 0; a < weights.size(); ++a) {
        loss += weights[a] * node.levels[a];
      }
      order.emplace_back(loss, node.height(), std::move(node));
    }
  }
  std::sort(order.begin(), order.end());

  std::vector<LatticeNode> infeasible;
  for (const auto& [loss, height, node] : order) {
    const bool tagged = std::any_of(
        infeasible.begin(), infeasible.end(),
        [&](const LatticeNode& bad) { return NodeLessOrEqual(node, bad); });
    if (tagged) continue;

    std::uint32_t group_count = 0;
    const auto group = GroupAtNode(enc, node, n, group_count);
    const std::size_t suppressed = SuppressedAtNode(group, group_count, k);
    if (static_cast<double>(suppressed) / static_cast<double>(n) >
        max_suppression) {
      infeasible.push_back(node);
      continue;
    }

    Partition p;
    p.k = k;
    p.algorithm = KAnonAlgorithm::kOla;
    p.node = node;
    p.quasi_columns = quasis;
    p.num_records = n;
    std::vector<std::size_t> sizes(group_count, 0);
    for (auto g : group) ++sizes[g];
    std::vector<std::int64_t> class_of_group(group_count, -1);
    for (std::size_t r = 0; r < n; ++r) {
      const auto g = group[r];
      if (sizes[g] < static_cast<std::size_t>(k)) {
        p.suppressed.push_back(r);
        continue;
      }
      if (class_of_group[g] < 0) {
        class_of_group[g] = static_cast<std::int64_t>(p.classes.size());
        EquivalenceClass ec;
        for (std::size_t a = 0; a < quasis.size(); ++a) {
          const int l = node.levels[a];
          ec.key.push_back(enc.tokens[a][l][enc.ids[a][l][r]]);
        }
        p.classes.push_back(std::move(ec));
      }
      p.classes[class_of_group[g]].members.push_back(r);
    }
    return p;
  }
  // Unreachable for k <= n: the top node forms a single class of n records.
  return absl::FailedPreconditionError("no feasible lattice node");
}

// Total orders for categorical k-quasis used by Mondrian, keyed by column.
using CategoricalOrders = std::map<std::string, std::vector<std::string>>;

// Local-recoding k-anonymisation by recursive median splits. In each region
// the k-quasis are tried in decreasing order of normalised range (region
// range over full-dataset range; ties by column order). A split at the lower
// median sends values <= median left and the rest right, and is allowed only
// if both sides keep at least k records. Regions with no allowed split become
// equivalence classes keyed by the [min-max] of their members.
inline absl::StatusOr<Partition> MondrianAnonymise(
    const Dataset& ds, const AttributeClassification& cls, int k,
    const CategoricalOrders& orders = {}) {
  const std::size_t n = ds.num_records();
  KEPS_RETURN_IF_ERROR(kanon_internal::CheckK(k, n));
  const std::vector<std::string> quasis =
      cls.ColumnsWith(AttributeRole::kKQuasi);
  if (quasis.empty()) {
    return absl::InvalidArgumentError("no k_quasi columns to anonymise");
  }

  const std::size_t dims = quasis.size();
  std::vector<std::vector<double>> values(dims);
  std::vector<const std::vector<std::string>*> order_of(dims, nullptr);
  for (std::size_t a = 0; a < dims; ++a) {
    KEPS_ASSIGN_OR_RETURN(std::size_t col, ds.ColumnIndex(quasis[a]));
    if (ds.schema().column(col).kind == ColumnKind::kNumeric) {
      auto nums = *ds.Numeric(quasis[a]);
      values[a].assign(nums.begin(), nums.end());
      continue;
    }
    auto oit = orders.find(quasis[a]);
    if (oit == orders.end()) {
      return absl::InvalidArgumentError(
          StrCat("categorical k_quasi '", quasis[a],
                       "' needs a total order for Mondrian"));
    }
    order_of[a] = &oit->second;
    std::unordered_map<std::string, double> rank;
    for (std::size_t i = 0; i < oit->second.size(); ++i) {
      if (!rank.emplace(oit->second[i], static_cast<double>(i)).second) {
        return absl::InvalidArgumentError(StrCat(
            "order for '", quasis[a], "' repeats '", oit->second[i], "'"));
      }
    }
    auto cats = *ds.Categorical(quasis[a]);
    values[a].reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      auto it = rank.find(cats[r]);
      if (it == rank.end()) {
        return absl::InvalidArgumentError(
            StrCat("row ", r + 1, ": value '", cats[r],
                         "' missing from the order of '", quasis[a], "'"));
      }
      values[a].push_back(it->second);
    }
  }

  std::vector<double> full_range(dims, 0.0);
  for (std::size_t a = 0; a < dims; ++a) {
    auto [mn, mx] = std::minmax_element(values[a].begin(), values[a].end());
    full_range[a] = *mx - *mn;
  }

  Partition p;
  p.k = k;
  p.algorithm = KAnonAlgorithm::kMondrian;
  p.quasi_columns = quasis;
  p.num_records = n;

  auto make_class = [&](std::vector<std::size_t> rows) {
    EquivalenceClass ec;
    for (std::size_t a = 0; a < dims; ++a) {
      double lo = values[a][rows.front()], hi = lo;
      for (std::size_t r : rows) {
        lo = std::min(lo, values[a][r]);
        hi = std::max(hi, values[a][r]);
      }
      ec.box.push_back({lo, hi});
      if (order_of[a] != nullptr) {
        const auto& ord = *order_of[a];
        const auto first = static_cast<std::size_t>(lo);
        const auto last = static_cast<std::size_t>(hi);
        if (first == last) {
          ec.key.push_back(ord[first]);
        } else {
          std::vector<std::string> span(ord.begin() + first,
                                        ord.begin() + last + 1);
          ec.key.push_back(StrCat("{", absl::StrJoin(span, ","), "}"));
        }
      } else if (lo == hi) {
        ec.key.push_back(FormatNumber(lo));
      } else {
        ec.key.push_back(
            StrCat("[", FormatNumber(lo), "-", FormatNumber(hi), "]"));
      }
    }
    std::sort(rows.begin(), rows.end());
    ec.members = std::move(rows);
    p.classes.push_back(std::move(ec));
  };

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  // Depth-first with the lower half first; an explicit stack bounds depth.
  std::vector<std::vector<std::size_t>> stack;
  stack.push_back(std::move(all));
  std::vector<double> scratch;
  while (!stack.empty()) {
    std::vector<std::size_t> rows = std::move(stack.back());
    stack.pop_back();

    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t a = 0; a < dims; ++a) {
      if (full_range[a] <= 0) continue;
      double lo = values[a][rows.front()], hi = lo;
      for (std::size_t r : rows) {
        lo = std::min(lo, values[a][r]);
        hi = std::max(hi, values[a][r]);
      }
      if (hi > lo) candidates.emplace_back((hi - lo) / full_range[a], a);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });

    bool split = false;
    for (const auto& [width, a] : candidates) {
      scratch.clear();
      for (std::size_t r : rows) scratch.push_back(values[a][r]);
      const std::size_t mid = (scratch.size() - 1) / 2;
      std::nth_element(scratch.begin(), scratch.begin() + mid, scratch.end());
      const double median = scratch[mid];
      std::vector<std::size_t> lower, upper;
      for (std::size_t r : rows) {
        (values[a][r] <= median ? lower : upper).push_back(r);
      }
      if (lower.size() >= static_cast<std::size_t>(k) &&
          upper.size() >= static_cast<std::size_t>(k)) {
        stack.push_back(std::move(upper));
        stack.push_back(std::move(lower));
        split = true;
        break;
      }
    }
    if (!split) make_class(std::move(rows));
  }
  return p;
}

}  // namespace kepsilon

#endif  // KEPSILON_KANON_HPP_
