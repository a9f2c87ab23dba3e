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

// Generalisation hierarchies and the joint lattice of generalisation levels.
//
// A hierarchy with h levels maps every raw value to a token per level:
// level 0 is the identity and level h-1 is a single constant token. Values
// that share a token at level l share it at every coarser level.

#ifndef KEPSILON_GENERALISATION_HPP_
#define KEPSILON_GENERALISATION_HPP_

#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "kepsilon/csv.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

class Hierarchy {
 public:
  // rows[i] lists the tokens of one raw value for levels 0..h-1; rows[i][0]
  // is the raw value itself.
  static absl::StatusOr<Hierarchy> FromTable(
      std::string attribute, const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) {
      return absl::InvalidArgumentError(
          StrCat("hierarchy '", attribute, "' has no values"));
    }
    const std::size_t h = rows.front().size();
    if (h == 0) {
      return absl::InvalidArgumentError(
          StrCat("hierarchy '", attribute, "' has zero levels"));
    }
    Table table;
    table.levels.resize(h);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != h) {
        return absl::InvalidArgumentError(
            StrCat("hierarchy '", attribute, "' row ", r + 1, " has ",
                         rows[r].size(), " levels, expected ", h));
      }
      if (!table.index.emplace(rows[r][0], r).second) {
        return absl::InvalidArgumentError(StrCat(
            "hierarchy '", attribute, "' lists '", rows[r][0], "' twice"));
      }
      for (std::size_t l = 0; l < h; ++l) table.levels[l].push_back(rows[r][l]);
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r][h - 1] != rows[0][h - 1]) {
        return absl::InvalidArgumentError(StrCat(
            "hierarchy '", attribute, "' top level is not a single token"));
      }
    }
    // Monotone coarsening: the token at level l must determine the token at
    // level l+1.
    for (std::size_t l = 0; l + 1 < h; ++l) {
      std::unordered_map<std::string_view, std::string_view> parent;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        auto [it, inserted] =
            parent.emplace(table.levels[l][r], table.levels[l + 1][r]);
        if (!inserted && it->second != table.levels[l + 1][r]) {
          return absl::InvalidArgumentError(StrCat(
              "hierarchy '", attribute, "' splits token '", table.levels[l][r],
              "' at level ", l + 1));
        }
      }
    }
    return Hierarchy(std::move(attribute), static_cast<int>(h),
                     std::move(table));
  }

  // Integer interval bucketing: level 0 is the value, level i (1 <= i <= n)
  // is the [lo-hi] bucket of width widths[i-1] aligned to multiples of the
  // width, and level n+1 is "*". Each width must divide the next.
  static absl::StatusOr<Hierarchy> IntervalBuckets(
      std::string attribute, std::vector<std::int64_t> widths) {
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] < 1) {
        return absl::InvalidArgumentError(
            StrCat("hierarchy '", attribute, "' has width < 1"));
      }
      if (i > 0 && widths[i] % widths[i - 1] != 0) {
        return absl::InvalidArgumentError(
            StrCat("hierarchy '", attribute, "' width ", widths[i],
                         " is not a multiple of ", widths[i - 1]));
      }
    }
    const int h = static_cast<int>(widths.size()) + 2;
    return Hierarchy(std::move(attribute), h, Intervals{std::move(widths)});
  }

  // Masks trailing characters of fixed-length codes: level l replaces the
  // last l characters with '*' (l = 0..length).
  static absl::StatusOr<Hierarchy> TrailingMask(std::string attribute,
                                                int length) {
    if (length < 1) {
      return absl::InvalidArgumentError(
          StrCat("hierarchy '", attribute, "' needs length >= 1"));
    }
    return Hierarchy(std::move(attribute), length + 1, Mask{length});
  }

  const std::string& attribute() const { return attribute_; }
  int levels() const { return levels_; }

  absl::StatusOr<std::string> Generalise(std::string_view value,
                                         int level) const {
    if (level < 0 || level >= levels_) {
      return absl::OutOfRangeError(
          StrCat("level ", level, " outside [0, ", levels_ - 1,
                       "] for hierarchy '", attribute_, "'"));
    }
    return std::visit([&](const auto& rule) { return Apply(rule, value, level); },
                      rule_);
  }

  // Raw values known to a table hierarchy; nullopt for rule-based ones.
  std::optional<std::vector<std::string>> Domain() const {
    if (const auto* t = std::get_if<Table>(&rule_)) return t->levels.front();
    return std::nullopt;
  }

  // Level-per-row rendering of a table hierarchy (the file format).
  std::vector<std::vector<std::string>> TableRows() const {
    std::vector<std::vector<std::string>> rows;
    if (const auto* t = std::get_if<Table>(&rule_)) {
      for (std::size_t r = 0; r < t->levels.front().size(); ++r) {
        std::vector<std::string> row;
        for (const auto& lvl : t->levels) row.push_back(lvl[r]);
        rows.push_back(std::move(row));
      }
    }
    return rows;
  }

  std::string Describe() const {
    if (std::holds_alternative<Table>(rule_)) {
      return StrCat("table, ", Domain()->size(), " values");
    }
    if (const auto* iv = std::get_if<Intervals>(&rule_)) {
      return StrCat("interval buckets of width ",
                          absl::StrJoin(iv->widths, "/"));
    }
    return StrCat("trailing mask of ", std::get<Mask>(rule_).length,
                        " characters");
  }

 private:
  struct Table {
    std::vector<std::vector<std::string>> levels;  // [level][row]
    std::unordered_map<std::string, std::size_t> index;
  };
  struct Intervals {
    std::vector<std::int64_t> widths;
  };
  struct Mask {
    int length;
  };

  Hierarchy(std::string attribute, int levels,
            std::variant<Table, Intervals, Mask> rule)
      : attribute_(std::move(attribute)), levels_(levels),
        rule_(std::move(rule)) {}

  absl::StatusOr<std::string> DomainError(std::string_view value) const {
    return absl::InvalidArgumentError(StrCat(
        "value '", value, "' is outside the domain of hierarchy '",
        attribute_, "'"));
  }

  absl::StatusOr<std::string> Apply(const Table& t, std::string_view value,
                                    int level) const {
    auto it = t.index.find(std::string(value));
    if (it == t.index.end()) return DomainError(value);
    return t.levels[level][it->second];
  }

  absl::StatusOr<std::string> Apply(const Intervals& iv, std::string_view value,
                                    int level) const {
    double parsed;
    if (!ParseFiniteDouble(value, parsed) || parsed != std::floor(parsed) ||
        std::fabs(parsed) > 1e15) {
      return DomainError(value);
    }
    const auto v = static_cast<std::int64_t>(parsed);
    if (level == 0) return std::string(TrimSpaces(value));
    if (level == levels_ - 1) return std::string("*");
    const std::int64_t w = iv.widths[level - 1];
    // Floor division so negative values bucket consistently.
    std::int64_t lo = (v / w) * w;
    if (lo > v) lo -= w;
    return StrCat("[", lo, "-", lo + w - 1, "]");
  }

  absl::StatusOr<std::string> Apply(const Mask& m, std::string_view value,
                                    int level) const {
    if (static_cast<int>(value.size()) != m.length) return DomainError(value);
    std::string out(value);
    for (int i = 0; i < level; ++i) out[out.size() - 1 - i] = '*';
    return out;
  }

  std::string attribute_;
  int levels_ = 1;
  std::variant<Table, Intervals, Mask> rule_;
};

inline absl::StatusOr<std::string> Generalise(std::string_view value,
                                              const Hierarchy& hier,
                                              int level) {
  return hier.Generalise(value, level);
}

using HierarchySet = std::map<std::string, Hierarchy>;

// The generalisation ladders used for the census-style quasi identifiers:
// year of birth (value, 2/4/8-year intervals, *), gender (value, Person),
// race (value, *), marital status (value, Alone/In marriage, *) and 5-digit
// ZIP codes (value, 2372*, ..., *****).
inline HierarchySet BuiltinHierarchies() {
  HierarchySet out;
  out.emplace("year_of_birth",
              *Hierarchy::IntervalBuckets("year_of_birth", {2, 4, 8}));
  out.emplace("gender", *Hierarchy::FromTable("gender", {{"Male", "Person"},
                                                         {"Female", "Person"}}));
  std::vector<std::vector<std::string>> race;
  for (const char* v : {"White", "Black", "Asian-Pac-Islander",
                        "Amer-Indian-Eskimo", "Asian", "Hispanic", "Other"}) {
    race.push_back({v, "*"});
  }
  out.emplace("race", *Hierarchy::FromTable("race", race));
  std::vector<std::vector<std::string>> marital;
  for (const char* v : {"Married", "Married-civ-spouse", "Married-spouse-absent",
                        "Married-AF-spouse"}) {
    marital.push_back({v, "In marriage", "*"});
  }
  for (const char* v :
       {"Single", "Never-married", "Divorced", "Separated", "Widowed"}) {
    marital.push_back({v, "Alone", "*"});
  }
  out.emplace("marital_status", *Hierarchy::FromTable("marital_status", marital));
  out.emplace("zip", *Hierarchy::TrailingMask("zip", 5));
  return out;
}

// Hierarchy file: the header's first field names the attribute and the header
// has one field per level; each following row lists one raw value's tokens
// for levels 0..h-1.
inline absl::StatusOr<Hierarchy> HierarchyFromCsv(const CsvTable& table) {
  if (table.header.empty() || table.header.front().empty()) {
    return absl::InvalidArgumentError(
        "hierarchy file header must start with the attribute name");
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      return absl::InvalidArgumentError(
          StrCat("hierarchy row ", r + 1, " has ", table.rows[r].size(),
                       " fields, header has ", table.header.size()));
    }
  }
  return Hierarchy::FromTable(table.header.front(), table.rows);
}

inline absl::StatusOr<Hierarchy> LoadHierarchyCsv(
    const std::filesystem::path& path) {
  KEPS_ASSIGN_OR_RETURN(CsvTable table, ReadCsv(path));
  auto h = HierarchyFromCsv(table);
  if (!h.ok()) {
    return absl::Status(h.status().code(), StrCat(path.string(), ": ",
                                                        h.status().message()));
  }
  return h;
}

inline std::string HierarchyToCsv(const Hierarchy& hier) {
  std::string out;
  CsvRow header{hier.attribute()};
  for (int l = 1; l < hier.levels(); ++l) {
    header.push_back(StrCat("level", l));
  }
  AppendCsvRow(out, header);
  for (const auto& row : hier.TableRows()) AppendCsvRow(out, row);
  return out;
}

// One generalisation level per k-quasi attribute.
struct LatticeNode {
  std::vector<int> levels;

  int height() const { return std::accumulate(levels.begin(), levels.end(), 0); }

  friend auto operator<=>(const LatticeNode&, const LatticeNode&) = default;
  friend bool operator==(const LatticeNode&, const LatticeNode&) = default;
};

// Componentwise order of the lattice.
inline bool NodeLessOrEqual(const LatticeNode& a, const LatticeNode& b) {
  for (std::size_t i = 0; i < a.levels.size(); ++i) {
    if (a.levels[i] > b.levels[i]) return false;
  }
  return true;
}

// All nodes of the product lattice, grouped by height; within a height the
// nodes are in lexicographic order.
inline std::vector<std::vector<LatticeNode>> LatticeEnumerate(
    std::span<const int> level_counts) {
  int max_height = 0;
  for (int h : level_counts) max_height += h - 1;
  std::vector<std::vector<LatticeNode>> by_height(max_height + 1);
  LatticeNode node{std::vector<int>(level_counts.size(), 0)};
  while (true) {
    by_height[node.height()].push_back(node);
    std::size_t a = level_counts.size();
    while (a > 0) {
      --a;
      if (++node.levels[a] < level_counts[a]) break;
      node.levels[a] = 0;
      if (a == 0) return by_height;
    }
    if (level_counts.empty()) return by_height;
  }
}

inline std::vector<std::vector<LatticeNode>> LatticeEnumerate(
    std::span<const Hierarchy> hierarchies) {
  std::vector<int> counts;
  for (const auto& h : hierarchies) counts.push_back(h.levels());
  return LatticeEnumerate(counts);
}

}  // namespace kepsilon

#endif  // KEPSILON_GENERALISATION_HPP_
