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

// Reference implementations used as test oracles. They favour obviousness
// over speed and share no code with the library beyond Hierarchy::Generalise.

#ifndef KEPSILON_TESTS_SUPPORT_ORACLES_HPP_
#define KEPSILON_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kepsilon/kepsilon.hpp"

namespace kepsilon::testing {

// A random k-anonymisation instance: categorical k-quasis q0..q{a-1} with
// random table hierarchies, plus a numeric eps-quasi "v".
struct KAnonInstance {
  Dataset data;
  AttributeClassification cls;
  HierarchySet hiers;
  CategoricalOrders orders;
  std::vector<std::string> quasis;
  int k = 2;
  double max_suppression = 0;
};

// Random monotone hierarchy with h levels over `domain` values.
inline Hierarchy RandomHierarchy(const std::string& attr, int h,
                                 std::size_t domain, CounterRng& rng) {
  if (h == 1) domain = 1;
  std::vector<std::size_t> group(domain);
  for (std::size_t i = 0; i < domain; ++i) group[i] = i;
  std::vector<std::vector<std::string>> rows(domain);
  for (std::size_t i = 0; i < domain; ++i) rows[i].push_back(StrCat(attr, "_", i));
  for (int l = 1; l < h; ++l) {
    if (l == h - 1) {
      for (auto& r : rows) r.push_back("*");
      break;
    }
    // Merge groups: each old group maps to one of fewer new groups.
    std::size_t old_groups = *std::max_element(group.begin(), group.end()) + 1;
    std::size_t new_groups =
        1 + rng.UniformBelow(std::max<std::size_t>(old_groups, 1));
    std::vector<std::size_t> remap(old_groups);
    for (auto& g : remap) g = rng.UniformBelow(new_groups);
    for (std::size_t i = 0; i < domain; ++i) {
      group[i] = remap[group[i]];
      rows[i].push_back(StrCat("L", l, "g", group[i]));
    }
  }
  return *Hierarchy::FromTable(attr, rows);
}

inline KAnonInstance RandomInstance(std::uint64_t seed, int max_attrs,
                                    int max_levels, std::size_t max_n,
                                    const std::vector<int>& ks,
                                    const std::vector<double>& budgets) {
  CounterRng rng(seed);
  KAnonInstance inst;
  inst.k = ks[rng.UniformBelow(ks.size())];
  inst.max_suppression = budgets[rng.UniformBelow(budgets.size())];
  const int attrs = 1 + static_cast<int>(rng.UniformBelow(max_attrs));
  const std::size_t n =
      static_cast<std::size_t>(inst.k) +
      rng.UniformBelow(max_n - static_cast<std::size_t>(inst.k) + 1);
  std::vector<ColumnSpec> specs;
  std::vector<ColumnData> cols;
  std::map<std::string, AttributeRole> roles;
  for (int a = 0; a < attrs; ++a) {
    const std::string name = StrCat("q", a);
    const int h = 1 + static_cast<int>(rng.UniformBelow(max_levels));
    const std::size_t domain = 2 + rng.UniformBelow(5);
    Hierarchy hier = RandomHierarchy(name, h, domain, rng);
    const auto dom = *hier.Domain();
    // Skewed draws so some values are rare.
    std::vector<std::string> values;
    for (std::size_t r = 0; r < n; ++r) {
      const double u = rng.UniformOpen();
      values.push_back(dom[static_cast<std::size_t>(u * u * dom.size())]);
    }
    specs.push_back({name, ColumnKind::kCategorical});
    cols.emplace_back(std::move(values));
    roles[name] = AttributeRole::kKQuasi;
    inst.orders[name] = dom;
    inst.hiers.emplace(name, std::move(hier));
    inst.quasis.push_back(name);
  }
  std::vector<double> v;
  for (std::size_t r = 0; r < n; ++r) v.push_back(150 + 50 * rng.UniformOpen());
  specs.push_back({"v", ColumnKind::kNumeric});
  cols.emplace_back(std::move(v));
  roles["v"] = AttributeRole::kEpsQuasi;
  Schema schema = *Schema::Create(specs);
  inst.data = *Dataset::Create(schema, std::move(cols));
  inst.cls = *AttributeClassification::Create(schema, roles);
  return inst;
}

struct OlaOracleResult {
  std::vector<int> node;
  std::size_t suppressed = 0;
  double loss = 0;
};

// Exhaustive search: every level vector, mean categorical precision loss,
// ties by height then lexicographic order.
inline std::optional<OlaOracleResult> OlaExhaustive(const KAnonInstance& inst) {
  const std::size_t n = inst.data.num_records();
  std::vector<const Hierarchy*> hs;
  std::vector<std::vector<std::string>> raw;
  for (const auto& q : inst.quasis) {
    hs.push_back(&inst.hiers.at(q));
    auto col = *inst.data.Categorical(q);
    raw.emplace_back(col.begin(), col.end());
  }
  std::vector<int> node(hs.size(), 0);
  std::optional<OlaOracleResult> best;
  while (true) {
    std::map<std::vector<std::string>, std::size_t> sizes;
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<std::string> key;
      for (std::size_t a = 0; a < hs.size(); ++a) {
        key.push_back(*hs[a]->Generalise(raw[a][r], node[a]));
      }
      ++sizes[key];
    }
    std::size_t supp = 0;
    for (const auto& [key, s] : sizes) {
      if (s < static_cast<std::size_t>(inst.k)) supp += s;
    }
    if (static_cast<double>(supp) / static_cast<double>(n) <=
        inst.max_suppression) {
      double loss = 0;
      for (std::size_t a = 0; a < hs.size(); ++a) {
        if (hs[a]->levels() > 1) {
          loss += static_cast<double>(node[a]) / (hs[a]->levels() - 1);
        }
      }
      loss /= static_cast<double>(hs.size());
      auto height = [](const std::vector<int>& v) {
        int s = 0;
        for (int x : v) s += x;
        return s;
      };
      bool better = !best;
      if (best) {
        if (loss < best->loss - 1e-12) {
          better = true;
        } else if (std::fabs(loss - best->loss) <= 1e-12) {
          const int h1 = height(node), h2 = height(best->node);
          better = h1 < h2 || (h1 == h2 && node < best->node);
        }
      }
      if (better) best = OlaOracleResult{node, supp, loss};
    }
    std::size_t a = 0;
    while (a < hs.size() && ++node[a] == hs[a]->levels()) node[a++] = 0;
    if (a == hs.size()) break;
  }
  return best;
}

// Reference Mondrian over numeric rank vectors: same split rule as the
// library, written as plain recursion over member lists.
inline void MondrianReferenceSplit(const std::vector<std::vector<double>>& x,
                                   const std::vector<double>& full_range,
                                   std::vector<std::size_t> rows, int k,
                                   std::vector<std::vector<std::size_t>>& out) {
  const std::size_t dims = x.size();
  std::vector<std::pair<double, std::size_t>> widths;
  for (std::size_t a = 0; a < dims; ++a) {
    double lo = x[a][rows[0]], hi = lo;
    for (auto r : rows) {
      lo = std::min(lo, x[a][r]);
      hi = std::max(hi, x[a][r]);
    }
    const double w = full_range[a] > 0 ? (hi - lo) / full_range[a] : 0.0;
    widths.emplace_back(w, a);
  }
  std::stable_sort(widths.begin(), widths.end(),
                   [](const auto& p, const auto& q) { return p.first > q.first; });
  for (const auto& [w, a] : widths) {
    if (w <= 0) break;
    std::vector<double> vals;
    for (auto r : rows) vals.push_back(x[a][r]);
    std::sort(vals.begin(), vals.end());
    const double median = vals[(vals.size() - 1) / 2];
    std::vector<std::size_t> left, right;
    for (auto r : rows) (x[a][r] <= median ? left : right).push_back(r);
    if (left.size() >= static_cast<std::size_t>(k) &&
        right.size() >= static_cast<std::size_t>(k)) {
      MondrianReferenceSplit(x, full_range, left, k, out);
      MondrianReferenceSplit(x, full_range, right, k, out);
      return;
    }
  }
  out.push_back(rows);
}

// Member sets of the reference partition, each sorted, as a sorted list.
inline std::vector<std::vector<std::size_t>> MondrianReference(
    const std::vector<std::vector<double>>& x, int k) {
  const std::size_t n = x.front().size();
  std::vector<double> full(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    auto [mn, mx] = std::minmax_element(x[a].begin(), x[a].end());
    full[a] = *mx - *mn;
  }
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  std::vector<std::vector<std::size_t>> out;
  MondrianReferenceSplit(x, full, all, k, out);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::vector<std::size_t>> SortedMemberSets(
    const Partition& p) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& ec : p.classes) {
    auto m = ec.members;
    std::sort(m.begin(), m.end());
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Ranks of each k-quasi value in its order, for the reference Mondrian.
inline std::vector<std::vector<double>> RankMatrix(const KAnonInstance& inst) {
  std::vector<std::vector<double>> x;
  for (const auto& q : inst.quasis) {
    const auto& ord = inst.orders.at(q);
    auto col = *inst.data.Categorical(q);
    std::vector<double> ranks;
    for (const auto& v : col) {
      ranks.push_back(static_cast<double>(
          std::find(ord.begin(), ord.end(), v) - ord.begin()));
    }
    x.push_back(std::move(ranks));
  }
  return x;
}

}  // namespace kepsilon::testing

#endif  // KEPSILON_TESTS_SUPPORT_ORACLES_HPP_
