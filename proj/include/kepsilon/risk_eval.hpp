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

// Adversarial evaluation of an anonymised release.
//
// The adversary knows every individual's original eps-quasi and which class
// each anonymised record belongs to. Nearest-neighbour linking matches each
// noisy value to the closest original value of its class. Confidence-based
// k-anonymity counts, for each noisy value, how many original values of its
// class fall inside the c-confidence window [v' - r_c, v' + r_c], with
// r_c = -(diam(ec)/eps) ln(1 - c).
//
// All evaluation needs ground-truth correspondence between anonymised and
// original rows (`source_rows`), which is never part of a published release.

#ifndef KEPSILON_RISK_EVAL_HPP_
#define KEPSILON_RISK_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "kepsilon/dataset.hpp"
#include "kepsilon/dp_noise.hpp"
#include "kepsilon/partition.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

// 1 iff noisy[i] is at least as close to original[i] as to any original[j].
// Ties count as a successful link.
inline int LinkIndicator(std::span<const double> original,
                         std::span<const double> noisy, std::size_t i) {
  const double own = std::fabs(noisy[i] - original[i]);
  for (double v : original) {
    if (std::fabs(noisy[i] - v) < own) return 0;
  }
  return 1;
}

namespace risk_internal {

// Distance from x to the closest element of a sorted, non-empty vector.
inline double NearestDistance(const std::vector<double>& sorted, double x) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
  double best = std::numeric_limits<double>::infinity();
  if (it != sorted.end()) best = std::fabs(x - *it);
  if (it != sorted.begin()) best = std::min(best, std::fabs(x - *(it - 1)));
  return best;
}

// Anonymised rows grouped by partition class. Every anonymised row must come
// from a retained record.
inline absl::StatusOr<std::vector<std::vector<std::size_t>>> RowsByClass(
    const Partition& p, std::span<const std::size_t> source_rows) {
  const auto class_of = p.ClassOfRecord();
  std::vector<std::vector<std::size_t>> rows(p.classes.size());
  for (std::size_t i = 0; i < source_rows.size(); ++i) {
    if (source_rows[i] >= class_of.size()) {
      return absl::OutOfRangeError(
          StrCat("linkage row ", source_rows[i], " out of range"));
    }
    const auto c = class_of[source_rows[i]];
    if (!c) {
      return absl::InvalidArgumentError(StrCat(
          "anonymised row ", i + 1, " comes from a suppressed record"));
    }
    rows[*c].push_back(i);
  }
  return rows;
}

struct ClassValues {
  std::vector<double> original;  // members of the class present in the release
  std::vector<double> noisy;     // parallel to `original`
};

inline absl::StatusOr<std::vector<ClassValues>> GatherClassValues(
    std::span<const double> before, std::span<const double> after,
    std::span<const std::size_t> source_rows, const Partition& p,
    std::vector<std::vector<std::size_t>>* rows_out = nullptr) {
  if (after.size() != source_rows.size()) {
    return absl::InvalidArgumentError(
        StrCat("linkage has ", source_rows.size(),
               " rows, anonymised dataset has ", after.size()));
  }
  if (before.size() != p.num_records) {
    return absl::InvalidArgumentError(
        StrCat("partition covers ", p.num_records, " records, original has ",
               before.size()));
  }
  KEPS_ASSIGN_OR_RETURN(auto rows, RowsByClass(p, source_rows));
  std::vector<ClassValues> out(rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t i : rows[c]) {
      out[c].original.push_back(before[source_rows[i]]);
      out[c].noisy.push_back(after[i]);
    }
  }
  if (rows_out) *rows_out = std::move(rows);
  return out;
}

}  // namespace risk_internal

struct LinkResult {
  std::vector<std::size_t> class_links;
  std::vector<std::size_t> class_sizes;
  std::size_t retained = 0;
  double risk = 0;  // sum of links / retained records
};

// `original` holds the eps-quasi of every partitioned record, `noisy` the
// released value of each anonymised row.
inline absl::StatusOr<LinkResult> LinkingRisk(
    std::span<const double> original, std::span<const double> noisy,
    std::span<const std::size_t> source_rows, const Partition& p) {
  KEPS_ASSIGN_OR_RETURN(auto classes, risk_internal::GatherClassValues(
                                          original, noisy, source_rows, p));
  LinkResult out;
  std::size_t links = 0;
  for (const auto& cv : classes) {
    std::vector<double> sorted = cv.original;
    std::sort(sorted.begin(), sorted.end());
    std::size_t linked = 0;
    for (std::size_t i = 0; i < cv.noisy.size(); ++i) {
      const double own = std::fabs(cv.noisy[i] - cv.original[i]);
      if (own <= risk_internal::NearestDistance(sorted, cv.noisy[i])) ++linked;
    }
    out.class_links.push_back(linked);
    out.class_sizes.push_back(cv.noisy.size());
    links += linked;
    out.retained += cv.noisy.size();
  }
  out.risk = out.retained == 0 ? 0.0
                               : static_cast<double>(links) /
                                     static_cast<double>(out.retained);
  return out;
}

inline absl::StatusOr<LinkResult> LinkingRisk(
    const Dataset& original, const Dataset& anonymised,
    std::span<const std::size_t> source_rows, const Partition& p,
    std::string_view eps_column) {
  KEPS_ASSIGN_OR_RETURN(auto before, original.Numeric(eps_column));
  KEPS_ASSIGN_OR_RETURN(auto after, anonymised.Numeric(eps_column));
  return LinkingRisk(before, after, source_rows, p);
}

// -(diam/eps) * ln(1 - c): the half-width around a noisy value that contains
// its original with probability c.
inline absl::StatusOr<double> ConfidenceRange(double diam, double eps,
                                              double c) {
  if (!(diam >= 0)) {
    return absl::InvalidArgumentError(StrCat("diam=", diam, " < 0"));
  }
  if (!(eps > 0)) {
    return absl::InvalidArgumentError(StrCat("eps=", eps, " <= 0"));
  }
  if (!(c >= 0 && c < 1)) {
    return absl::InvalidArgumentError(
        StrCat("confidence c=", c, " outside [0, 1)"));
  }
  return -(diam / eps) * std::log1p(-c);
}

struct ConfidenceSuppression {
  double c = 0;
  int k = 0;
  std::vector<double> class_range;  // r_c per partition class
  std::vector<std::size_t> ell;     // per anonymised row
  // Anonymised rows with 0 < ell < k.
  std::vector<std::size_t> record_suppressed;
  // Classes left with fewer than k records: |ec| - |{i : ell_i < k}| < k.
  std::vector<std::size_t> class_suppressed;
  // Anonymised rows removed by either rule, sorted.
  std::vector<std::size_t> suppressed_rows;
  std::size_t total_records = 0;  // records before k-anonymisation

  double fraction() const {
    return total_records == 0 ? 0.0
                              : static_cast<double>(suppressed_rows.size()) /
                                    static_cast<double>(total_records);
  }
};

// Records with 0 < ell_i < k are suppressed; ell_i = 0 records (pushed out
// of reach by the noise) are kept. A class is then suppressed as a whole when
// its size minus the number of records with ell_i < k falls below k; that
// count includes the retained ell_i = 0 records.
inline absl::StatusOr<ConfidenceSuppression> ConfidenceSuppress(
    std::span<const double> original, std::span<const double> noisy,
    std::span<const std::size_t> source_rows, const Partition& p, double eps,
    double c, int k) {
  if (k < 1) return absl::InvalidArgumentError("k must be >= 1");
  std::vector<std::vector<std::size_t>> rows;
  KEPS_ASSIGN_OR_RETURN(auto classes,
                        risk_internal::GatherClassValues(
                            original, noisy, source_rows, p, &rows));
  ConfidenceSuppression out;
  out.c = c;
  out.k = k;
  out.total_records = p.num_records;
  out.ell.assign(source_rows.size(), 0);
  const auto kk = static_cast<std::size_t>(k);
  std::vector<char> removed(source_rows.size(), 0);
  for (std::size_t cls = 0; cls < classes.size(); ++cls) {
    const auto& cv = classes[cls];
    if (cv.original.empty()) {
      out.class_range.push_back(0);
      continue;
    }
    std::vector<double> sorted = cv.original;
    std::sort(sorted.begin(), sorted.end());
    KEPS_ASSIGN_OR_RETURN(double r,
                          ConfidenceRange(sorted.back() - sorted.front(), eps, c));
    out.class_range.push_back(r);
    std::size_t below_k = 0;
    for (std::size_t j = 0; j < cv.noisy.size(); ++j) {
      const double x = cv.noisy[j];
      const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - r);
      const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + r);
      const auto ell = static_cast<std::size_t>(hi - lo);
      const std::size_t row = rows[cls][j];
      out.ell[row] = ell;
      if (ell < kk) ++below_k;
      if (ell > 0 && ell < kk) {
        out.record_suppressed.push_back(row);
        removed[row] = 1;
      }
    }
    if (cv.noisy.size() < kk + below_k) {
      out.class_suppressed.push_back(cls);
      for (std::size_t row : rows[cls]) removed[row] = 1;
    }
  }
  std::sort(out.record_suppressed.begin(), out.record_suppressed.end());
  for (std::size_t i = 0; i < removed.size(); ++i) {
    if (removed[i]) out.suppressed_rows.push_back(i);
  }
  return out;
}

inline absl::StatusOr<ConfidenceSuppression> ConfidenceSuppress(
    const Dataset& original, const Dataset& anonymised,
    std::span<const std::size_t> source_rows, const Partition& p,
    std::string_view eps_column, double eps, double c, int k) {
  KEPS_ASSIGN_OR_RETURN(auto before, original.Numeric(eps_column));
  KEPS_ASSIGN_OR_RETURN(auto after, anonymised.Numeric(eps_column));
  return ConfidenceSuppress(before, after, source_rows, p, eps, c, k);
}

}  // namespace kepsilon

#endif  // KEPSILON_RISK_EVAL_HPP_
