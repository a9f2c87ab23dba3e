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

// Information loss.
//
// k-quasis: categorical precision l/(h-1) for hierarchy-generalised
// attributes and numerical precision (interval range over dataset range) for
// Mondrian intervals.
//
// eps-quasi: relative error |v' - v| / |v|. With Laplace noise of scale
// diam(ec)/eps the expected error of a class is diam(ec) / (eps * Hm(ec)),
// where Hm is the harmonic mean of the class's original values, and the
// dataset error is the size-weighted average of the class errors.

#ifndef KEPSILON_LOSS_METRICS_HPP_
#define KEPSILON_LOSS_METRICS_HPP_

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "kepsilon/dataset.hpp"
#include "kepsilon/dp_noise.hpp"
#include "kepsilon/generalisation.hpp"
#include "kepsilon/partition.hpp"
#include "kepsilon/rng.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

inline absl::StatusOr<double> CategoricalPrecisionLoss(int level, int h) {
  if (h < 2) {
    return absl::InvalidArgumentError(
        StrCat("categorical precision undefined for h=", h));
  }
  if (level < 0 || level > h - 1) {
    return absl::OutOfRangeError(
        StrCat("level ", level, " outside [0, ", h - 1, "]"));
  }
  return static_cast<double>(level) / static_cast<double>(h - 1);
}

inline absl::StatusOr<double> NumericalPrecisionLoss(Interval interval,
                                                     Interval domain) {
  const double range = domain.hi - domain.lo;
  if (!(range > 0)) {
    return absl::InvalidArgumentError("numerical precision needs a domain "
                                      "with positive range");
  }
  if (interval.lo > interval.hi || interval.lo < domain.lo ||
      interval.hi > domain.hi) {
    return absl::InvalidArgumentError("interval is not inside the domain");
  }
  return (interval.hi - interval.lo) / range;
}

// Mean categorical precision loss over the k-quasis at the chosen OLA node.
// Attributes with a single-level hierarchy cannot be generalised and count
// as zero loss.
inline absl::StatusOr<double> OlaLoss(const Partition& p,
                                      const HierarchySet& hiers) {
  if (!p.node) {
    return absl::InvalidArgumentError("partition has no OLA lattice node");
  }
  if (p.quasi_columns.empty()) return 0.0;
  double total = 0;
  for (std::size_t a = 0; a < p.quasi_columns.size(); ++a) {
    auto it = hiers.find(p.quasi_columns[a]);
    if (it == hiers.end()) {
      return absl::InvalidArgumentError(
          StrCat("no hierarchy for '", p.quasi_columns[a], "'"));
    }
    if (it->second.levels() < 2) continue;
    KEPS_ASSIGN_OR_RETURN(
        double loss,
        CategoricalPrecisionLoss(p.node->levels[a], it->second.levels()));
    total += loss;
  }
  return total / static_cast<double>(p.quasi_columns.size());
}

// Record-weighted mean numerical precision per k-quasi of a Mondrian
// partition, in quasi-column order. The domain of each attribute is the span
// of all class boxes.
inline absl::StatusOr<std::vector<double>> MondrianPrecisionLoss(
    const Partition& p) {
  if (p.classes.empty() || p.classes.front().box.empty()) {
    return absl::InvalidArgumentError("partition has no Mondrian boxes");
  }
  const std::size_t dims = p.quasi_columns.size();
  std::vector<double> out(dims, 0.0);
  std::size_t total = 0;
  for (const auto& ec : p.classes) total += ec.size();
  for (std::size_t a = 0; a < dims; ++a) {
    Interval domain = p.classes.front().box[a];
    for (const auto& ec : p.classes) {
      domain.lo = std::min(domain.lo, ec.box[a].lo);
      domain.hi = std::max(domain.hi, ec.box[a].hi);
    }
    if (domain.hi == domain.lo) continue;  // constant attribute: no loss
    for (const auto& ec : p.classes) {
      KEPS_ASSIGN_OR_RETURN(double loss,
                            NumericalPrecisionLoss(ec.box[a], domain));
      out[a] += loss * static_cast<double>(ec.size());
    }
    out[a] /= static_cast<double>(total);
  }
  return out;
}

inline absl::StatusOr<double> HarmonicMean(std::span<const double> values) {
  if (values.empty()) {
    return absl::InvalidArgumentError("harmonic mean of an empty vector");
  }
  double inv = 0;
  for (double v : values) {
    if (!(v > 0)) {
      return absl::InvalidArgumentError(StrCat(
          "harmonic mean requires positive values, got ", v));
    }
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

inline absl::StatusOr<double> ExpectedEcError(std::span<const double> values,
                                              double eps) {
  if (!(eps > 0)) {
    return absl::InvalidArgumentError(StrCat("eps=", eps, " <= 0"));
  }
  KEPS_ASSIGN_OR_RETURN(double hm, HarmonicMean(values));
  KEPS_ASSIGN_OR_RETURN(double diam, Diam(values));
  return diam / (eps * hm);
}

struct ClassLoss {
  double diam = 0;
  double harmonic_mean = 0;
  std::size_t size = 0;
  double expected_error = 0;
};

inline absl::StatusOr<std::vector<ClassLoss>> ClassBreakdown(
    const Partition& p, const Dataset& ds, std::string_view eps_column,
    double eps) {
  KEPS_ASSIGN_OR_RETURN(auto values, ds.Numeric(eps_column));
  std::vector<ClassLoss> out;
  std::vector<double> scratch;
  for (const auto& ec : p.classes) {
    scratch.clear();
    for (std::size_t r : ec.members) scratch.push_back(values[r]);
    ClassLoss cl;
    cl.size = ec.size();
    KEPS_ASSIGN_OR_RETURN(cl.diam, Diam(scratch));
    KEPS_ASSIGN_OR_RETURN(cl.harmonic_mean, HarmonicMean(scratch));
    KEPS_ASSIGN_OR_RETURN(cl.expected_error, ExpectedEcError(scratch, eps));
    out.push_back(cl);
  }
  return out;
}

// (1/eps) * sum_ec diam(ec)/Hm(ec) * |ec|/n over retained records.
inline absl::StatusOr<double> ExpectedDatasetError(const Partition& p,
                                                   const Dataset& ds,
                                                   std::string_view eps_column,
                                                   double eps) {
  if (!(eps > 0)) {
    return absl::InvalidArgumentError(StrCat("eps=", eps, " <= 0"));
  }
  KEPS_ASSIGN_OR_RETURN(auto values, ds.Numeric(eps_column));
  const auto n = static_cast<double>(p.retained());
  if (n == 0) return absl::FailedPreconditionError("every record suppressed");
  double sum = 0;
  std::vector<double> scratch;
  for (const auto& ec : p.classes) {
    scratch.clear();
    for (std::size_t r : ec.members) scratch.push_back(values[r]);
    KEPS_ASSIGN_OR_RETURN(double hm, HarmonicMean(scratch));
    KEPS_ASSIGN_OR_RETURN(double diam, Diam(scratch));
    sum += diam / hm * static_cast<double>(ec.size()) / n;
  }
  return sum / eps;
}

// |v' - v| / |v| for every anonymised row; source_rows[i] is the original
// row of anonymised row i.
inline absl::StatusOr<std::vector<double>> RelativeErrors(
    std::span<const double> before, std::span<const double> after,
    std::span<const std::size_t> source_rows) {
  if (source_rows.size() != after.size()) {
    return absl::InvalidArgumentError(
        StrCat("linkage has ", source_rows.size(), " rows, anonymised "
               "dataset has ", after.size()));
  }
  std::vector<double> out;
  out.reserve(after.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (source_rows[i] >= before.size()) {
      return absl::OutOfRangeError(
          StrCat("linkage row ", source_rows[i], " out of range"));
    }
    const double v = before[source_rows[i]];
    if (v == 0.0) {
      return absl::InvalidArgumentError(
          StrCat("relative error undefined: original value 0 at row ",
                 source_rows[i] + 1));
    }
    out.push_back(std::fabs((after[i] - v) / v));
  }
  return out;
}

inline absl::StatusOr<std::vector<double>> RelativeErrors(
    const Dataset& original, const Dataset& anonymised,
    std::span<const std::size_t> source_rows, std::string_view eps_column) {
  KEPS_ASSIGN_OR_RETURN(auto before, original.Numeric(eps_column));
  KEPS_ASSIGN_OR_RETURN(auto after, anonymised.Numeric(eps_column));
  return RelativeErrors(before, after, source_rows);
}

// Mean of RelativeErrors; 0 for an empty release.
inline absl::StatusOr<double> EmpiricalRelativeError(
    std::span<const double> before, std::span<const double> after,
    std::span<const std::size_t> source_rows) {
  KEPS_ASSIGN_OR_RETURN(auto errors,
                        RelativeErrors(before, after, source_rows));
  if (errors.empty()) return 0.0;
  double sum = 0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(errors.size());
}

inline absl::StatusOr<double> EmpiricalRelativeError(
    const Dataset& original, const Dataset& anonymised,
    std::span<const std::size_t> source_rows, std::string_view eps_column) {
  KEPS_ASSIGN_OR_RETURN(auto before, original.Numeric(eps_column));
  KEPS_ASSIGN_OR_RETURN(auto after, anonymised.Numeric(eps_column));
  return EmpiricalRelativeError(before, after, source_rows);
}

// Expected relative error of additive noise uniform on [-p|v|, +p|v|]: p/2
// for every record, whatever v is.
inline double UniformBaselineError(double p) { return p / 2.0; }

inline std::vector<double> UniformBaselineError(std::span<const double> values,
                                                double p) {
  return std::vector<double>(values.size(), UniformBaselineError(p));
}

// Relative errors of one draw of uniform +-p perturbation, for comparing
// error distributions against the Laplace mechanism.
inline std::vector<double> SampleUniformRelativeErrors(
    std::span<const double> values, double p, CounterRng& rng) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    const double noise = (2.0 * rng.UniformOpen() - 1.0) * p * std::fabs(v);
    out.push_back(v == 0.0 ? 0.0 : std::fabs(noise / v));
  }
  return out;
}

// Uniform perturbation fraction whose expected relative error equals
// `mean_error`.
inline double MatchingUniformFraction(double mean_error) {
  return 2.0 * mean_error;
}

struct LossReport {
  // Per k-quasi average precision loss, in quasi-column order. Categorical
  // precision for OLA, numerical precision for Mondrian.
  std::vector<std::pair<std::string, double>> quasi_loss;
  double expected_error = 0;  // size-weighted class errors
  std::optional<double> empirical_error;
  std::vector<ClassLoss> classes;
};

inline absl::StatusOr<LossReport> ComputeLossReport(
    const Partition& p, const Dataset& ds, const HierarchySet& hiers,
    std::string_view eps_column, double eps) {
  LossReport report;
  if (p.algorithm == KAnonAlgorithm::kOla && p.node) {
    for (std::size_t a = 0; a < p.quasi_columns.size(); ++a) {
      const auto it = hiers.find(p.quasi_columns[a]);
      double loss = 0;
      if (it != hiers.end() && it->second.levels() >= 2) {
        KEPS_ASSIGN_OR_RETURN(
            loss, CategoricalPrecisionLoss(p.node->levels[a],
                                           it->second.levels()));
      }
      report.quasi_loss.emplace_back(p.quasi_columns[a], loss);
    }
  } else if (!p.classes.empty()) {
    KEPS_ASSIGN_OR_RETURN(auto losses, MondrianPrecisionLoss(p));
    for (std::size_t a = 0; a < p.quasi_columns.size(); ++a) {
      report.quasi_loss.emplace_back(p.quasi_columns[a], losses[a]);
    }
  }
  KEPS_ASSIGN_OR_RETURN(report.classes, ClassBreakdown(p, ds, eps_column, eps));
  KEPS_ASSIGN_OR_RETURN(report.expected_error,
                        ExpectedDatasetError(p, ds, eps_column, eps));
  return report;
}

inline nlohmann::json LossReportToJson(const LossReport& r,
                                       bool include_classes = true) {
  nlohmann::json j;
  nlohmann::json quasi = nlohmann::json::object();
  for (const auto& [name, loss] : r.quasi_loss) quasi[name] = loss;
  j["quasi_precision_loss"] = std::move(quasi);
  j["expected_error"] = r.expected_error;
  j["empirical_error"] =
      r.empirical_error ? nlohmann::json(*r.empirical_error) : nlohmann::json();
  if (include_classes) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : r.classes) {
      classes.push_back({{"diam", c.diam},
                         {"harmonic_mean", c.harmonic_mean},
                         {"size", c.size},
                         {"expected_error", c.expected_error}});
    }
    j["classes"] = std::move(classes);
  }
  return j;
}

}  // namespace kepsilon

#endif  // KEPSILON_LOSS_METRICS_HPP_
