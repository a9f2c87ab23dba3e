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

// Synthetic anthropometric columns conditioned on age and gender: height from
// a normal distribution and weight from a log-normal distribution, one
// parameter cell per (age band, gender).

#ifndef KEPSILON_SYNTH_HPP_
#define KEPSILON_SYNTH_HPP_

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "kepsilon/csv.hpp"
#include "kepsilon/dataset.hpp"
#include "kepsilon/rng.hpp"
#include "kepsilon/status.hpp"

namespace kepsilon {

enum class Gender { kMale, kFemale };
enum class SynthKind { kHeight, kWeight };

inline absl::StatusOr<Gender> ParseGender(std::string_view text) {
  const std::string g = absl::AsciiStrToLower(std::string(TrimSpaces(text)));
  if (g == "male" || g == "m") return Gender::kMale;
  if (g == "female" || g == "f") return Gender::kFemale;
  return absl::InvalidArgumentError(
      StrCat("unrecognised gender '", text, "'"));
}

inline absl::StatusOr<SynthKind> ParseSynthKind(std::string_view text) {
  if (text == "height") return SynthKind::kHeight;
  if (text == "weight") return SynthKind::kWeight;
  return absl::InvalidArgumentError(
      StrCat("unknown synthetic kind '", text, "' (height|weight)"));
}

struct AgeBand {
  int lo = 0;  // inclusive
  int hi = 0;  // inclusive
};

// Height cells are normal(mean cm, sd cm); weight cells are
// lognormal(mean of log kg, sd of log kg).
struct AnthropometricCell {
  AgeBand band;
  Gender gender = Gender::kMale;
  SynthKind kind = SynthKind::kHeight;
  double location = 0;
  double scale = 0;
};

// Plausible adult reference values for a US-like population. These are
// illustrative defaults for demos and tests, not fitted survey estimates;
// supply a parameter file for anything else.
inline constexpr std::string_view kPlausibleAnthropometricDefaults =
    R"(age_band,gender,param1,param2,distribution
10-19,male,174.0,7.6,normal
20-29,male,176.4,7.4,normal
30-39,male,176.5,7.5,normal
40-49,male,176.2,7.4,normal
50-59,male,175.5,7.3,normal
60-69,male,174.4,7.2,normal
70-79,male,172.6,7.0,normal
80-89,male,170.4,6.9,normal
90-99,male,168.9,6.9,normal
10-19,female,161.9,6.8,normal
20-29,female,162.8,7.0,normal
30-39,female,162.9,7.1,normal
40-49,female,162.6,7.0,normal
50-59,female,161.9,6.9,normal
60-69,female,160.5,6.8,normal
70-79,female,158.4,6.7,normal
80-89,female,155.9,6.6,normal
90-99,female,154.3,6.6,normal
10-19,male,4.2485,0.20,lognormal
20-29,male,4.4067,0.19,lognormal
30-39,male,4.4659,0.19,lognormal
40-49,male,4.4886,0.19,lognormal
50-59,male,4.4886,0.19,lognormal
60-69,male,4.4773,0.18,lognormal
70-79,male,4.4308,0.18,lognormal
80-89,male,4.3438,0.18,lognormal
90-99,male,4.2767,0.18,lognormal
10-19,female,4.0943,0.23,lognormal
20-29,female,4.2195,0.23,lognormal
30-39,female,4.2767,0.23,lognormal
40-49,female,4.3041,0.23,lognormal
50-59,female,4.3175,0.22,lognormal
60-69,female,4.3041,0.22,lognormal
70-79,female,4.2485,0.21,lognormal
80-89,female,4.1589,0.21,lognormal
90-99,female,4.0943,0.21,lognormal
)";

class AnthropometricModel {
 public:
  // Scales may be zero (degenerate cells); bands of one (gender, kind) must
  // not overlap, and every band present for a kind must cover both genders.
  static absl::StatusOr<AnthropometricModel> Create(
      std::vector<AnthropometricCell> cells) {
    if (cells.empty()) {
      return absl::InvalidArgumentError("anthropometric model has no cells");
    }
    std::set<std::tuple<int, int, int, int>> present;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if (c.band.lo > c.band.hi) {
        return absl::InvalidArgumentError(
            StrCat("cell ", i + 1, ": empty age band"));
      }
      if (!(c.scale >= 0) || !std::isfinite(c.location)) {
        return absl::InvalidArgumentError(
            StrCat("cell ", i + 1, ": invalid parameters"));
      }
      for (std::size_t j = 0; j < i; ++j) {
        const auto& o = cells[j];
        if (o.gender == c.gender && o.kind == c.kind && o.band.lo <= c.band.hi &&
            c.band.lo <= o.band.hi) {
          return absl::InvalidArgumentError(StrCat(
              "cell ", i + 1, " overlaps the age band of cell ", j + 1));
        }
      }
      present.emplace(c.band.lo, c.band.hi, static_cast<int>(c.kind),
                      static_cast<int>(c.gender));
    }
    for (const auto& [lo, hi, kind, gender] : present) {
      if (!present.count({lo, hi, kind, 1 - gender})) {
        return absl::InvalidArgumentError(StrCat(
            "age band ", lo, "-", hi, " lacks a cell for the other gender"));
      }
    }
    AnthropometricModel m;
    m.cells_ = std::move(cells);
    return m;
  }

  // Parameter table with columns age_band (lo-hi), gender, param1, param2,
  // distribution (normal for height, lognormal for weight). Scales must be
  // strictly positive.
  static absl::StatusOr<AnthropometricModel> FromCsv(const CsvTable& table) {
    const std::vector<std::string> expected = {"age_band", "gender", "param1",
                                               "param2", "distribution"};
    if (table.header != expected) {
      return absl::InvalidArgumentError(
          "parameter file header must be "
          "age_band,gender,param1,param2,distribution");
    }
    std::vector<AnthropometricCell> cells;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      auto fail = [&](std::string_view what) {
        return absl::InvalidArgumentError(
            StrCat("parameter row ", r + 1, ": ", what));
      };
      if (row.size() != expected.size()) return fail("wrong field count");
      AnthropometricCell cell;
      std::vector<std::string> band = absl::StrSplit(row[0], '-');
      if (band.size() != 2 || !absl::SimpleAtoi(band[0], &cell.band.lo) ||
          !absl::SimpleAtoi(band[1], &cell.band.hi)) {
        return fail(StrCat("bad age band '", row[0], "'"));
      }
      auto g = ParseGender(row[1]);
      if (!g.ok()) return fail(std::string(g.status().message()));
      cell.gender = *g;
      if (!ParseFiniteDouble(row[2], cell.location) ||
          !ParseFiniteDouble(row[3], cell.scale)) {
        return fail("non-numeric parameter");
      }
      if (!(cell.scale > 0)) return fail("scale must be > 0");
      if (row[4] == "normal") {
        cell.kind = SynthKind::kHeight;
      } else if (row[4] == "lognormal") {
        cell.kind = SynthKind::kWeight;
      } else {
        return fail(StrCat("unknown distribution '", row[4], "'"));
      }
      cells.push_back(cell);
    }
    return Create(std::move(cells));
  }

  static absl::StatusOr<AnthropometricModel> Load(
      const std::filesystem::path& path) {
    KEPS_ASSIGN_OR_RETURN(CsvTable table, ReadCsv(path));
    return FromCsv(table);
  }

  // Illustrative defaults (see kPlausibleAnthropometricDefaults). Callers opt
  // in explicitly; nothing in the library falls back to these silently.
  static AnthropometricModel PlausibleDefaults() {
    return *FromCsv(ParseCsvText(kPlausibleAnthropometricDefaults));
  }

  absl::StatusOr<AnthropometricCell> Find(double age, Gender gender,
                                          SynthKind kind) const {
    for (const auto& c : cells_) {
      if (c.gender == gender && c.kind == kind && age >= c.band.lo &&
          age < c.band.hi + 1) {
        return c;
      }
    }
    return absl::NotFoundError(StrCat(
        "no ", kind == SynthKind::kHeight ? "height" : "weight",
        " parameters for age ", age, " and gender ",
        gender == Gender::kMale ? "male" : "female"));
  }

  const std::vector<AnthropometricCell>& cells() const { return cells_; }

 private:
  static CsvTable ParseCsvText(std::string_view text) {
    auto records = *ParseCsvRecords(text);
    CsvTable t;
    t.header = records.front();
    t.rows.assign(records.begin() + 1, records.end());
    return t;
  }

  std::vector<AnthropometricCell> cells_;
};

// One normal draw from the (age band, gender) height cell. Non-positive draws
// are redrawn so the column stays strictly positive.
inline absl::StatusOr<double> GenerateHeight(double age, Gender gender,
                                             const AnthropometricModel& model,
                                             CounterRng& rng) {
  KEPS_ASSIGN_OR_RETURN(auto cell, model.Find(age, gender, SynthKind::kHeight));
  if (!(cell.location > 0)) {
    return absl::InvalidArgumentError("height cell mean must be positive");
  }
  while (true) {
    const double v = cell.location + cell.scale * rng.StandardNormal();
    if (v > 0) return v;
  }
}

// exp of one normal draw in log space from the weight cell.
inline absl::StatusOr<double> GenerateWeight(double age, Gender gender,
                                             const AnthropometricModel& model,
                                             CounterRng& rng) {
  KEPS_ASSIGN_OR_RETURN(auto cell, model.Find(age, gender, SynthKind::kWeight));
  return std::exp(cell.location + cell.scale * rng.StandardNormal());
}

// Where a record's age comes from: the column itself, or reference_year minus
// the column when it holds a year of birth.
struct AgeSource {
  std::string column;
  std::optional<double> reference_year;
};

// Appends `new_column` with one draw per record. Record r uses the stream
// CounterRng(DeriveSeed(seed, r)).
inline absl::StatusOr<Dataset> AugmentDataset(const Dataset& ds,
                                              const AgeSource& age_source,
                                              std::string_view gender_column,
                                              SynthKind kind,
                                              const AnthropometricModel& model,
                                              std::uint64_t seed,
                                              std::string new_column) {
  KEPS_ASSIGN_OR_RETURN(std::size_t age_col, ds.ColumnIndex(age_source.column));
  KEPS_ASSIGN_OR_RETURN(std::size_t gender_col, ds.ColumnIndex(gender_column));
  std::vector<double> generated;
  generated.reserve(ds.num_records());
  for (std::size_t r = 0; r < ds.num_records(); ++r) {
    double age;
    const std::string age_text = ds.CellText(r, age_col);
    if (!ParseFiniteDouble(age_text, age)) {
      return absl::InvalidArgumentError(
          StrCat("row ", r + 1, ": cannot parse age '", age_text, "'"));
    }
    if (age_source.reference_year) age = *age_source.reference_year - age;
    auto gender = ParseGender(ds.CellText(r, gender_col));
    if (!gender.ok()) {
      return absl::InvalidArgumentError(
          StrCat("row ", r + 1, ": ", gender.status().message()));
    }
    CounterRng rng(DeriveSeed(seed, r));
    auto value = kind == SynthKind::kHeight
                     ? GenerateHeight(age, *gender, model, rng)
                     : GenerateWeight(age, *gender, model, rng);
    if (!value.ok()) {
      return absl::Status(value.status().code(),
                          StrCat("row ", r + 1, ": ",
                                       value.status().message()));
    }
    generated.push_back(*value);
  }
  return ds.WithColumn({std::move(new_column), ColumnKind::kNumeric},
                       std::move(generated));
}

}  // namespace kepsilon

#endif  // KEPSILON_SYNTH_HPP_
