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

#include "kepsilon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include "stats.hpp"
#include "status_matchers.hpp"

namespace kepsilon {
namespace {

using ::kepsilon::testing::StatusIs;

AnthropometricModel OneBand(double hmean, double hsd, double wmu, double wsd) {
  std::vector<AnthropometricCell> cells;
  for (Gender g : {Gender::kMale, Gender::kFemale}) {
    cells.push_back({{20, 29}, g, SynthKind::kHeight, hmean, hsd});
    cells.push_back({{20, 29}, g, SynthKind::kWeight, wmu, wsd});
  }
  return *AnthropometricModel::Create(cells);
}

std::vector<double> Heights(const AnthropometricModel& m, std::size_t n,
                            std::uint64_t seed) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(DeriveSeed(seed, i));
    out.push_back(*GenerateHeight(25, Gender::kFemale, m, rng));
  }
  return out;
}

std::vector<double> Weights(const AnthropometricModel& m, std::size_t n,
                            std::uint64_t seed) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(DeriveSeed(seed, i));
    out.push_back(*GenerateWeight(25, Gender::kMale, m, rng));
  }
  return out;
}

TEST(GenerateHeightTest, DegenerateCellReturnsMean) {
  const auto m = OneBand(170.0, 0.0, 4.3, 0.0);
  for (double h : Heights(m, 20, 1)) EXPECT_EQ(h, 170.0);
  for (double w : Weights(m, 20, 1)) EXPECT_DOUBLE_EQ(w, std::exp(4.3));
}

TEST(GenerateHeightTest, SampleMeanMatchesCell) {
  const auto m = OneBand(162.8, 7.0, 4.3, 0.2);
  const auto h = Heights(m, 100'000, 2);
  EXPECT_NEAR(testing::Mean(h), 162.8, 162.8 * 0.005);
  EXPECT_NEAR(std::sqrt(testing::Variance(h)), 7.0, 0.1);
}

TEST(GenerateHeightTest, SeedsGiveDifferentValues) {
  const auto m = OneBand(170.0, 7.0, 4.3, 0.2);
  EXPECT_NE(Heights(m, 1, 1)[0], Heights(m, 1, 2)[0]);
  EXPECT_EQ(Heights(m, 5, 3), Heights(m, 5, 3));
}

TEST(GenerateHeightTest, MissingCellIsAnError) {
  const auto m = OneBand(170.0, 7.0, 4.3, 0.2);
  CounterRng rng(1);
  EXPECT_THAT(GenerateHeight(45, Gender::kMale, m, rng),
              StatusIs(absl::StatusCode::kNotFound));
  // Band upper bound is inclusive of the whole year.
  EXPECT_TRUE(GenerateHeight(29.9, Gender::kMale, m, rng).ok());
  EXPECT_FALSE(GenerateHeight(30, Gender::kMale, m, rng).ok());
}

TEST(GenerateWeightTest, PositiveWithLognormalMedianAndLogMoments) {
  const auto m = OneBand(170.0, 7.0, 4.4659, 0.19);
  auto w = Weights(m, 100'000, 4);
  EXPECT_TRUE(std::all_of(w.begin(), w.end(), [](double x) { return x > 0; }));
  std::vector<double> logs;
  for (double x : w) logs.push_back(std::log(x));
  EXPECT_NEAR(testing::Mean(logs), 4.4659, 0.01 * 4.4659);
  EXPECT_NEAR(testing::Variance(logs), 0.19 * 0.19, 0.01 * 0.19 * 0.19 * 3);
  std::nth_element(w.begin(), w.begin() + w.size() / 2, w.end());
  EXPECT_NEAR(w[w.size() / 2], std::exp(4.4659), 0.01 * std::exp(4.4659));
}

TEST(ModelTest, CreateValidates) {
  using C = AnthropometricCell;
  // Missing the female cell.
  EXPECT_FALSE(AnthropometricModel::Create(
                   {C{{20, 29}, Gender::kMale, SynthKind::kHeight, 170, 7}})
                   .ok());
  // Overlapping bands.
  EXPECT_FALSE(AnthropometricModel::Create(
                   {C{{20, 29}, Gender::kMale, SynthKind::kHeight, 170, 7},
                    C{{25, 35}, Gender::kMale, SynthKind::kHeight, 170, 7},
                    C{{20, 29}, Gender::kFemale, SynthKind::kHeight, 160, 7},
                    C{{25, 35}, Gender::kFemale, SynthKind::kHeight, 160, 7}})
                   .ok());
  // Negative scale.
  EXPECT_FALSE(AnthropometricModel::Create(
                   {C{{20, 29}, Gender::kMale, SynthKind::kHeight, 170, -1},
                    C{{20, 29}, Gender::kFemale, SynthKind::kHeight, 160, 7}})
                   .ok());
  EXPECT_FALSE(AnthropometricModel::Create({}).ok());
}

TEST(ModelTest, FromCsvValidates) {
  CsvTable good{{"age_band", "gender", "param1", "param2", "distribution"},
                {{"20-29", "male", "176", "7", "normal"},
                 {"20-29", "F", "163", "7", "normal"}}};
  ASSERT_OK_AND_ASSIGN(auto m, AnthropometricModel::FromCsv(good));
  EXPECT_EQ(m.cells().size(), 2u);

  auto bad = good;
  bad.rows[0][3] = "0";
  EXPECT_THAT(AnthropometricModel::FromCsv(bad),
              StatusIs(absl::StatusCode::kInvalidArgument, "row 1"));
  bad = good;
  bad.rows[1][4] = "gamma";
  EXPECT_THAT(AnthropometricModel::FromCsv(bad),
              StatusIs(absl::StatusCode::kInvalidArgument, "row 2"));
  bad = good;
  bad.rows[0][0] = "20";
  EXPECT_FALSE(AnthropometricModel::FromCsv(bad).ok());
  bad = good;
  bad.header[2] = "mean";
  EXPECT_FALSE(AnthropometricModel::FromCsv(bad).ok());
}

TEST(ModelTest, ShippedParameterFileMatchesBuiltInDefaults) {
  ASSERT_OK_AND_ASSIGN(auto file,
                       AnthropometricModel::Load(std::string(KEPSILON_SOURCE_DIR) +
                                                 "/data/anthropometric_defaults.csv"));
  const auto builtin = AnthropometricModel::PlausibleDefaults();
  ASSERT_EQ(file.cells().size(), builtin.cells().size());
  for (std::size_t i = 0; i < file.cells().size(); ++i) {
    const auto& a = file.cells()[i];
    const auto& b = builtin.cells()[i];
    EXPECT_EQ(a.band.lo, b.band.lo);
    EXPECT_EQ(a.band.hi, b.band.hi);
    EXPECT_EQ(a.gender, b.gender);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.location, b.location);
    EXPECT_EQ(a.scale, b.scale);
  }
}

TEST(ModelTest, DefaultsCoverAdultAges) {
  const auto m = AnthropometricModel::PlausibleDefaults();
  for (int age = 17; age <= 90; ++age) {
    for (Gender g : {Gender::kMale, Gender::kFemale}) {
      EXPECT_TRUE(m.Find(age, g, SynthKind::kHeight).ok()) << age;
      EXPECT_TRUE(m.Find(age, g, SynthKind::kWeight).ok()) << age;
    }
  }
}

TEST(ParseTest, GenderAndKind) {
  EXPECT_EQ(*ParseGender(" Male "), Gender::kMale);
  EXPECT_EQ(*ParseGender("f"), Gender::kFemale);
  EXPECT_EQ(*ParseGender("FEMALE"), Gender::kFemale);
  EXPECT_FALSE(ParseGender("other").ok());
  EXPECT_EQ(*ParseSynthKind("weight"), SynthKind::kWeight);
  EXPECT_FALSE(ParseSynthKind("bmi").ok());
}

Dataset People(std::size_t n) {
  Schema s = *Schema::Create(
      {{"age", ColumnKind::kNumeric}, {"sex", ColumnKind::kCategorical}});
  std::vector<double> age;
  std::vector<std::string> sex;
  for (std::size_t i = 0; i < n; ++i) {
    age.push_back(20 + static_cast<double>(i % 60));
    sex.push_back(i % 3 == 0 ? "Female" : "Male");
  }
  return *Dataset::Create(s, {age, sex});
}

TEST(AugmentTest, AppendsColumnAndPreservesRows) {
  const Dataset ds = People(50);
  const auto m = AnthropometricModel::PlausibleDefaults();
  ASSERT_OK_AND_ASSIGN(Dataset out,
                       AugmentDataset(ds, {"age", {}}, "sex", SynthKind::kHeight,
                                      m, 9, "height"));
  EXPECT_EQ(out.num_columns(), 3u);
  EXPECT_EQ(out.num_records(), 50u);
  auto age = *out.Numeric("age");
  auto in_age = *ds.Numeric("age");
  auto h = *out.Numeric("height");
  for (std::size_t r = 0; r < 50; ++r) {
    EXPECT_EQ(age[r], in_age[r]);
    CounterRng rng(DeriveSeed(9, r));
    const Gender g = r % 3 == 0 ? Gender::kFemale : Gender::kMale;
    EXPECT_EQ(h[r], *GenerateHeight(age[r], g, m, rng));
    EXPECT_GT(h[r], 0);
  }
}

TEST(AugmentTest, DeterministicUnderSeed) {
  const Dataset ds = People(200);
  const auto m = AnthropometricModel::PlausibleDefaults();
  auto a = *AugmentDataset(ds, {"age", {}}, "sex", SynthKind::kWeight, m, 4, "w");
  auto b = *AugmentDataset(ds, {"age", {}}, "sex", SynthKind::kWeight, m, 4, "w");
  auto c = *AugmentDataset(ds, {"age", {}}, "sex", SynthKind::kWeight, m, 5, "w");
  auto wa = *a.Numeric("w");
  auto wb = *b.Numeric("w");
  auto wc = *c.Numeric("w");
  EXPECT_TRUE(std::equal(wa.begin(), wa.end(), wb.begin(), wb.end()));
  EXPECT_FALSE(std::equal(wa.begin(), wa.end(), wc.begin(), wc.end()));
}

TEST(AugmentTest, PerBandMeansTrackCells) {
  const Dataset ds = People(60'000);
  const auto m = AnthropometricModel::PlausibleDefaults();
  auto out = *AugmentDataset(ds, {"age", {}}, "sex", SynthKind::kHeight, m, 1,
                             "height");
  auto age = *out.Numeric("age");
  auto h = *out.Numeric("height");
  auto sex = *out.Categorical("sex");
  for (int lo : {20, 30, 40, 50, 60, 70}) {
    std::vector<double> men;
    for (std::size_t r = 0; r < h.size(); ++r) {
      if (age[r] >= lo && age[r] < lo + 10 && sex[r] == "Male") {
        men.push_back(h[r]);
      }
    }
    const auto cell = *m.Find(lo, Gender::kMale, SynthKind::kHeight);
    EXPECT_NEAR(testing::Mean(men), cell.location, 4 * cell.scale /
                                                       std::sqrt(men.size()))
        << lo;
  }
}

TEST(AugmentTest, YearOfBirthAndErrors) {
  Schema s = *Schema::Create(
      {{"yob", ColumnKind::kNumeric}, {"sex", ColumnKind::kCategorical}});
  Dataset ds = *Dataset::Create(s, {std::vector<double>{1970, 1990},
                                    std::vector<std::string>{"M", "x"}});
  const auto m = AnthropometricModel::PlausibleDefaults();
  EXPECT_THAT(AugmentDataset(ds, {"yob", 1994.0}, "sex", SynthKind::kHeight, m,
                             1, "h"),
              StatusIs(absl::StatusCode::kInvalidArgument, "row 2"));
  // Year of birth 1990 at reference year 1994 is age 4: no cell.
  Dataset young = *Dataset::Create(s, {std::vector<double>{1970, 1990},
                                       std::vector<std::string>{"M", "F"}});
  EXPECT_THAT(AugmentDataset(young, {"yob", 1994.0}, "sex", SynthKind::kHeight,
                             m, 1, "h"),
              StatusIs(absl::StatusCode::kNotFound, "row 2"));
  EXPECT_FALSE(AugmentDataset(young, {"age", {}}, "sex", SynthKind::kHeight, m,
                              1, "h")
                   .ok());
}

}  // namespace
}  // namespace kepsilon
