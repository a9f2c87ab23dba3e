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


#include "kepsilon/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include "status_matchers.hpp"

namespace kepsilon {
namespace {

using ::kepsilon::testing::StatusIs;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

const std::string kExample =
    std::string(KEPSILON_SOURCE_DIR) + "/docs/example_config.yaml";

RunConfig Example() {
  auto cfg = LoadRunConfig(kExample);
  EXPECT_OK(cfg.status());
  return *cfg;
}

std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("kepsilon_pipeline_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(PipelineTest, RecordTotalsAndReleaseShape) {
  const RunConfig cfg = Example();
  ASSERT_OK_AND_ASSIGN(PreparedInput in, PrepareInput(cfg));
  ASSERT_OK_AND_ASSIGN(PipelineResult res,
                       RunPipeline(in, RunParams::FromConfig(cfg)));
  const auto& rep = res.report;
  EXPECT_EQ(rep.input_records, 400u);
  EXPECT_EQ(rep.k_suppressed + rep.confidence_suppressed + rep.released,
            rep.input_records);
  EXPECT_EQ(res.published.num_records(), rep.released);
  EXPECT_EQ(res.linkage.size(), rep.released);
  EXPECT_EQ(rep.runs.size(), 10u);
  EXPECT_FALSE(res.published.schema().IndexOf("patient_id").has_value());
  EXPECT_FALSE(res.published.schema().IndexOf("name").has_value());
  EXPECT_TRUE(res.published.schema().IndexOf("height").has_value());

  // Each released row comes from a distinct retained record and carries its
  // class key.
  const auto class_of = rep.partition.ClassOfRecord();
  std::set<std::size_t> seen;
  ASSERT_OK_AND_ASSIGN(auto zip_col, res.published.ColumnIndex("zip"));
  for (std::size_t i = 0; i < res.linkage.size(); ++i) {
    const std::size_t src = res.linkage[i];
    EXPECT_TRUE(seen.insert(src).second);
    ASSERT_TRUE(class_of[src].has_value());
    const auto& key = rep.partition.classes[*class_of[src]].key;
    const auto& qs = rep.partition.quasi_columns;
    const auto pos = std::find(qs.begin(), qs.end(), "zip") - qs.begin();
    EXPECT_EQ(res.published.CellText(i, zip_col), key[pos]);
  }
}

TEST(PipelineTest, HugeEpsLinksEveryRecord) {
  RunConfig cfg = Example();
  cfg.eps = 1e6;
  cfg.confidence.reset();
  cfg.runs = 3;
  ASSERT_OK_AND_ASSIGN(PipelineResult res, RunPipeline(cfg));
  EXPECT_NEAR(res.report.risk.mean, 1.0, 1e-12);
  EXPECT_LT(res.report.empirical_error.mean, 1e-5);
}

TEST(PipelineTest, DeterministicOutputs) {
  const RunConfig cfg = Example();
  ASSERT_OK_AND_ASSIGN(PipelineResult a, RunPipeline(cfg));
  ASSERT_OK_AND_ASSIGN(PipelineResult b, RunPipeline(cfg));
  const auto da = TempDir("det_a"), db = TempDir("det_b");
  ASSERT_OK(WritePipelineOutputs(a, da, true));
  ASSERT_OK(WritePipelineOutputs(b, db, true));
  EXPECT_EQ(Slurp(da / kAnonymisedFile), Slurp(db / kAnonymisedFile));
  EXPECT_EQ(Slurp(da / kLinkageFile), Slurp(db / kLinkageFile));
  EXPECT_EQ(a.report.risk.mean, b.report.risk.mean);

  RunConfig other = cfg;
  other.seed = cfg.seed + 1;
  ASSERT_OK_AND_ASSIGN(PipelineResult c, RunPipeline(other));
  const auto dc = TempDir("det_c");
  ASSERT_OK(WritePipelineOutputs(c, dc, false));
  EXPECT_NE(Slurp(da / kAnonymisedFile), Slurp(dc / kAnonymisedFile));
  EXPECT_FALSE(std::filesystem::exists(dc / kLinkageFile));
}

TEST(PipelineTest, ThreadCountDoesNotChangeResults) {
  RunConfig cfg = Example();
  cfg.threads = 1;
  ASSERT_OK_AND_ASSIGN(PipelineResult a, RunPipeline(cfg));
  cfg.threads = 4;
  ASSERT_OK_AND_ASSIGN(PipelineResult b, RunPipeline(cfg));
  ASSERT_EQ(a.report.runs.size(), b.report.runs.size());
  for (std::size_t r = 0; r < a.report.runs.size(); ++r) {
    EXPECT_EQ(a.report.runs[r].empirical_error, b.report.runs[r].empirical_error);
    EXPECT_EQ(a.report.runs[r].risk, b.report.runs[r].risk);
  }
}

TEST(PipelineTest, ReportJson) {
  ASSERT_OK_AND_ASSIGN(PipelineResult res, RunPipeline(Example()));
  const auto j = res.report.ToJson();
  EXPECT_TRUE(j.contains("config"));
  EXPECT_EQ(j.dump().find("Patient 0"), std::string::npos);
  EXPECT_EQ(j.dump().find("P1000"), std::string::npos);
}

TEST(PipelineTest, EvaluateMatchesRunZero) {
  RunConfig cfg = Example();
  cfg.confidence.reset();
  ASSERT_OK_AND_ASSIGN(PreparedInput in, PrepareInput(cfg));
  ASSERT_OK_AND_ASSIGN(PipelineResult res,
                       RunPipeline(in, RunParams::FromConfig(cfg)));
  ASSERT_OK_AND_ASSIGN(Schema pub, PublishedSchema(cfg));
  ASSERT_OK_AND_ASSIGN(auto cls, ClassificationFor(cfg, pub));
  ASSERT_OK_AND_ASSIGN(auto ev, EvaluateRelease(in.data, res.published,
                                                res.linkage, cls, cfg.eps,
                                                std::nullopt, cfg.k));
  EXPECT_NEAR(ev.empirical_error, res.report.runs[0].empirical_error, 1e-12);
  EXPECT_NEAR(ev.link.risk, res.report.runs[0].risk, 1e-12);
  EXPECT_NEAR(ev.expected_error, res.report.loss.expected_error, 1e-12);
}

TEST(PipelineTest, EvaluateIdenticalTablesHasZeroError) {
  const RunConfig cfg = Example();
  ASSERT_OK_AND_ASSIGN(PreparedInput in, PrepareInput(cfg));
  ASSERT_OK_AND_ASSIGN(auto ev, EvaluateRelease(in.data, in.data, std::nullopt,
                                                in.cls, cfg.eps, 0.9, cfg.k));
  EXPECT_EQ(ev.empirical_error, 0.0);
  EXPECT_EQ(ev.link.retained, 400u);
  ASSERT_TRUE(ev.confidence.has_value());
}

TEST(PipelineTest, EvaluateRejectsBadLinkage) {
  const RunConfig cfg = Example();
  ASSERT_OK_AND_ASSIGN(PreparedInput in, PrepareInput(cfg));
  std::vector<std::size_t> dup(in.data.num_records(), 0);
  EXPECT_THAT(EvaluateRelease(in.data, in.data, dup, in.cls, 1, std::nullopt, 2),
              StatusIs(absl::StatusCode::kInvalidArgument, "linkage"));
  auto fewer = in.data.SelectRows(std::vector<std::size_t>{0, 1, 2});
  EXPECT_THAT(
      EvaluateRelease(in.data, fewer, std::nullopt, in.cls, 1, std::nullopt, 2),
      StatusIs(absl::StatusCode::kInvalidArgument, "linkage"));
}

absl::StatusOr<CsvTable> ParseCsv(const std::string& text) {
  KEPS_ASSIGN_OR_RETURN(auto records, ParseCsvRecords(text));
  CsvTable t;
  t.header = records.front();
  t.rows.assign(records.begin() + 1, records.end());
  return t;
}

TEST(PipelineTest, LinkageRoundTrip) {
  const std::vector<std::size_t> link = {4, 0, 7, 2};
  const std::string text = LinkageToCsv(link);
  EXPECT_EQ(text, "published_row,source_row\n0,4\n1,0\n2,7\n3,2\n");
  ASSERT_OK_AND_ASSIGN(CsvTable t, ParseCsv(text));
  ASSERT_OK_AND_ASSIGN(auto back, LinkageFromCsv(t));
  EXPECT_EQ(back, link);
  ASSERT_OK_AND_ASSIGN(CsvTable dup,
                       ParseCsv("published_row,source_row\n0,1\n0,2\n"));
  EXPECT_FALSE(LinkageFromCsv(dup).ok());
  ASSERT_OK_AND_ASSIGN(CsvTable hdr, ParseCsv("a,b\n0,1\n"));
  EXPECT_FALSE(LinkageFromCsv(hdr).ok());
}

TEST(PipelineTest, GridCoversDefaultCells) {
  RunConfig cfg = Example();
  cfg.confidence.reset();
  ASSERT_OK_AND_ASSIGN(PreparedInput in, PrepareInput(cfg));
  RunParams base = RunParams::FromConfig(cfg);
  base.runs = 2;
  ASSERT_OK_AND_ASSIGN(auto rows,
                       RunGrid(in, base, DefaultGridK(), DefaultGridEps()));
  ASSERT_EQ(rows.size(), 42u);
  for (const auto& row : rows) {
    EXPECT_GE(row.risk.mean, 0.0);
    EXPECT_LE(row.risk.mean, 1.0);
    EXPECT_GE(row.k_suppression, 0.0);
  }
  // Within a k, expected error scales exactly as 1/eps.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].k != rows[0].k) continue;
    EXPECT_NEAR(rows[i].expected_error * rows[i].eps,
                rows[0].expected_error * rows[0].eps,
                1e-12 * rows[0].expected_error * rows[0].eps);
  }
  const std::string csv = GridToCsv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 43);
}

TEST(PipelineTest, MondrianExpectedErrorGrowsWithK) {
  RunConfig cfg = Example();
  cfg.algorithm = KAnonAlgorithm::kMondrian;
  cfg.confidence.reset();
  ASSERT_OK_AND_ASSIGN(PreparedInput in, PrepareInput(cfg));
  ASSERT_OK_AND_ASSIGN(auto rows, RunGrid(in, RunParams::FromConfig(cfg),
                                          DefaultGridK(),
                                          std::vector<double>{1.0}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].expected_error, rows[i - 1].expected_error)
        << "k=" << rows[i].k;
  }
}

TEST(PipelineTest, GridMatchesSinglePipelineRun) {
  RunConfig cfg = Example();
  cfg.confidence.reset();
  cfg.runs = 3;
  ASSERT_OK_AND_ASSIGN(PreparedInput in, PrepareInput(cfg));
  const RunParams base = RunParams::FromConfig(cfg);
  ASSERT_OK_AND_ASSIGN(auto rows, RunGrid(in, base, std::vector<int>{cfg.k},
                                             std::vector<double>{cfg.eps}));
  ASSERT_OK_AND_ASSIGN(PipelineResult res, RunPipeline(in, base));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].risk.mean, res.report.risk.mean, 1e-12);
  EXPECT_NEAR(rows[0].empirical_error.mean, res.report.empirical_error.mean,
              1e-12);
}

TEST(PipelineTest, StageErrorsAreAnnotated) {
  RunConfig cfg = Example();
  cfg.input = "/nonexistent/input.csv";
  EXPECT_THAT(RunPipeline(cfg).status().message(), HasSubstr("load"));
  cfg = Example();
  cfg.columns[2].hierarchy = "builtin:nope";
  EXPECT_THAT(RunPipeline(cfg).status().message(), HasSubstr("hierarchy:zip"));
}

// End-to-end checks of the command-line tool.
class CliTest : public ::testing::Test {
 protected:
  int Run(const std::string& args) {
    const std::string cmd = std::string(KEPSILON_CLI) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  std::string Output() { return Slurp(dir_ / "stdout.txt"); }

  void SetUp() override {
    dir_ = TempDir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path dir_;
};

TEST_F(CliTest, Anonymise) {
  ASSERT_EQ(Run("anonymise --config " + kExample + " --keep-linkage --out " +
                (dir_ / "o").string()),
            0)
      << Output();
  EXPECT_THAT(Output(), HasSubstr("released"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "o" / kAnonymisedFile));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "o" / kReportFile));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "o" / kLinkageFile));
  const std::string csv = Slurp(dir_ / "o" / kAnonymisedFile);
  EXPECT_EQ(csv.find("patient_id"), std::string::npos);
  EXPECT_EQ(csv.rfind("zip,year_of_birth,gender,", 0), 0u);

  // The CLI output equals the library result for the same config.
  RunConfig cfg = Example();
  ASSERT_OK_AND_ASSIGN(PipelineResult res, RunPipeline(cfg));
  ASSERT_OK(WritePipelineOutputs(res, dir_ / "lib", false));
  EXPECT_EQ(csv, Slurp(dir_ / "lib" / kAnonymisedFile));
}

TEST_F(CliTest, SeedOverride) {
  ASSERT_EQ(Run("anonymise --config " + kExample + " --seed 1 --out " +
                (dir_ / "a").string()),
            0);
  ASSERT_EQ(Run("anonymise --config " + kExample + " --seed 2 --out " +
                (dir_ / "b").string()),
            0);
  EXPECT_NE(Slurp(dir_ / "a" / kAnonymisedFile),
            Slurp(dir_ / "b" / kAnonymisedFile));
}

TEST_F(CliTest, GridAndEvaluate) {
  ASSERT_EQ(Run("grid --config " + kExample + " --k 2,5 --eps 1,4 --runs 2 "
                "--out " + dir_.string()),
            0)
      << Output();
  const std::string grid = Slurp(dir_ / "grid.csv");
  EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 5);

  ASSERT_EQ(Run("anonymise --config " + kExample + " --keep-linkage --out " +
                dir_.string()),
            0);
  ASSERT_EQ(Run("evaluate --config " + kExample + " --out " + dir_.string() +
                " --anonymised " + (dir_ / kAnonymisedFile).string() +
                " --linkage " + (dir_ / kLinkageFile).string()),
            0)
      << Output();
  EXPECT_THAT(Output(), HasSubstr("risk"));
  const auto j = nlohmann::json::parse(Slurp(dir_ / "evaluation.json"));
  EXPECT_GT(j["empirical_error"].get<double>(), 0.0);
}

TEST_F(CliTest, Synth) {
  const std::string input =
      std::string(KEPSILON_SOURCE_DIR) + "/data/sample_records.csv";
  ASSERT_EQ(Run("synth --input " + input +
                " --kind weight --age-column year_of_birth --reference-year "
                "2020 --gender-column gender --parameters defaults --seed 3 "
                "--out " + dir_.string()),
            0)
      << Output();
  ASSERT_OK_AND_ASSIGN(CsvTable t, ReadCsv(dir_ / "augmented.csv"));
  EXPECT_EQ(t.rows.size(), 400u);
  EXPECT_EQ(t.header.back(), "weight");
  EXPECT_EQ(Run("synth --input " + input + " --out " + dir_.string()), 1);
  EXPECT_THAT(Output(), HasSubstr("error:"));
}

TEST_F(CliTest, Hierarchies) {
  ASSERT_EQ(Run("hierarchies --config " + kExample + " --out " + dir_.string()),
            0)
      << Output();
  EXPECT_THAT(Output(), HasSubstr("builtin:zip"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "gender.csv"));
  EXPECT_EQ(Run("hierarchies --validate /nonexistent.csv"), 1);
}

TEST_F(CliTest, ErrorsExitNonZero) {
  EXPECT_NE(Run(""), 0);
  EXPECT_EQ(Run("anonymise --config /nonexistent.yaml"), 1);
  EXPECT_THAT(Output(), HasSubstr("error:"));
  const auto bad = dir_ / "bad.yaml";
  std::ofstream(bad) << "input: x.csv\nk: 1\ncolumns:\n"
                        "  - {name: q, role: k_quasi}\n";
  EXPECT_EQ(Run("anonymise --config " + bad.string()), 1);
  EXPECT_THAT(Output(), HasSubstr("k=1"));
}

}  // namespace
}  // namespace kepsilon
