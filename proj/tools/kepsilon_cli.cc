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

// kepsilon command line: anonymise, grid, synth, evaluate, hierarchies.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "kepsilon/kepsilon.hpp"

namespace kepsilon {
namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void AddCommon(CLI::App* cmd, CommonOptions& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config, "YAML run configuration");
  if (config_required) c->required();
  cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", opts.out, "Output directory (overrides the config)");
}

absl::StatusOr<RunConfig> LoadConfig(const CommonOptions& opts) {
  KEPS_ASSIGN_OR_RETURN(RunConfig cfg,
                        AnnotateStage(LoadRunConfig(opts.config), "config"));
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out.empty()) cfg.output_dir = opts.out;
  return cfg;
}

absl::Status EnsureDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        StrCat("[output] cannot create ", dir.string(), ": ", ec.message()));
  }
  return absl::OkStatus();
}

absl::Status Anonymise(const CommonOptions& opts, bool keep_linkage) {
  KEPS_ASSIGN_OR_RETURN(RunConfig cfg, LoadConfig(opts));
  KEPS_ASSIGN_OR_RETURN(PipelineResult result, RunPipeline(cfg));
  KEPS_RETURN_IF_ERROR(AnnotateStage(
      WritePipelineOutputs(result, cfg.output_dir, keep_linkage), "output"));
  const auto& rep = result.report;
  std::cout << "released " << rep.released << " of " << rep.input_records
            << " records (" << rep.k_suppressed << " k-suppressed, "
            << rep.confidence_suppressed << " confidence-suppressed), "
            << rep.partition.classes.size() << " classes\n"
            << "expected error " << rep.loss.expected_error
            << ", empirical error " << rep.empirical_error.mean << ", risk "
            << rep.risk.mean << " (" << rep.runs.size() << " runs)\n"
            << "wrote " << (cfg.output_dir / kAnonymisedFile).string() << " and "
            << (cfg.output_dir / kReportFile).string() << "\n";
  if (keep_linkage) {
    std::cout << "wrote " << (cfg.output_dir / kLinkageFile).string()
              << " (evaluation only; do not publish)\n";
  }
  return absl::OkStatus();
}

absl::Status Grid(const CommonOptions& opts, std::vector<int> ks,
                  std::vector<double> epss, std::optional<int> runs) {
  KEPS_ASSIGN_OR_RETURN(RunConfig cfg, LoadConfig(opts));
  if (runs) cfg.runs = *runs;
  if (ks.empty()) ks = cfg.grid_k.empty() ? DefaultGridK() : cfg.grid_k;
  if (epss.empty()) epss = cfg.grid_eps.empty() ? DefaultGridEps() : cfg.grid_eps;
  cfg.grid_k = ks;
  cfg.grid_eps = epss;
  KEPS_RETURN_IF_ERROR(AnnotateStage(cfg.Validate(), "config"));
  KEPS_ASSIGN_OR_RETURN(PreparedInput in, PrepareInput(cfg));
  KEPS_ASSIGN_OR_RETURN(auto rows,
                        RunGrid(in, RunParams::FromConfig(cfg), ks, epss));
  KEPS_RETURN_IF_ERROR(EnsureDir(cfg.output_dir));
  const auto path = cfg.output_dir / "grid.csv";
  KEPS_RETURN_IF_ERROR(
      AnnotateStage(WriteStringToFile(path, GridToCsv(rows)), "output"));
  std::cout << "wrote " << rows.size() << " rows to " << path.string() << "\n";
  return absl::OkStatus();
}

struct SynthFlags {
  std::string input;
  std::string kind = "height";
  std::string column;
  std::string age_column;
  std::optional<double> reference_year;
  std::string gender_column;
  std::string parameters;
};

absl::Status Synth(const CommonOptions& opts, const SynthFlags& flags) {
  Dataset ds;
  SynthConfig sc;
  std::uint64_t seed = opts.seed.value_or(0);
  std::filesystem::path out_dir = opts.out.empty() ? "." : opts.out;
  if (!opts.config.empty()) {
    KEPS_ASSIGN_OR_RETURN(RunConfig cfg, LoadConfig(opts));
    if (!cfg.synth) {
      return absl::InvalidArgumentError("[config] no synth section");
    }
    sc = *cfg.synth;
    seed = cfg.seed;
    out_dir = cfg.output_dir;
    KEPS_ASSIGN_OR_RETURN(Schema schema,
                          AnnotateStage(InputSchema(cfg), "config"));
    KEPS_ASSIGN_OR_RETURN(ds, AnnotateStage(LoadCsv(cfg.input, schema), "load"));
  } else {
    if (flags.input.empty() || flags.age_column.empty() ||
        flags.gender_column.empty() || flags.parameters.empty()) {
      return absl::InvalidArgumentError(
          "[cli] synth needs --config, or --input, --age-column, "
          "--gender-column and --parameters");
    }
    KEPS_ASSIGN_OR_RETURN(sc.kind,
                          AnnotateStage(ParseSynthKind(flags.kind), "cli"));
    sc.column = flags.column.empty() ? flags.kind : flags.column;
    sc.age_column = flags.age_column;
    sc.reference_year = flags.reference_year;
    sc.gender_column = flags.gender_column;
    sc.parameters = flags.parameters;
    // Without a config every input column is read as text.
    KEPS_ASSIGN_OR_RETURN(CsvTable table,
                          AnnotateStage(ReadCsv(flags.input), "load"));
    std::vector<ColumnSpec> specs;
    for (const auto& name : table.header) {
      specs.push_back({name, ColumnKind::kCategorical});
    }
    KEPS_ASSIGN_OR_RETURN(Schema schema,
                          AnnotateStage(Schema::Create(specs), "load"));
    KEPS_ASSIGN_OR_RETURN(ds,
                          AnnotateStage(DatasetFromCsv(table, schema), "load"));
  }
  KEPS_ASSIGN_OR_RETURN(auto model,
                        AnnotateStage(ResolveSynthModel(sc), "synth"));
  KEPS_ASSIGN_OR_RETURN(
      Dataset augmented,
      AnnotateStage(AugmentDataset(ds, {sc.age_column, sc.reference_year},
                                   sc.gender_column, sc.kind, model,
                                   DeriveSeed(seed, kSynthStream), sc.column),
                    "synth"));
  KEPS_RETURN_IF_ERROR(EnsureDir(out_dir));
  const auto path = out_dir / "augmented.csv";
  KEPS_RETURN_IF_ERROR(AnnotateStage(WriteCsv(augmented, path), "output"));
  std::cout << "wrote " << augmented.num_records() << " records to "
            << path.string() << "\n";
  return absl::OkStatus();
}

absl::Status Evaluate(const CommonOptions& opts, const std::string& original,
                      const std::string& anonymised,
                      const std::string& linkage_path) {
  KEPS_ASSIGN_OR_RETURN(RunConfig cfg, LoadConfig(opts));
  if (!original.empty()) cfg.input = original;
  KEPS_ASSIGN_OR_RETURN(PreparedInput in, PrepareInput(cfg));
  KEPS_ASSIGN_OR_RETURN(Schema pub_schema,
                        AnnotateStage(PublishedSchema(cfg), "config"));
  KEPS_ASSIGN_OR_RETURN(
      Dataset released,
      AnnotateStage(LoadCsv(anonymised, pub_schema), "load"));
  KEPS_ASSIGN_OR_RETURN(
      auto released_cls,
      AnnotateStage(ClassificationFor(cfg, pub_schema), "classify"));
  std::optional<std::vector<std::size_t>> linkage;
  if (!linkage_path.empty()) {
    KEPS_ASSIGN_OR_RETURN(CsvTable table,
                          AnnotateStage(ReadCsv(linkage_path), "load"));
    KEPS_ASSIGN_OR_RETURN(linkage,
                          AnnotateStage(LinkageFromCsv(table), "load"));
  }
  KEPS_ASSIGN_OR_RETURN(
      EvaluationReport rep,
      EvaluateRelease(in.data, released, std::move(linkage), released_cls,
                      cfg.eps, cfg.confidence, cfg.k));
  KEPS_RETURN_IF_ERROR(EnsureDir(cfg.output_dir));
  const auto path = cfg.output_dir / "evaluation.json";
  KEPS_RETURN_IF_ERROR(AnnotateStage(
      WriteStringToFile(path, rep.ToJson().dump(2) + "\n"), "output"));
  std::cout << "empirical error " << rep.empirical_error << ", expected error "
            << rep.expected_error << ", risk " << rep.link.risk << "\n"
            << "wrote " << path.string() << "\n";
  return absl::OkStatus();
}

absl::Status Hierarchies(const CommonOptions& opts,
                         const std::vector<std::string>& files) {
  std::cout << "built-in hierarchies:\n";
  for (const auto& [name, h] : BuiltinHierarchies()) {
    std::cout << "  builtin:" << name << "  levels=" << h.levels() << "  "
              << h.Describe() << "\n";
  }
  for (const auto& f : files) {
    KEPS_ASSIGN_OR_RETURN(Hierarchy h,
                          AnnotateStage(LoadHierarchyCsv(f), "hierarchy"));
    std::cout << f << ": ok, attribute " << h.attribute()
              << ", levels=" << h.levels() << ", " << h.Describe() << "\n";
  }
  if (!opts.config.empty()) {
    KEPS_ASSIGN_OR_RETURN(RunConfig cfg, LoadConfig(opts));
    KEPS_ASSIGN_OR_RETURN(PreparedInput in, PrepareInput(cfg));
    for (const auto& [col, h] : in.hierarchies) {
      KEPS_ASSIGN_OR_RETURN(std::size_t c, in.data.ColumnIndex(col));
      for (std::size_t r = 0; r < in.data.num_records(); ++r) {
        for (int l = 0; l < h.levels(); ++l) {
          auto g = h.Generalise(in.data.CellText(r, c), l);
          if (!g.ok()) {
            return AnnotateStage(
                absl::Status(g.status().code(),
                             StrCat("row ", r + 1, ": ", g.status().message())),
                StrCat("hierarchy:", col));
          }
        }
      }
      std::cout << "column " << col << ": every value generalises through "
                << h.levels() << " levels\n";
    }
  }
  if (!opts.out.empty()) {
    KEPS_RETURN_IF_ERROR(EnsureDir(opts.out));
    for (const auto& [name, h] : BuiltinHierarchies()) {
      if (!h.Domain()) continue;
      const auto path = std::filesystem::path(opts.out) / (name + ".csv");
      KEPS_RETURN_IF_ERROR(AnnotateStage(
          WriteStringToFile(path, HierarchyToCsv(h)), "output"));
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  return absl::OkStatus();
}

int Main(int argc, char** argv) {
  CLI::App app{"(k, eps)-anonymisation of tabular data"};
  app.require_subcommand(1);

  CommonOptions anon_opts;
  bool keep_linkage = false;
  auto* anon = app.add_subcommand("anonymise", "Run the anonymisation pipeline");
  AddCommon(anon, anon_opts, true);
  anon->add_flag("--keep-linkage", keep_linkage,
                 "Also write the row correspondence to a separate debug file");

  CommonOptions grid_opts;
  std::vector<int> grid_k;
  std::vector<double> grid_eps;
  std::optional<int> grid_runs;
  auto* grid = app.add_subcommand("grid", "Sweep k and eps, write grid.csv");
  AddCommon(grid, grid_opts, true);
  grid->add_option("--k", grid_k, "k values")->delimiter(',');
  grid->add_option("--eps", grid_eps, "eps values")->delimiter(',');
  grid->add_option("--runs", grid_runs, "Runs per cell");

  CommonOptions synth_opts;
  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Append a synthetic height/weight");
  AddCommon(synth, synth_opts, false);
  synth->add_option("--input", synth_flags.input, "Input CSV");
  synth->add_option("--kind", synth_flags.kind, "height or weight");
  synth->add_option("--column", synth_flags.column, "Name of the new column");
  synth->add_option("--age-column", synth_flags.age_column, "Age column");
  synth->add_option("--reference-year", synth_flags.reference_year,
                    "Treat the age column as a birth year");
  synth->add_option("--gender-column", synth_flags.gender_column,
                    "Gender column");
  synth->add_option("--parameters", synth_flags.parameters,
                    "'defaults' or a parameter CSV");

  CommonOptions eval_opts;
  std::string eval_original, eval_anonymised, eval_linkage;
  auto* eval = app.add_subcommand(
      "evaluate", "Loss and risk of an anonymised table against its original");
  AddCommon(eval, eval_opts, true);
  eval->add_option("--original", eval_original,
                   "Original CSV (defaults to the config input)");
  eval->add_option("--anonymised", eval_anonymised, "Anonymised CSV")
      ->required();
  eval->add_option("--linkage", eval_linkage,
                   "Linkage file; without it rows are assumed aligned");

  CommonOptions hier_opts;
  std::vector<std::string> hier_files;
  auto* hier = app.add_subcommand("hierarchies",
                                  "List built-in and validate hierarchies");
  AddCommon(hier, hier_opts, false);
  hier->add_option("--validate", hier_files, "Hierarchy CSV files to check");

  CLI11_PARSE(app, argc, argv);

  absl::Status status;
  if (*anon) {
    status = Anonymise(anon_opts, keep_linkage);
  } else if (*grid) {
    status = Grid(grid_opts, grid_k, grid_eps, grid_runs);
  } else if (*synth) {
    status = Synth(synth_opts, synth_flags);
  } else if (*eval) {
    status = Evaluate(eval_opts, eval_original, eval_anonymised, eval_linkage);
  } else if (*hier) {
    status = Hierarchies(hier_opts, hier_files);
  }
  if (!status.ok()) {
    std::cerr << "error: " << status.message() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace kepsilon

int main(int argc, char** argv) { return kepsilon::Main(argc, argv); }
