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

// End-to-end (k, eps)-anonymisation: classify, remove explicit identifiers,
// k-anonymise the k-quasis, perturb the eps-quasi per equivalence class,
// merge, shuffle; then measure loss and risk.
//
// Seeds. Run r of a pipeline with master seed s uses
//   DeriveSeed(DeriveSeed(s, r), kDpStream)       for the Laplace noise,
//   DeriveSeed(DeriveSeed(s, r), kShuffleStream)  for the output order,
// and synthetic columns use DeriveSeed(s, kSynthStream). Results therefore do
// not depend on the number of worker threads.

#ifndef KEPSILON_PIPELINE_HPP_
#define KEPSILON_PIPELINE_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "kepsilon/config.hpp"
#include "kepsilon/csv.hpp"
#include "kepsilon/dataset.hpp"
#include "kepsilon/dp_noise.hpp"
#include "kepsilon/generalisation.hpp"
#include "kepsilon/kanon.hpp"
#include "kepsilon/loss_metrics.hpp"
#include "kepsilon/partition.hpp"
#include "kepsilon/risk_eval.hpp"
#include "kepsilon/rng.hpp"
#include "kepsilon/status.hpp"
#include "kepsilon/synth.hpp"

namespace kepsilon {

inline constexpr std::uint64_t kDpStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;
inline constexpr std::uint64_t kSynthStream = 0xffffffffffff0001ULL;

// Runs fn(0..count-1) on up to `threads` workers (0 = hardware concurrency).
// fn must only write to state owned by its index.
inline void ParallelFor(std::size_t count, int threads,
                        const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0
                            ? static_cast<std::size_t>(threads)
                            : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
    });
  }
}

// Input ready for anonymisation: the dataset (with any synthetic column), its
// classification, the hierarchies of the k-quasis keyed by column, and the
// Mondrian orders of categorical k-quasis.
struct PreparedInput {
  Dataset data;
  AttributeClassification cls;
  HierarchySet hierarchies;
  CategoricalOrders orders;
  std::string eps_column;
};

inline absl::StatusOr<Hierarchy> ResolveHierarchy(std::string_view source) {
  constexpr std::string_view kBuiltin = "builtin:";
  if (source.substr(0, kBuiltin.size()) == kBuiltin) {
    const std::string name(source.substr(kBuiltin.size()));
    auto all = BuiltinHierarchies();
    auto it = all.find(name);
    if (it == all.end()) {
      return absl::NotFoundError(
          StrCat("no built-in hierarchy named '", name, "'"));
    }
    return it->second;
  }
  return LoadHierarchyCsv(std::string(source));
}

inline absl::StatusOr<AnthropometricModel> ResolveSynthModel(
    const SynthConfig& sc) {
  if (sc.parameters == "defaults") {
    return AnthropometricModel::PlausibleDefaults();
  }
  return AnthropometricModel::Load(sc.parameters);
}

// Schema of the input file: every configured column except a synthetic one.
inline absl::StatusOr<Schema> InputSchema(const RunConfig& cfg) {
  std::vector<ColumnSpec> specs;
  for (const auto& c : cfg.columns) {
    if (cfg.synth && c.name == cfg.synth->column) continue;
    specs.push_back({c.name, c.kind});
  }
  return Schema::Create(std::move(specs));
}

// Schema of a published table for `cfg`: explicit identifiers dropped and
// k-quasis turned into categorical generalised tokens.
inline absl::StatusOr<Schema> PublishedSchema(const RunConfig& cfg) {
  std::vector<ColumnSpec> specs;
  for (const auto& c : cfg.columns) {
    if (c.role == AttributeRole::kExplicit) continue;
    specs.push_back({c.name, c.role == AttributeRole::kKQuasi
                                 ? ColumnKind::kCategorical
                                 : c.kind});
  }
  return Schema::Create(std::move(specs));
}

inline absl::StatusOr<AttributeClassification> ClassificationFor(
    const RunConfig& cfg, const Schema& schema) {
  std::map<std::string, AttributeRole> roles;
  for (const auto& c : cfg.columns) {
    if (schema.IndexOf(c.name)) roles[c.name] = c.role;
  }
  return AttributeClassification::Create(schema, roles);
}

// Adds the synthetic column (if configured and absent), classifies the
// columns and resolves hierarchies and orders.
inline absl::StatusOr<PreparedInput> PrepareDataset(Dataset raw,
                                                    const RunConfig& cfg) {
  KEPS_RETURN_IF_ERROR(AnnotateStage(cfg.Validate(), "config"));
  if (cfg.synth && !raw.schema().IndexOf(cfg.synth->column)) {
    KEPS_ASSIGN_OR_RETURN(
        auto model, AnnotateStage(ResolveSynthModel(*cfg.synth), "synth"));
    KEPS_ASSIGN_OR_RETURN(
        raw, AnnotateStage(
                 AugmentDataset(raw,
                                {cfg.synth->age_column,
                                 cfg.synth->reference_year},
                                cfg.synth->gender_column, cfg.synth->kind,
                                model, DeriveSeed(cfg.seed, kSynthStream),
                                cfg.synth->column),
                 "synth"));
  }
  PreparedInput in{std::move(raw), {}, {}, {}, {}};
  KEPS_ASSIGN_OR_RETURN(
      in.cls, AnnotateStage(ClassificationFor(cfg, in.data.schema()),
                            "classify"));
  KEPS_RETURN_IF_ERROR(AnnotateStage(in.cls.ValidateForPipeline(), "classify"));
  KEPS_ASSIGN_OR_RETURN(in.eps_column,
                        AnnotateStage(SingleEpsQuasi(in.cls), "classify"));
  for (const auto& c : cfg.columns) {
    if (c.role != AttributeRole::kKQuasi) continue;
    std::optional<Hierarchy> hier;
    if (c.hierarchy) {
      KEPS_ASSIGN_OR_RETURN(
          Hierarchy h, AnnotateStage(ResolveHierarchy(*c.hierarchy),
                                     StrCat("hierarchy:", c.name)));
      hier = h;
      in.hierarchies.emplace(c.name, std::move(h));
    }
    if (!c.order.empty()) {
      in.orders[c.name] = c.order;
    } else if (c.kind == ColumnKind::kCategorical && hier && hier->Domain()) {
      // Without an explicit order, Mondrian uses the hierarchy's value order.
      in.orders[c.name] = *hier->Domain();
    }
  }
  return in;
}

inline absl::StatusOr<PreparedInput> PrepareInput(const RunConfig& cfg) {
  KEPS_ASSIGN_OR_RETURN(Schema schema,
                        AnnotateStage(InputSchema(cfg), "config"));
  KEPS_ASSIGN_OR_RETURN(Dataset raw,
                        AnnotateStage(LoadCsv(cfg.input, schema), "load"));
  return PrepareDataset(std::move(raw), cfg);
}

// Parameters of one pipeline invocation; a subset of RunConfig.
struct RunParams {
  KAnonAlgorithm algorithm = KAnonAlgorithm::kOla;
  int k = 2;
  double max_suppression = 0.05;
  double eps = 1.0;
  std::optional<double> confidence;
  std::uint64_t seed = 0;
  int runs = 1;
  int threads = 0;

  static RunParams FromConfig(const RunConfig& cfg) {
    return {cfg.algorithm, cfg.k,    cfg.max_suppression, cfg.eps,
            cfg.confidence, cfg.seed, cfg.runs,            cfg.threads};
  }
};

inline absl::StatusOr<Partition> KAnonymise(const PreparedInput& in,
                                            const Dataset& cleaned,
                                            const RunParams& params) {
  auto p = params.algorithm == KAnonAlgorithm::kOla
               ? OlaAnonymise(cleaned, in.cls, in.hierarchies, params.k,
                              params.max_suppression)
               : MondrianAnonymise(cleaned, in.cls, params.k, in.orders);
  return AnnotateStage(std::move(p), "k_anonymise");
}

// Stochastic metrics of a single run.
struct RunMetrics {
  double empirical_error = 0;
  double risk = 0;
  std::optional<double> confidence_suppression;  // fraction of all records
  std::size_t non_positive_outputs = 0;
};

struct MeanAndError {
  double mean = 0;
  double std_error = 0;  // sample sd / sqrt(runs); 0 for a single run
};

inline MeanAndError Summarise(std::span<const double> xs) {
  MeanAndError out;
  if (xs.empty()) return out;
  double sum = 0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                              static_cast<double>(xs.size()));
  }
  return out;
}

struct RunOutput {
  NoisyColumn noisy;
  RunMetrics metrics;
  LinkResult link;
  std::optional<ConfidenceSuppression> confidence;
};

// Perturbation and evaluation of run `run`; `original` is the eps-quasi of
// every partitioned record.
inline absl::StatusOr<RunOutput> ExecuteRun(std::span<const double> original,
                                            const Partition& p,
                                            const RunParams& params,
                                            std::size_t run) {
  const std::uint64_t run_seed = DeriveSeed(params.seed, run);
  RunOutput out;
  KEPS_ASSIGN_OR_RETURN(
      out.noisy,
      AnnotateStage(PerturbPartition(original, p, params.eps,
                                     DeriveSeed(run_seed, kDpStream)),
                    "dp_noise"));
  KEPS_ASSIGN_OR_RETURN(
      out.metrics.empirical_error,
      AnnotateStage(EmpiricalRelativeError(original, out.noisy.values,
                                           out.noisy.source_rows),
                    "loss_metrics"));
  KEPS_ASSIGN_OR_RETURN(out.link,
                        AnnotateStage(LinkingRisk(original, out.noisy.values,
                                                  out.noisy.source_rows, p),
                                      "risk_eval"));
  out.metrics.risk = out.link.risk;
  out.metrics.non_positive_outputs = out.noisy.non_positive_outputs;
  if (params.confidence) {
    KEPS_ASSIGN_OR_RETURN(
        auto cs, AnnotateStage(ConfidenceSuppress(original, out.noisy.values,
                                                  out.noisy.source_rows, p,
                                                  params.eps,
                                                  *params.confidence, params.k),
                               "risk_eval"));
    out.metrics.confidence_suppression = cs.fraction();
    out.confidence = std::move(cs);
  }
  return out;
}

// Runs 0..runs-1 in parallel.
inline absl::StatusOr<std::vector<RunOutput>> ExecuteRuns(
    std::span<const double> original, const Partition& p,
    const RunParams& params) {
  const auto runs = static_cast<std::size_t>(params.runs);
  std::vector<absl::StatusOr<RunOutput>> results(runs);
  ParallelFor(runs, params.threads, [&](std::size_t r) {
    results[r] = ExecuteRun(original, p, params, r);
  });
  std::vector<RunOutput> out;
  out.reserve(runs);
  for (auto& r : results) {
    if (!r.ok()) return r.status();
    out.push_back(*std::move(r));
  }
  return out;
}

struct AnonymisationReport {
  RunParams params;
  nlohmann::json config_echo;
  Partition partition;
  LossReport loss;  // empirical_error is the mean over runs
  LinkResult link;  // run 0
  std::optional<ConfidenceSuppression> confidence;  // run 0
  std::vector<RunMetrics> runs;
  MeanAndError empirical_error;
  MeanAndError risk;
  std::optional<MeanAndError> confidence_suppression;
  std::size_t input_records = 0;
  std::size_t k_suppressed = 0;
  std::size_t confidence_suppressed = 0;  // run 0, removed from the release
  std::size_t released = 0;
  std::vector<std::pair<std::string, double>> timings;  // seconds

  nlohmann::json ToJson() const {
    nlohmann::json j;
    j["config"] = config_echo;
    j["records"] = {{"input", input_records},
                    {"k_suppressed", k_suppressed},
                    {"confidence_suppressed", confidence_suppressed},
                    {"released", released}};
    j["partition"] = PartitionSummaryJson(partition);
    j["loss"] = LossReportToJson(loss, /*include_classes=*/false);
    auto mae = [](const MeanAndError& m) {
      return nlohmann::json{{"mean", m.mean}, {"std_error", m.std_error}};
    };
    nlohmann::json per_run = nlohmann::json::array();
    for (const auto& r : runs) {
      nlohmann::json jr = {{"empirical_error", r.empirical_error},
                           {"risk", r.risk},
                           {"non_positive_outputs", r.non_positive_outputs}};
      if (r.confidence_suppression) {
        jr["confidence_suppression"] = *r.confidence_suppression;
      }
      per_run.push_back(std::move(jr));
    }
    j["runs"] = {{"count", runs.size()},
                 {"empirical_error", mae(empirical_error)},
                 {"risk", mae(risk)},
                 {"per_run", std::move(per_run)}};
    if (confidence_suppression) {
      j["runs"]["confidence_suppression"] = mae(*confidence_suppression);
    }

    nlohmann::json risk_j;
    risk_j["k"] = params.k;
    risk_j["eps"] = params.eps;
    risk_j["c"] = params.confidence ? nlohmann::json(*params.confidence)
                                    : nlohmann::json();
    risk_j["risk"] = risk.mean;
    risk_j["ola_suppression"] = partition.suppressed_fraction();
    risk_j["confidence_suppression"] =
        confidence_suppression ? nlohmann::json(confidence_suppression->mean)
                               : nlohmann::json();
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < link.class_sizes.size(); ++c) {
      nlohmann::json jc = {{"size", link.class_sizes[c]},
                           {"links", link.class_links[c]},
                           {"expected_error", loss.classes[c].expected_error}};
      if (confidence) {
        jc["confidence_range"] = confidence->class_range[c];
        jc["confidence_suppressed"] =
            std::find(confidence->class_suppressed.begin(),
                      confidence->class_suppressed.end(),
                      c) != confidence->class_suppressed.end();
      }
      classes.push_back(std::move(jc));
    }
    risk_j["per_class"] = std::move(classes);
    j["risk"] = std::move(risk_j);

    nlohmann::json t = nlohmann::json::object();
    for (const auto& [stage, secs] : timings) t[stage] = secs;
    j["timings_seconds"] = std::move(t);
    return j;
  }
};

struct PipelineResult {
  Dataset published;
  // Evaluation only: input row of each published row. Never part of the
  // published table.
  std::vector<std::size_t> linkage;
  AnonymisationReport report;
};

namespace pipeline_internal {

class StageClock {
 public:
  void Mark(std::string stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_.emplace_back(std::move(stage),
                          std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }
  std::vector<std::pair<std::string, double>> Take() {
    timings_.emplace_back(
        "total", std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start_)
                     .count());
    return std::move(timings_);
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
  std::chrono::steady_clock::time_point last_ = start_;
  std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace pipeline_internal

// Anonymises `in` and evaluates `params.runs` independent noise draws. The
// published table comes from run 0; with a confidence level, run 0's
// confidence-suppressed rows are removed from it.
inline absl::StatusOr<PipelineResult> RunPipeline(const PreparedInput& in,
                                                  const RunParams& params,
                                                  nlohmann::json config_echo =
                                                      {}) {
  if (params.runs < 1) return absl::InvalidArgumentError("runs must be >= 1");
  pipeline_internal::StageClock clock;
  const Dataset cleaned = RemoveExplicitIdentifiers(in.data, in.cls);
  clock.Mark("remove_identifiers");
  KEPS_ASSIGN_OR_RETURN(Partition p, KAnonymise(in, cleaned, params));
  KEPS_RETURN_IF_ERROR(AnnotateStage(ValidatePartition(p), "k_anonymise"));
  clock.Mark("k_anonymise");
  KEPS_ASSIGN_OR_RETURN(auto original,
                        AnnotateStage(cleaned.Numeric(in.eps_column), "dp_noise"));
  KEPS_ASSIGN_OR_RETURN(auto runs,
                        ExecuteRuns(original, p, params));
  clock.Mark("dp_and_evaluation");

  PipelineResult result;
  AnonymisationReport& rep = result.report;
  rep.params = params;
  rep.config_echo = std::move(config_echo);
  KEPS_ASSIGN_OR_RETURN(
      rep.loss, AnnotateStage(ComputeLossReport(p, cleaned, in.hierarchies,
                                                in.eps_column, params.eps),
                              "loss_metrics"));
  std::vector<double> errors, risks, conf;
  for (const auto& r : runs) {
    rep.runs.push_back(r.metrics);
    errors.push_back(r.metrics.empirical_error);
    risks.push_back(r.metrics.risk);
    if (r.metrics.confidence_suppression) {
      conf.push_back(*r.metrics.confidence_suppression);
    }
  }
  rep.empirical_error = Summarise(errors);
  rep.risk = Summarise(risks);
  if (params.confidence) rep.confidence_suppression = Summarise(conf);
  rep.loss.empirical_error = rep.empirical_error.mean;
  rep.link = runs.front().link;
  rep.confidence = runs.front().confidence;
  clock.Mark("loss_report");

  // Merge: rebuild the release from run 0's noisy values.
  KEPS_ASSIGN_OR_RETURN(
      AnonymisedTable table,
      AnnotateStage(ApplyDp(cleaned, p, in.cls, params.eps,
                            DeriveSeed(DeriveSeed(params.seed, 0), kDpStream)),
                    "merge"));
  std::vector<std::size_t> keep;
  keep.reserve(table.source_rows.size());
  {
    std::vector<char> drop(table.source_rows.size(), 0);
    if (rep.confidence) {
      for (std::size_t row : rep.confidence->suppressed_rows) drop[row] = 1;
    }
    for (std::size_t i = 0; i < drop.size(); ++i) {
      if (!drop[i]) keep.push_back(i);
    }
  }
  const auto perm = ShufflePermutation(
      keep.size(), DeriveSeed(DeriveSeed(params.seed, 0), kShuffleStream));
  std::vector<std::size_t> order;
  order.reserve(keep.size());
  for (std::size_t i : perm) {
    order.push_back(keep[i]);
    result.linkage.push_back(table.source_rows[keep[i]]);
  }
  result.published = table.data.SelectRows(order);
  clock.Mark("shuffle");

  rep.input_records = in.data.num_records();
  rep.k_suppressed = p.suppressed.size();
  rep.confidence_suppressed = table.source_rows.size() - keep.size();
  rep.released = result.published.num_records();
  rep.partition = std::move(p);
  rep.timings = clock.Take();
  if (rep.k_suppressed + rep.confidence_suppressed + rep.released !=
      rep.input_records) {
    return absl::InternalError("[report] record totals do not add up");
  }
  return result;
}

inline absl::StatusOr<PipelineResult> RunPipeline(const RunConfig& cfg) {
  KEPS_ASSIGN_OR_RETURN(PreparedInput in, PrepareInput(cfg));
  return RunPipeline(in, RunParams::FromConfig(cfg), RunConfigToJson(cfg));
}

// Linkage file: published_row,source_row (0-based input row).
inline std::string LinkageToCsv(std::span<const std::size_t> linkage) {
  std::string out = "published_row,source_row\n";
  for (std::size_t i = 0; i < linkage.size(); ++i) {
    out += StrCat(i, ",", linkage[i], "\n");
  }
  return out;
}

inline absl::StatusOr<std::vector<std::size_t>> LinkageFromCsv(
    const CsvTable& table) {
  if (table.header != CsvRow{"published_row", "source_row"}) {
    return absl::InvalidArgumentError(
        "linkage header must be published_row,source_row");
  }
  std::vector<std::size_t> out(table.rows.size());
  std::vector<char> seen(table.rows.size(), 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    double a, b;
    const auto& row = table.rows[r];
    if (row.size() != 2 || !ParseFiniteDouble(row[0], a) ||
        !ParseFiniteDouble(row[1], b) || a < 0 || b < 0 ||
        a != std::floor(a) || b != std::floor(b) ||
        a >= static_cast<double>(out.size()) || seen[static_cast<std::size_t>(a)]) {
      return absl::InvalidArgumentError(
          StrCat("linkage row ", r + 1, " is malformed"));
    }
    seen[static_cast<std::size_t>(a)] = 1;
    out[static_cast<std::size_t>(a)] = static_cast<std::size_t>(b);
  }
  return out;
}

// Files written by WritePipelineOutputs, relative to the output directory.
inline constexpr std::string_view kAnonymisedFile = "anonymised.csv";
inline constexpr std::string_view kReportFile = "report.json";
inline constexpr std::string_view kLinkageFile =
    "linkage.DEBUG-NOT-FOR-RELEASE.csv";

inline absl::Status WritePipelineOutputs(const PipelineResult& result,
                                         const std::filesystem::path& dir,
                                         bool keep_linkage) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  KEPS_RETURN_IF_ERROR(WriteCsv(result.published, dir / kAnonymisedFile));
  KEPS_RETURN_IF_ERROR(WriteStringToFile(
      dir / kReportFile, result.report.ToJson().dump(2) + "\n"));
  if (keep_linkage) {
    KEPS_RETURN_IF_ERROR(
        WriteStringToFile(dir / kLinkageFile, LinkageToCsv(result.linkage)));
  }
  return absl::OkStatus();
}

// One row of an experiment grid: means over runs.
struct GridRow {
  int k = 0;
  double eps = 0;
  double expected_error = 0;
  MeanAndError empirical_error;
  MeanAndError risk;
  std::optional<MeanAndError> confidence_suppression;  // fraction
  double k_suppression = 0;                            // fraction
};

// Every (k, eps) cell with params.runs runs each. Partitions are computed once
// per k; cells and runs execute in parallel with the same seeds RunPipeline
// would use, so a cell matches RunPipeline with those parameters.
inline absl::StatusOr<std::vector<GridRow>> RunGrid(
    const PreparedInput& in, const RunParams& base, std::span<const int> ks,
    std::span<const double> epss) {
  if (ks.empty() || epss.empty()) {
    return absl::InvalidArgumentError("grid needs at least one k and one eps");
  }
  if (base.runs < 1) return absl::InvalidArgumentError("runs must be >= 1");
  const Dataset cleaned = RemoveExplicitIdentifiers(in.data, in.cls);
  KEPS_ASSIGN_OR_RETURN(auto original,
                        AnnotateStage(cleaned.Numeric(in.eps_column), "dp_noise"));

  std::vector<absl::StatusOr<Partition>> parts(ks.size());
  ParallelFor(ks.size(), base.threads, [&](std::size_t i) {
    RunParams p = base;
    p.k = ks[i];
    parts[i] = KAnonymise(in, cleaned, p);
  });
  for (auto& p : parts) {
    if (!p.ok()) return p.status();
  }

  const std::size_t runs = static_cast<std::size_t>(base.runs);
  const std::size_t cells = ks.size() * epss.size();
  std::vector<absl::StatusOr<RunMetrics>> metrics(cells * runs);
  ParallelFor(cells * runs, base.threads, [&](std::size_t t) {
    const std::size_t cell = t / runs, run = t % runs;
    RunParams p = base;
    p.k = ks[cell / epss.size()];
    p.eps = epss[cell % epss.size()];
    auto out = ExecuteRun(original, *parts[cell / epss.size()], p, run);
    if (out.ok()) {
      metrics[t] = out->metrics;
    } else {
      metrics[t] = out.status();
    }
  });

  std::vector<GridRow> rows;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const Partition& p = *parts[cell / epss.size()];
    GridRow row;
    row.k = ks[cell / epss.size()];
    row.eps = epss[cell % epss.size()];
    KEPS_ASSIGN_OR_RETURN(
        row.expected_error,
        AnnotateStage(ExpectedDatasetError(p, cleaned, in.eps_column, row.eps),
                      "loss_metrics"));
    std::vector<double> errors, risks, conf;
    for (std::size_t r = 0; r < runs; ++r) {
      const auto& m = metrics[cell * runs + r];
      if (!m.ok()) return m.status();
      errors.push_back(m->empirical_error);
      risks.push_back(m->risk);
      if (m->confidence_suppression) conf.push_back(*m->confidence_suppression);
    }
    row.empirical_error = Summarise(errors);
    row.risk = Summarise(risks);
    if (base.confidence) row.confidence_suppression = Summarise(conf);
    row.k_suppression = p.suppressed_fraction();
    rows.push_back(row);
  }
  return rows;
}

inline std::string GridToCsv(std::span<const GridRow> rows) {
  std::string out =
      "k,eps,expected_error,empirical_error,risk,conf_suppression_pct,"
      "ola_suppression_pct\n";
  for (const auto& r : rows) {
    AppendCsvRow(
        out, {StrCat(r.k), FormatNumber(r.eps), FormatNumber(r.expected_error),
              FormatNumber(r.empirical_error.mean), FormatNumber(r.risk.mean),
              r.confidence_suppression
                  ? FormatNumber(100.0 * r.confidence_suppression->mean)
                  : std::string(),
              FormatNumber(100.0 * r.k_suppression)});
  }
  return out;
}

// The k and eps values of the reference experiments.
inline const std::vector<int>& DefaultGridK() {
  static const std::vector<int> ks = {2, 5, 10, 20, 50, 100};
  return ks;
}
inline const std::vector<double>& DefaultGridEps() {
  static const std::vector<double> eps = {0.05, 0.5, 1, 2, 4, 8, 16};
  return eps;
}

// Loss and risk of an existing release against its original.
struct EvaluationReport {
  Partition partition;  // classes keyed by the released k-quasi tokens
  double expected_error = 0;
  double empirical_error = 0;
  LinkResult link;
  std::optional<ConfidenceSuppression> confidence;

  nlohmann::json ToJson() const {
    nlohmann::json j;
    j["records"] = {{"original", partition.num_records},
                    {"released", partition.retained()},
                    {"classes", partition.classes.size()}};
    j["expected_error"] = expected_error;
    j["empirical_error"] = empirical_error;
    j["risk"] = link.risk;
    if (confidence) {
      j["confidence"] = {{"c", confidence->c},
                         {"k", confidence->k},
                         {"suppressed_rows", confidence->suppressed_rows.size()},
                         {"fraction", confidence->fraction()}};
    }
    return j;
  }
};

// Groups the released rows by their k-quasi tokens to recover the classes.
// `linkage[i]` is the original row of released row i; without it the two
// tables must be row-aligned.
inline absl::StatusOr<EvaluationReport> EvaluateRelease(
    const Dataset& original, const Dataset& released,
    std::optional<std::vector<std::size_t>> linkage,
    const AttributeClassification& released_cls, double eps,
    std::optional<double> confidence, int k) {
  KEPS_ASSIGN_OR_RETURN(const std::string eps_col,
                        AnnotateStage(SingleEpsQuasi(released_cls), "classify"));
  if (!linkage) {
    if (original.num_records() != released.num_records()) {
      return absl::InvalidArgumentError(
          "[evaluate] tables differ in length; a linkage file is required");
    }
    linkage.emplace(released.num_records());
    std::iota(linkage->begin(), linkage->end(), std::size_t{0});
  }
  if (linkage->size() != released.num_records()) {
    return absl::InvalidArgumentError(
        "[evaluate] linkage length differs from the released table");
  }
  const auto quasis = released_cls.ColumnsWith(AttributeRole::kKQuasi);
  std::vector<std::size_t> cols;
  for (const auto& q : quasis) {
    KEPS_ASSIGN_OR_RETURN(auto c,
                          AnnotateStage(released.ColumnIndex(q), "evaluate"));
    cols.push_back(c);
  }
  Partition p;
  p.k = k;
  p.quasi_columns = quasis;
  p.num_records = original.num_records();
  std::map<std::vector<std::string>, std::size_t> index;
  std::vector<char> used(p.num_records, 0);
  for (std::size_t i = 0; i < released.num_records(); ++i) {
    const std::size_t src = (*linkage)[i];
    if (src >= p.num_records || used[src]) {
      return absl::InvalidArgumentError(
          StrCat("[evaluate] linkage row ", i + 1, " is invalid"));
    }
    used[src] = 1;
    std::vector<std::string> key;
    for (std::size_t c : cols) key.push_back(released.CellText(i, c));
    auto [it, inserted] = index.emplace(key, p.classes.size());
    if (inserted) p.classes.push_back({std::move(key), {}, {}});
    p.classes[it->second].members.push_back(src);
  }
  for (std::size_t r = 0; r < p.num_records; ++r) {
    if (!used[r]) p.suppressed.push_back(r);
  }
  std::vector<std::size_t> source_rows;
  std::vector<double> noisy;
  KEPS_ASSIGN_OR_RETURN(auto released_vals,
                        AnnotateStage(released.Numeric(eps_col), "evaluate"));
  KEPS_ASSIGN_OR_RETURN(auto before,
                        AnnotateStage(original.Numeric(eps_col), "evaluate"));
  source_rows.assign(linkage->begin(), linkage->end());
  noisy.assign(released_vals.begin(), released_vals.end());

  EvaluationReport rep;
  KEPS_ASSIGN_OR_RETURN(
      rep.expected_error,
      AnnotateStage(ExpectedDatasetError(p, original, eps_col, eps),
                    "loss_metrics"));
  KEPS_ASSIGN_OR_RETURN(
      rep.empirical_error,
      AnnotateStage(EmpiricalRelativeError(before, noisy, source_rows),
                    "loss_metrics"));
  KEPS_ASSIGN_OR_RETURN(
      rep.link,
      AnnotateStage(LinkingRisk(before, noisy, source_rows, p), "risk_eval"));
  if (confidence) {
    KEPS_ASSIGN_OR_RETURN(
        auto cs, AnnotateStage(ConfidenceSuppress(before, noisy, source_rows, p,
                                                  eps, *confidence, k),
                               "risk_eval"));
    rep.confidence = std::move(cs);
  }
  rep.partition = std::move(p);
  return rep;
}

}  // namespace kepsilon

#endif  // KEPSILON_PIPELINE_HPP_
