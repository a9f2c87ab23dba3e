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

// Run configuration and its YAML file format.
//
//   input: data/records.csv          # relative paths resolve against the file
//   output_dir: out
//   algorithm: ola                   # ola | mondrian
//   k: 10
//   max_suppression: 0.05            # OLA budget, fraction of records
//   eps: 1.0
//   confidence: 0.99                 # optional; enables confidence suppression
//   seed: 7
//   runs: 30
//   threads: 0                       # 0 = hardware concurrency
//   columns:
//     - {name: id, kind: categorical, role: explicit}
//     - {name: year_of_birth, kind: numeric, role: k_quasi,
//        hierarchy: "builtin:year_of_birth"}
//     - {name: gender, kind: categorical, role: k_quasi,
//        hierarchy: hierarchies/gender.csv, order: [Female, Male]}
//     - {name: height, kind: numeric, role: eps_quasi}
//   synth:                           # optional; appends a generated column
//     kind: height                   # height | weight
//     column: height                 # must be declared under columns
//     age_column: year_of_birth
//     reference_year: 1994           # optional; age = reference_year - value
//     gender_column: gender
//     parameters: defaults           # "defaults" or a parameter CSV path
//   grid:                            # optional; used by the grid subcommand
//     k: [2, 5, 10]
//     eps: [0.5, 1, 2]

#ifndef KEPSILON_CONFIG_HPP_
#define KEPSILON_CONFIG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "kepsilon/dataset.hpp"
#include "kepsilon/partition.hpp"
#include "kepsilon/status.hpp"
#include "kepsilon/synth.hpp"
#include "yaml-cpp/yaml.h"

namespace kepsilon {

struct ColumnConfig {
  std::string name;
  ColumnKind kind = ColumnKind::kCategorical;
  AttributeRole role = AttributeRole::kSensitive;
  // "builtin:<name>" or a hierarchy CSV path.
  std::optional<std::string> hierarchy;
  // Total order of categorical values for Mondrian.
  std::vector<std::string> order;
};

struct SynthConfig {
  SynthKind kind = SynthKind::kHeight;
  std::string column;
  std::string age_column;
  std::optional<double> reference_year;
  std::string gender_column;
  // "defaults" opts into the illustrative built-in parameters.
  std::string parameters;
};

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = ".";
  std::vector<ColumnConfig> columns;
  KAnonAlgorithm algorithm = KAnonAlgorithm::kOla;
  int k = 2;
  double max_suppression = 0.05;
  double eps = 1.0;
  std::optional<double> confidence;
  std::uint64_t seed = 0;
  int runs = 1;
  int threads = 0;
  std::optional<SynthConfig> synth;
  std::vector<int> grid_k;
  std::vector<double> grid_eps;

  absl::Status Validate() const {
    if (k < 2) return absl::InvalidArgumentError(StrCat("k=", k, " < 2"));
    if (!(eps > 0) || !std::isfinite(eps)) {
      return absl::InvalidArgumentError(StrCat("eps=", eps, " must be > 0"));
    }
    if (!(max_suppression >= 0 && max_suppression <= 1)) {
      return absl::InvalidArgumentError(
          StrCat("max_suppression=", max_suppression, " outside [0, 1]"));
    }
    if (runs < 1) return absl::InvalidArgumentError("runs must be >= 1");
    if (threads < 0) return absl::InvalidArgumentError("threads must be >= 0");
    if (confidence && !(*confidence >= 0 && *confidence < 1)) {
      return absl::InvalidArgumentError(
          StrCat("confidence=", *confidence, " outside [0, 1)"));
    }
    for (int gk : grid_k) {
      if (gk < 2) return absl::InvalidArgumentError("grid k values must be >= 2");
    }
    for (double ge : grid_eps) {
      if (!(ge > 0)) {
        return absl::InvalidArgumentError("grid eps values must be > 0");
      }
    }
    if (columns.empty()) return absl::InvalidArgumentError("no columns");
    if (synth) {
      bool declared = false;
      for (const auto& c : columns) {
        if (c.name == synth->column) declared = c.kind == ColumnKind::kNumeric;
      }
      if (!declared) {
        return absl::InvalidArgumentError(StrCat(
            "synth column '", synth->column,
            "' must be declared as a numeric column"));
      }
      if (synth->parameters.empty()) {
        return absl::InvalidArgumentError(
            "synth.parameters must be 'defaults' or a parameter file");
      }
    }
    return absl::OkStatus();
  }
};

namespace config_internal {

template <typename T>
absl::StatusOr<T> Scalar(const YAML::Node& node, std::string_view key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    return absl::InvalidArgumentError(
        StrCat("config key '", key, "' has an invalid value"));
  }
}

template <typename T>
absl::StatusOr<std::vector<T>> List(const YAML::Node& node,
                                    std::string_view key) {
  if (!node.IsSequence()) {
    return absl::InvalidArgumentError(
        StrCat("config key '", key, "' must be a list"));
  }
  std::vector<T> out;
  for (const auto& item : node) {
    KEPS_ASSIGN_OR_RETURN(T v, Scalar<T>(item, key));
    out.push_back(std::move(v));
  }
  return out;
}

inline absl::Status CheckKeys(const YAML::Node& node,
                              std::initializer_list<std::string_view> known,
                              std::string_view where) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      return absl::InvalidArgumentError(
          StrCat("unknown key '", key, "' in ", where));
    }
  }
  return absl::OkStatus();
}

inline std::filesystem::path Resolve(const std::filesystem::path& base,
                                     const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace config_internal

// Parses the YAML text of a config file. Relative paths are resolved against
// `base_dir`. Unknown keys are errors.
inline absl::StatusOr<RunConfig> ParseRunConfig(
    const std::string& text, const std::filesystem::path& base_dir) {
  using namespace config_internal;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    return absl::InvalidArgumentError(StrCat("config: ", e.what()));
  }
  if (!root.IsMap()) {
    return absl::InvalidArgumentError("config must be a YAML mapping");
  }
  KEPS_RETURN_IF_ERROR(CheckKeys(
      root,
      {"input", "output_dir", "columns", "algorithm", "k", "max_suppression",
       "eps", "confidence", "seed", "runs", "threads", "synth", "grid"},
      "config"));
  RunConfig cfg;
  if (!root["input"]) return absl::InvalidArgumentError("config needs 'input'");
  KEPS_ASSIGN_OR_RETURN(auto input, Scalar<std::string>(root["input"], "input"));
  cfg.input = Resolve(base_dir, input);
  if (root["output_dir"]) {
    KEPS_ASSIGN_OR_RETURN(auto out,
                          Scalar<std::string>(root["output_dir"], "output_dir"));
    cfg.output_dir = Resolve(base_dir, out);
  }
  if (root["algorithm"]) {
    KEPS_ASSIGN_OR_RETURN(auto a,
                          Scalar<std::string>(root["algorithm"], "algorithm"));
    if (a == "ola") {
      cfg.algorithm = KAnonAlgorithm::kOla;
    } else if (a == "mondrian") {
      cfg.algorithm = KAnonAlgorithm::kMondrian;
    } else {
      return absl::InvalidArgumentError(
          StrCat("unknown algorithm '", a, "' (ola|mondrian)"));
    }
  }
  if (root["k"]) {
    KEPS_ASSIGN_OR_RETURN(cfg.k, Scalar<int>(root["k"], "k"));
  }
  if (root["max_suppression"]) {
    KEPS_ASSIGN_OR_RETURN(cfg.max_suppression,
                          Scalar<double>(root["max_suppression"],
                                         "max_suppression"));
  }
  if (root["eps"]) {
    KEPS_ASSIGN_OR_RETURN(cfg.eps, Scalar<double>(root["eps"], "eps"));
  }
  if (root["confidence"]) {
    KEPS_ASSIGN_OR_RETURN(double c,
                          Scalar<double>(root["confidence"], "confidence"));
    cfg.confidence = c;
  }
  if (root["seed"]) {
    KEPS_ASSIGN_OR_RETURN(cfg.seed, Scalar<std::uint64_t>(root["seed"], "seed"));
  }
  if (root["runs"]) {
    KEPS_ASSIGN_OR_RETURN(cfg.runs, Scalar<int>(root["runs"], "runs"));
  }
  if (root["threads"]) {
    KEPS_ASSIGN_OR_RETURN(cfg.threads, Scalar<int>(root["threads"], "threads"));
  }

  const YAML::Node cols = root["columns"];
  if (!cols || !cols.IsSequence()) {
    return absl::InvalidArgumentError("config needs a 'columns' list");
  }
  for (const auto& c : cols) {
    if (!c.IsMap()) {
      return absl::InvalidArgumentError("each column entry must be a mapping");
    }
    KEPS_RETURN_IF_ERROR(CheckKeys(
        c, {"name", "kind", "role", "hierarchy", "order"}, "column entry"));
    ColumnConfig col;
    if (!c["name"] || !c["role"]) {
      return absl::InvalidArgumentError("column entries need 'name' and 'role'");
    }
    KEPS_ASSIGN_OR_RETURN(col.name, Scalar<std::string>(c["name"], "name"));
    KEPS_ASSIGN_OR_RETURN(auto role, Scalar<std::string>(c["role"], "role"));
    KEPS_ASSIGN_OR_RETURN(col.role, ParseRole(role));
    std::string kind = col.role == AttributeRole::kEpsQuasi ? "numeric"
                                                            : "categorical";
    if (c["kind"]) {
      KEPS_ASSIGN_OR_RETURN(kind, Scalar<std::string>(c["kind"], "kind"));
    }
    if (kind == "numeric") {
      col.kind = ColumnKind::kNumeric;
    } else if (kind == "categorical") {
      col.kind = ColumnKind::kCategorical;
    } else {
      return absl::InvalidArgumentError(
          StrCat("column '", col.name, "': unknown kind '", kind, "'"));
    }
    if (c["hierarchy"]) {
      KEPS_ASSIGN_OR_RETURN(auto h,
                            Scalar<std::string>(c["hierarchy"], "hierarchy"));
      col.hierarchy = h.rfind("builtin:", 0) == 0
                          ? h
                          : Resolve(base_dir, h).string();
    }
    if (c["order"]) {
      KEPS_ASSIGN_OR_RETURN(col.order, List<std::string>(c["order"], "order"));
    }
    cfg.columns.push_back(std::move(col));
  }

  if (const YAML::Node s = root["synth"]) {
    KEPS_RETURN_IF_ERROR(CheckKeys(s,
                                   {"kind", "column", "age_column",
                                    "reference_year", "gender_column",
                                    "parameters"},
                                   "synth"));
    SynthConfig sc;
    for (const char* key :
         {"kind", "column", "age_column", "gender_column", "parameters"}) {
      if (!s[key]) {
        return absl::InvalidArgumentError(StrCat("synth needs '", key, "'"));
      }
    }
    KEPS_ASSIGN_OR_RETURN(auto kind, Scalar<std::string>(s["kind"], "kind"));
    KEPS_ASSIGN_OR_RETURN(sc.kind, ParseSynthKind(kind));
    KEPS_ASSIGN_OR_RETURN(sc.column, Scalar<std::string>(s["column"], "column"));
    KEPS_ASSIGN_OR_RETURN(sc.age_column,
                          Scalar<std::string>(s["age_column"], "age_column"));
    KEPS_ASSIGN_OR_RETURN(
        sc.gender_column, Scalar<std::string>(s["gender_column"], "gender_column"));
    if (s["reference_year"]) {
      KEPS_ASSIGN_OR_RETURN(double y, Scalar<double>(s["reference_year"],
                                                     "reference_year"));
      sc.reference_year = y;
    }
    KEPS_ASSIGN_OR_RETURN(auto params,
                          Scalar<std::string>(s["parameters"], "parameters"));
    sc.parameters =
        params == "defaults" ? params : Resolve(base_dir, params).string();
    cfg.synth = std::move(sc);
  }

  if (const YAML::Node g = root["grid"]) {
    KEPS_RETURN_IF_ERROR(CheckKeys(g, {"k", "eps"}, "grid"));
    if (g["k"]) {
      KEPS_ASSIGN_OR_RETURN(cfg.grid_k, List<int>(g["k"], "grid.k"));
    }
    if (g["eps"]) {
      KEPS_ASSIGN_OR_RETURN(cfg.grid_eps, List<double>(g["eps"], "grid.eps"));
    }
  }
  KEPS_RETURN_IF_ERROR(cfg.Validate());
  return cfg;
}

inline absl::StatusOr<RunConfig> LoadRunConfig(
    const std::filesystem::path& path) {
  KEPS_ASSIGN_OR_RETURN(std::string text, ReadFileToString(path));
  auto cfg = ParseRunConfig(text, path.parent_path());
  if (!cfg.ok()) {
    return absl::Status(cfg.status().code(),
                        StrCat(path.string(), ": ", cfg.status().message()));
  }
  return cfg;
}

// Echo of the configuration for reports.
inline nlohmann::json RunConfigToJson(const RunConfig& cfg) {
  nlohmann::json j;
  j["input"] = cfg.input.string();
  j["algorithm"] = AlgorithmName(cfg.algorithm);
  j["k"] = cfg.k;
  j["max_suppression"] = cfg.max_suppression;
  j["eps"] = cfg.eps;
  j["confidence"] =
      cfg.confidence ? nlohmann::json(*cfg.confidence) : nlohmann::json();
  j["seed"] = cfg.seed;
  j["runs"] = cfg.runs;
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : cfg.columns) {
    nlohmann::json jc = {{"name", c.name},
                         {"kind", ColumnKindName(c.kind)},
                         {"role", RoleName(c.role)}};
    if (c.hierarchy) jc["hierarchy"] = *c.hierarchy;
    if (!c.order.empty()) jc["order"] = c.order;
    cols.push_back(std::move(jc));
  }
  j["columns"] = std::move(cols);
  if (cfg.synth) {
    j["synth"] = {{"kind", cfg.synth->kind == SynthKind::kHeight ? "height"
                                                                 : "weight"},
                  {"column", cfg.synth->column},
                  {"age_column", cfg.synth->age_column},
                  {"gender_column", cfg.synth->gender_column},
                  {"parameters", cfg.synth->parameters}};
    if (cfg.synth->reference_year) {
      j["synth"]["reference_year"] = *cfg.synth->reference_year;
    }
  }
  return j;
}

}  // namespace kepsilon

#endif  // KEPSILON_CONFIG_HPP_
