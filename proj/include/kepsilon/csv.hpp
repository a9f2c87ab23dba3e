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

// Minimal CSV dialect: comma delimiter, first line is the header, optional
// double-quote quoting with "" as the escaped quote. Quoted fields may span
// lines. A trailing newline is optional; blank lines are skipped.

#ifndef KEPSILON_CSV_HPP_
#define KEPSILON_CSV_HPP_

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "kepsilon/status.hpp"

namespace kepsilon {

using CsvRow = std::vector<std::string>;

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;
};

inline absl::StatusOr<std::vector<CsvRow>> ParseCsvRecords(
    std::string_view text) {
  std::vector<CsvRow> records;
  CsvRow current;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool row_has_content = false;
  std::size_t line = 1;

  auto end_field = [&]() {
    current.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&]() {
    if (row_has_content || !current.empty()) {
      end_field();
      records.push_back(std::move(current));
    }
    current.clear();
    field.clear();
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          return absl::InvalidArgumentError(
              StrCat("csv line ", line, ": stray quote inside field"));
        }
        in_quotes = true;
        field_was_quoted = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) {
    return absl::InvalidArgumentError("csv: unterminated quoted field");
  }
  end_row();
  return records;
}

inline absl::StatusOr<std::string> ReadFileToString(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        StrCat("cannot open '", path.string(), "'"));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline absl::StatusOr<CsvTable> ReadCsv(const std::filesystem::path& path) {
  auto text = ReadFileToString(path);
  if (!text.ok()) return text.status();
  auto records = ParseCsvRecords(*text);
  if (!records.ok()) {
    return absl::InvalidArgumentError(
        StrCat(path.string(), ": ", records.status().message()));
  }
  if (records->empty()) {
    return absl::InvalidArgumentError(
        StrCat(path.string(), ": missing header row"));
  }
  CsvTable table;
  table.header = std::move(records->front());
  table.rows.assign(std::make_move_iterator(records->begin() + 1),
                    std::make_move_iterator(records->end()));
  return table;
}

inline std::string QuoteCsvField(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos &&
      (field.empty() || (field.front() != ' ' && field.back() != ' '))) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void AppendCsvRow(std::string& out, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += QuoteCsvField(row[i]);
  }
  out.push_back('\n');
}

inline absl::Status WriteStringToFile(const std::filesystem::path& path,
                                      std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        StrCat("cannot write '", path.string(), "'"));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    return absl::DataLossError(
        StrCat("short write to '", path.string(), "'"));
  }
  return absl::OkStatus();
}

// Shortest decimal text that parses back to exactly `value`.
inline std::string FormatNumber(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

inline std::string_view TrimSpaces(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

// Parses a finite real; the whole (space-trimmed) token must be consumed.
inline bool ParseFiniteDouble(std::string_view text, double& out) {
  text = TrimSpaces(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() &&
         std::isfinite(out);
}

}  // namespace kepsilon

#endif  // KEPSILON_CSV_HPP_
