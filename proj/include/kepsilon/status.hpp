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

#ifndef KEPSILON_STATUS_HPP_
#define KEPSILON_STATUS_HPP_

#include <string>
#include <string_view>
#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

#define KEPS_CONCAT_INNER_(a, b) a##b
#define KEPS_CONCAT_(a, b) KEPS_CONCAT_INNER_(a, b)

#define KEPS_RETURN_IF_ERROR(expr)              \
  do {                                          \
    if (absl::Status _keps_st = (expr);         \
        !_keps_st.ok()) {                       \
      return _keps_st;                          \
    }                                           \
  } while (false)

#define KEPS_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                \
  if (!tmp.ok()) return std::move(tmp).status();     \
  lhs = *std::move(tmp)

#define KEPS_ASSIGN_OR_RETURN(lhs, rexpr) \
  KEPS_ASSIGN_OR_RETURN_IMPL_(KEPS_CONCAT_(_keps_or_, __LINE__), lhs, rexpr)

namespace kepsilon {

namespace status_internal {

// The installed Abseil may not alias absl::string_view to std::string_view;
// bridge std::string_view arguments explicitly.
template <typename T>
const T& StrArg(const T& v) {
  return v;
}
inline absl::string_view StrArg(std::string_view v) {
  return absl::string_view(v.data(), v.size());
}

}  // namespace status_internal

// absl::StrCat that also accepts std::string_view pieces.
template <typename... Args>
std::string StrCat(const Args&... args) {
  return absl::StrCat(status_internal::StrArg(args)...);
}

// Prefixes the message of a non-OK status with the pipeline stage that
// produced it, keeping the status code.
inline absl::Status AnnotateStage(const absl::Status& status,
                                  std::string_view stage) {
  if (status.ok()) return status;
  return absl::Status(status.code(),
                      StrCat("[", stage, "] ", status.message()));
}

template <typename T>
absl::StatusOr<T> AnnotateStage(absl::StatusOr<T> result,
                                std::string_view stage) {
  if (result.ok()) return result;
  return AnnotateStage(result.status(), stage);
}

}  // namespace kepsilon

#endif  // KEPSILON_STATUS_HPP_
