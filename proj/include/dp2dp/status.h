// Copyright 2026 The DP2DP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DP2DP_STATUS_H_
#define DP2DP_STATUS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace dp2dp {

// Error taxonomy. Each category maps onto one absl status code so callers can
// recover the category (and the CLI its exit code) from any returned status.
//
//   ConfigError  -> kInvalidArgument     (exit 2)
//   DataError    -> kFailedPrecondition  (exit 3)
//   NumericError -> kInternal            (exit 4)
absl::Status ConfigError(absl::string_view message);
absl::Status DataError(absl::string_view message);
absl::Status NumericError(absl::string_view message);

// Process exit code for a status: 0 ok, 2 config, 3 data, 4 numeric, 1 other.
int ExitCodeFor(const absl::Status& status);

}  // namespace dp2dp

#define DP2DP_STATUS_CONCAT_INNER_(x, y) x##y
#define DP2DP_STATUS_CONCAT_(x, y) DP2DP_STATUS_CONCAT_INNER_(x, y)

#define DP2DP_RETURN_IF_ERROR(expr)                \
  do {                                             \
    const absl::Status _dp2dp_status = (expr);     \
    if (!_dp2dp_status.ok()) return _dp2dp_status; \
  } while (0)

#define DP2DP_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                 \
  if (!statusor.ok()) return statusor.status();            \
  lhs = std::move(statusor).value()

#define DP2DP_ASSIGN_OR_RETURN(lhs, rexpr) \
  DP2DP_ASSIGN_OR_RETURN_IMPL_(            \
      DP2DP_STATUS_CONCAT_(_dp2dp_statusor_, __LINE__), lhs, rexpr)

#endif  // DP2DP_STATUS_H_
