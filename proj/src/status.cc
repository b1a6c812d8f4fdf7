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

#include "dp2dp/status.h"

namespace dp2dp {

absl::Status ConfigError(absl::string_view message) {
  return absl::InvalidArgumentError(message);
}

absl::Status DataError(absl::string_view message) {
  return absl::FailedPreconditionError(message);
}

absl::Status NumericError(absl::string_view message) {
  return absl::InternalError(message);
}

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kInvalidArgument:
      return 2;
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kDataLoss:
      return 3;
    case absl::StatusCode::kInternal:
    case absl::StatusCode::kOutOfRange:
      return 4;
    default:
      return 1;
  }
}

}  // namespace dp2dp
