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

#ifndef DP2DP_TOOLS_CLI_H_
#define DP2DP_TOOLS_CLI_H_

#include <ostream>

namespace dp2dp::cli {

// Runs the dp2dp command line. Returns the process exit code: 0 on success,
// 2 for configuration errors, 3 for data errors, 4 for numeric errors and 1
// otherwise.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace dp2dp::cli

#endif  // DP2DP_TOOLS_CLI_H_
