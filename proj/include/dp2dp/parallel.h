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

#ifndef DP2DP_PARALLEL_H_
#define DP2DP_PARALLEL_H_

#include <cstddef>

namespace dp2dp {

// Selects between the OpenMP kernel and the serial reference kernel of the
// data-parallel hot loops. Both produce the same result; kernels whose
// reduction order differs between the two variants document the tolerance.
enum class Exec { kSerial, kParallel };

// Number of OpenMP threads available to kParallel kernels (1 without OpenMP).
int MaxThreads();
void SetMaxThreads(int threads);

// Row-block size used by blocked reductions. Partial sums are formed per
// block and combined in block order, so parallel results do not depend on
// the thread count.
inline constexpr std::size_t kReductionBlock = 256;

}  // namespace dp2dp

#endif  // DP2DP_PARALLEL_H_
