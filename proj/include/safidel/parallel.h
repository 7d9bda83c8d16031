// Copyright 2026 The Safidel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAFIDEL_PARALLEL_H_
#define SAFIDEL_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace safidel {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is handed out in
// index order; callers write results into per-index slots so the outcome does
// not depend on scheduling. jobs <= 1 runs inline.
void ParallelFor(size_t n, int jobs, const std::function<void(size_t)>& fn);

}  // namespace safidel

#endif  // SAFIDEL_PARALLEL_H_
