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


// Descriptive statistics and the Mann-Whitney U test.

#ifndef SAFIDEL_STATS_H_
#define SAFIDEL_STATS_H_

#include <span>

#include "absl/status/statusor.h"

namespace safidel {

// Quartiles use linear interpolation between order statistics: position
// p = (n - 1) q, value v[floor(p)] + frac(p) (v[floor(p) + 1] - v[floor(p)]).
struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  size_t n = 0;
  double mean = 0.0;

  friend bool operator==(const BoxStats&, const BoxStats&) = default;
};

absl::StatusOr<BoxStats> ComputeBoxStats(std::span<const double> values);

// Linear-interpolation quantile of already sorted values, q in [0, 1].
double SortedQuantile(std::span<const double> sorted, double q);

struct MannWhitneyResult {
  // Pairs with a > b plus half the ties.
  double u = 0.0;
  // Two-sided.
  double p = 1.0;
  bool exact = false;
};

// Largest pooled size for which MannWhitneyU enumerates exactly.
inline constexpr size_t kMannWhitneyExactMaxN = 16;

absl::StatusOr<MannWhitneyResult> MannWhitneyU(std::span<const double> a,
                                               std::span<const double> b);

// Both p-value routes, exposed for cross-checking. The exact route enumerates
// every split of the pooled midranks, so it is also exact under ties; it
// refuses pooled sizes above 40.
absl::StatusOr<double> MannWhitneyExactP(std::span<const double> a,
                                         std::span<const double> b);
absl::StatusOr<double> MannWhitneyNormalP(std::span<const double> a,
                                          std::span<const double> b);

}  // namespace safidel

#endif  // SAFIDEL_STATS_H_
