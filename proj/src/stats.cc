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


#include "safidel/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "absl/strings/str_cat.h"

namespace safidel {
namespace {

absl::Status CheckSamples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    return absl::InvalidArgumentError("Mann-Whitney U needs two non-empty samples");
  }
  for (std::span<const double> s : {a, b}) {
    for (double v : s) {
      if (std::isnan(v)) return absl::InvalidArgumentError("sample contains NaN");
    }
  }
  return absl::OkStatus();
}

struct Ranked {
  // Twice the midrank, so ties stay integral.
  std::vector<int> doubled_rank_a;
  std::vector<int> doubled_rank_all;
  // Sum over tie groups of t^3 - t.
  double tie_term = 0.0;
};

Ranked RankPooled(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size() + b.size();
  std::vector<std::pair<double, bool>> pooled;
  pooled.reserve(n);
  for (double v : a) pooled.push_back({v, true});
  for (double v : b) pooled.push_back({v, false});
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  Ranked r;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    // Ranks i+1..j; midrank (i+1+j)/2.
    const int doubled = static_cast<int>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    r.tie_term += t * t * t - t;
    for (size_t k = i; k < j; ++k) {
      r.doubled_rank_all.push_back(doubled);
      if (pooled[k].second) r.doubled_rank_a.push_back(doubled);
    }
    i = j;
  }
  return r;
}

double UFromRanks(const Ranked& r, size_t na) {
  const double rank_sum =
      0.5 * std::accumulate(r.doubled_rank_a.begin(), r.doubled_rank_a.end(), 0.0);
  return rank_sum - 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
}

double ExactP(const Ranked& r, size_t na, size_t nb) {
  const size_t n = na + nb;
  const int max_sum =
      std::accumulate(r.doubled_rank_all.begin(), r.doubled_rank_all.end(), 0);
  // ways[k][s]: subsets of size k whose doubled ranks sum to s.
  std::vector<std::vector<double>> ways(
      na + 1, std::vector<double>(static_cast<size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (size_t i = 0; i < n; ++i) {
    const int w = r.doubled_rank_all[i];
    for (size_t k = std::min(na, i + 1); k >= 1; --k) {
      for (int s = max_sum; s >= w; --s) ways[k][s] += ways[k - 1][s - w];
    }
  }
  const double mean_u = 0.5 * static_cast<double>(na * nb);
  const double offset = 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
  const double observed = std::abs(UFromRanks(r, na) - mean_u);
  double extreme = 0.0;
  double total = 0.0;
  for (int s = 0; s <= max_sum; ++s) {
    const double count = ways[na][s];
    if (count == 0.0) continue;
    total += count;
    const double u = 0.5 * s - offset;
    if (std::abs(u - mean_u) >= observed - 1e-9) extreme += count;
  }
  return std::min(1.0, extreme / total);
}

double NormalP(const Ranked& r, size_t na, size_t nb) {
  const double n1 = static_cast<double>(na);
  const double n2 = static_cast<double>(nb);
  const double n = n1 + n2;
  const double mean_u = 0.5 * n1 * n2;
  const double var =
      n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double dev = std::abs(UFromRanks(r, na) - mean_u) - 0.5;
  const double z = std::max(0.0, dev) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace

double SortedQuantile(std::span<const double> sorted, double q) {
  const double pos = static_cast<double>(sorted.size() - 1) * q;
  const size_t lo = static_cast<size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

absl::StatusOr<BoxStats> ComputeBoxStats(std::span<const double> values) {
  if (values.empty()) {
    return absl::InvalidArgumentError("box statistics need at least one value");
  }
  std::vector<double> v(values.begin(), values.end());
  for (double x : v) {
    if (!std::isfinite(x)) return absl::InvalidArgumentError("non-finite value");
  }
  std::sort(v.begin(), v.end());
  BoxStats s;
  s.n = v.size();
  s.min = v.front();
  s.max = v.back();
  s.q1 = SortedQuantile(v, 0.25);
  s.median = SortedQuantile(v, 0.5);
  s.q3 = SortedQuantile(v, 0.75);
  // Sorted summation keeps the mean independent of input order.
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(s.n);
  return s;
}

absl::StatusOr<MannWhitneyResult> MannWhitneyU(std::span<const double> a,
                                               std::span<const double> b) {
  if (absl::Status st = CheckSamples(a, b); !st.ok()) return st;
  const Ranked r = RankPooled(a, b);
  MannWhitneyResult out;
  out.u = UFromRanks(r, a.size());
  out.exact = a.size() + b.size() <= kMannWhitneyExactMaxN;
  out.p = out.exact ? ExactP(r, a.size(), b.size())
                    : NormalP(r, a.size(), b.size());
  return out;
}

absl::StatusOr<double> MannWhitneyExactP(std::span<const double> a,
                                         std::span<const double> b) {
  if (absl::Status st = CheckSamples(a, b); !st.ok()) return st;
  if (a.size() + b.size() > 40) {
    return absl::InvalidArgumentError(absl::StrCat(
        "exact enumeration is limited to 40 pooled values, got ",
        a.size() + b.size()));
  }
  return ExactP(RankPooled(a, b), a.size(), b.size());
}

absl::StatusOr<double> MannWhitneyNormalP(std::span<const double> a,
                                          std::span<const double> b) {
  if (absl::Status st = CheckSamples(a, b); !st.ok()) return st;
  return NormalP(RankPooled(a, b), a.size(), b.size());
}

}  // namespace safidel
