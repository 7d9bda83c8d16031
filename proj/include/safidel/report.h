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


// Aggregation and rendering of assessment, ranking and calibration results.
//
// CSV output uses RFC 4180 quoting and prints reals with six decimals.
// Provenance is written as leading "# key=value" comment lines; without
// provenance an empty assessment renders as the header row alone.

#ifndef SAFIDEL_REPORT_H_
#define SAFIDEL_REPORT_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "safidel/calibration.h"
#include "safidel/fidelity.h"
#include "safidel/stats.h"

namespace safidel {

enum class ReportFormat { kJson, kCsv };

absl::StatusOr<ReportFormat> ParseReportFormat(absl::string_view name);

struct Provenance {
  std::string config_hash;
  std::string tool_version;
  std::string detector_id;

  bool empty() const {
    return config_hash.empty() && tool_version.empty() && detector_id.empty();
  }
};

// Set when a run stops early; the report still carries everything that
// completed before the failure.
struct FailureRecord {
  std::string detector;
  std::string generator;
  std::string sample_id;
  std::string message;
};

struct SampleResult {
  std::string detector;
  std::string generator;
  std::string sample_id;
  InconsistencyCount safety_relevant;
  InconsistencyCount all_objects;
  double fnr_consistency = 0.0;
  std::optional<FidelityVerdict> sa;
  std::optional<FidelityVerdict> ov;
  std::optional<FidelityVerdict> iv;
  std::optional<FidelityVerdict> lf;
};

struct RankEntry {
  std::string generator;
  std::string detector;
  // Per-sample inconsistency totals.
  std::vector<double> counts;
  BoxStats stats;
};

struct RankedEntry {
  RankEntry entry;
  // 1-based within the detector.
  int rank = 0;
  // Two-sided U-test against the entry ranked directly above.
  std::optional<double> p_vs_previous;
};

absl::StatusOr<RankEntry> MakeRankEntry(std::string generator,
                                        std::string detector,
                                        std::vector<double> counts);

// Groups by detector (ascending name), then orders by mean, median and
// generator name. Lower counts mean higher fidelity.
absl::StatusOr<std::vector<RankedEntry>> RankGenerators(
    std::vector<RankEntry> entries);

// One entry per (detector, generator) in first-appearance order, using the
// totals of the given counting mode.
absl::StatusOr<std::vector<RankEntry>> CollectRankEntries(
    const std::vector<SampleResult>& results, CountMode mode);

struct AssessReport {
  Provenance provenance;
  std::vector<SampleResult> samples;
  std::vector<RankedEntry> ranking_sa;
  std::vector<RankedEntry> ranking_ov;
  std::optional<FailureRecord> failure;
  std::vector<std::string> warnings;
};

struct CalibrationRecord {
  std::string detector;
  std::string generator;
  CalibrationLoss loss = CalibrationLoss::kNeq;
  CalibrationMode mode = CalibrationMode::kSafetyAware;
  // "grid" or "random".
  std::string search;
  CalibrationResult result;
};

struct CalibrateReport {
  Provenance provenance;
  std::vector<CalibrationRecord> records;
  std::optional<FailureRecord> failure;
  std::vector<std::string> warnings;
};

// CSV columns: detector, generator, sample_id, mode, fn, fp, total. Every
// sample contributes an "sa" and an "ov" row; a failure adds an "error" row.
std::string EmitReport(const AssessReport& report, ReportFormat format);

// Rankings only. CSV columns: detector, mode, rank, generator, n, mean, min,
// q1, median, q3, max, p_vs_previous (empty for the first rank).
std::string EmitRanking(const AssessReport& report, ReportFormat format);

// CSV columns: detector, generator, loss, mode, contrast, brightness,
// sharpness, blur, objective; one row per trace entry.
std::string EmitReport(const CalibrateReport& report, ReportFormat format);

// RFC 4180 field quoting.
std::string CsvField(absl::string_view s);

}  // namespace safidel

#endif  // SAFIDEL_REPORT_H_
