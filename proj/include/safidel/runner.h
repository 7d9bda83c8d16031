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


// Batch runs behind the command-line subcommands.
//
// Exit codes: 0 success, 2 configuration or input error, 3 detector failure.
// A run that fails after starting still writes its report, containing every
// completed unit of work plus a failure record.

#ifndef SAFIDEL_RUNNER_H_
#define SAFIDEL_RUNNER_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "json.hpp"
#include "safidel/calibration.h"
#include "safidel/enhance.h"
#include "safidel/fidelity.h"
#include "safidel/manifest.h"
#include "safidel/report.h"

namespace safidel {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDetectorFailure = 3;

// Tool version baked in at build time.
const char* ToolVersion();

struct RunConfig {
  std::string manifest;
  // "mock[:k=v,...]", "cmd:<command line>" or "http://host:port".
  std::string detector = "mock";
  // Overrides the id derived from the detector spec.
  std::string detector_id;
  std::vector<std::string> layers;
  // Empty selects every generator in the manifest.
  std::vector<std::string> generators;
  SelectorOverrides overrides;
  double iou_min = kDefaultIouMin;
  // "sa", "ov" or "both".
  std::string mode = "both";
  int jobs = 1;
  uint64_t seed = 0;
  // Empty or "-" writes to stdout.
  std::string out;
  ReportFormat format = ReportFormat::kJson;

  // Optional fidelity verdicts in assess.
  Metric metric = Metric::kL2;
  bool per_element_mean = false;
  std::optional<double> iv_epsilon;
  std::optional<double> ov_epsilon;
  std::optional<double> lf_epsilon;

  // calibrate.
  std::string grid = "contrast=0.8:1.2:0.1,brightness=0.8:1.2:0.1,"
                     "sharpness=0.8:1.2:0.1";
  CalibrationLoss loss = CalibrationLoss::kNeq;
  // "grid" or "random".
  std::string search = "grid";
  size_t random_samples = 125;

  // External detectors only. Empty uses DefaultCacheDir().
  std::string cache_dir;
  bool use_cache = true;
  int timeout_ms = 300000;
};

// Applies the keys of a JSON config file. Unknown keys are an error.
absl::Status ApplyConfigJson(const nlohmann::ordered_json& j, RunConfig& cfg);
absl::Status LoadConfigFile(const std::string& path, RunConfig& cfg);

// SHA-256 over the settings that determine results; worker count and output
// destination are excluded.
std::string ConfigHash(const RunConfig& cfg, absl::string_view command);

int RunAssess(const RunConfig& cfg, std::ostream& log);
int RunCalibrate(const RunConfig& cfg, std::ostream& log);
int RunRank(const RunConfig& cfg, std::ostream& log);

struct TransformConfig {
  std::string in;
  std::string out;
  CalibratorParams params;
};

int RunTransform(const TransformConfig& cfg, std::ostream& log);

}  // namespace safidel

#endif  // SAFIDEL_RUNNER_H_
