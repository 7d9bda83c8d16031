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

// Paired real/synthetic datasets.
//
// Manifest schema (paths relative to the manifest file):
//
//   {
//     "selector":   { grid_rows, grid_cols, area_threshold, score_threshold,
//                     passthrough, [pia, sia, summary] },
//     "generators": ["syn_carla", ...],
//     "samples": [
//       { "id": "000123",
//         "real_image": "real/000123.png",
//         "labels": "label_2/000123.txt",
//         "synthetic": { "syn_carla": "carla/000123.png", ... },
//         "extra_attributes": { "rain": 1 },          // optional
//         "extra_real": ["real/000123_b.png"] }       // optional
//     ]
//   }
//
// The real images of a sample (real_image followed by extra_real) are the
// collected stand-in for all real images matching its scenario.

#ifndef SAFIDEL_MANIFEST_H_
#define SAFIDEL_MANIFEST_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "safidel/geometry.h"
#include "safidel/scenario.h"

namespace safidel {

struct PairedSample {
  std::string sample_id;
  // Resolved paths.
  std::string real_image;
  std::vector<std::string> extra_real_images;
  std::string labels;
  std::map<std::string, std::string> synthetic_images;
  ImageSize image_size;
  std::vector<GroundTruthObject> ground_truth;
  ScenarioDescription sd;

  // real_image first, then extra_real_images.
  std::vector<std::string> RealImages() const;
};

struct PairedDataset {
  std::vector<PairedSample> samples;
  std::vector<std::string> generators;
  AttributeSelector selector;
  std::vector<std::string> warnings;

  bool HasGenerator(const std::string& name) const;
};

// Command-line values that take precedence over the manifest selector.
struct SelectorOverrides {
  std::optional<int> grid_rows;
  std::optional<int> grid_cols;
  std::optional<double> area_threshold;
  std::optional<double> score_threshold;

  void ApplyTo(AttributeSelector& sel) const;
};

// Validates schema, id uniqueness, file existence and per-generator
// completeness, then derives each scenario from its labels.
absl::StatusOr<PairedDataset> LoadManifest(
    const std::string& path, const SelectorOverrides& overrides = {});

}  // namespace safidel

#endif  // SAFIDEL_MANIFEST_H_
