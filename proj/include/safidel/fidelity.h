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

// Instance-level fidelity of one synthetic sample against the real samples
// sharing its scenario description.
//
// The real set passed in is the collected approximation of every real image
// matching the scenario, so every reported min_distance is an upper bound on
// the distance to the true real-world set. Checks are one-sided: they ask
// whether the synthetic sample is reproduced somewhere in the real set.

#ifndef SAFIDEL_FIDELITY_H_
#define SAFIDEL_FIDELITY_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "safidel/geometry.h"
#include "safidel/image.h"
#include "safidel/scenario.h"

namespace safidel {

enum class Metric { kL1, kL2, kLinf };

struct FidelityQuery {
  Metric metric = Metric::kL2;
  double epsilon = 1.0;
  // Latent-feature layers; ignored by the other checks.
  std::vector<std::string> layers;
  // Divide L1 by n and L2 by sqrt(n) (mean / RMS per element). Linf is
  // unaffected.
  bool per_element_mean = false;
};

struct FidelityVerdict {
  double min_distance = 0.0;
  bool holds = false;
  // Index into the real set of the nearest (or first witnessing) member.
  std::optional<size_t> witness_index;
  std::optional<std::string> witness_id;
};

struct InconsistencyCount {
  // Undetected in real but detected in synthetic.
  int false_negatives = 0;
  // Detected in real but undetected in synthetic.
  int false_positives = 0;
  int total = 0;
  int num_objects = 0;

  friend bool operator==(const InconsistencyCount&,
                         const InconsistencyCount&) = default;
};

enum class CountMode { kSafetyRelevant, kAllObjects };

struct MatchResult {
  // One entry per ground-truth object; DontCare entries are always empty.
  std::vector<std::optional<size_t>> gt_to_det;
  // Detections swallowed by a DontCare region. They are not false positives.
  std::vector<size_t> absorbed;

  bool Detected(size_t gt_index) const {
    return gt_to_det[gt_index].has_value();
  }
};

inline constexpr double kDefaultIouMin = 0.5;

absl::StatusOr<double> VectorDistance(Metric metric, std::span<const double> x,
                                      std::span<const double> y);

double Iou(const BoundingBox& a, const BoundingBox& b);

// Greedy one-to-one matching. Detections are visited by descending score
// (stable on ties); each claims the unmatched same-label ground truth with
// the highest IoU >= iou_min, or else is absorbed by an overlapping DontCare.
MatchResult MatchDetections(const std::vector<Detection>& dets,
                            const std::vector<GroundTruthObject>& gt,
                            double iou_min);

// Fixed-length view of a variable-length detector output: per grid cell the
// highest score among detections centred there (0 when empty), row-major.
std::vector<double> EmbedOutput(const DetectionSet& dets,
                                const AttributeSelector& sel,
                                ImageSize image_size);

absl::StatusOr<FidelityVerdict> IvFidelity(const ImageTensor& x_syn,
                                           std::span<const ImageTensor> rw,
                                           const FidelityQuery& q);

absl::StatusOr<FidelityVerdict> OvFidelity(
    const DetectionSet& dets_syn, std::span<const DetectionSet> dets_rw,
    const FidelityQuery& q, const AttributeSelector& sel, ImageSize image_size);

// min_distance is the smallest worst-layer distance over the real set.
absl::StatusOr<FidelityVerdict> LfFidelity(const DetectionSet& feat_syn,
                                           std::span<const DetectionSet> feat_rw,
                                           const FidelityQuery& q);

// min_distance is 0 when some real member is safety-similar, else 1.
absl::StatusOr<FidelityVerdict> SaFidelity(
    const DetectionSet& dets_syn, std::span<const DetectionSet> dets_rw,
    const ScenarioDescription& sd, const AttributeSelector& sel,
    ImageSize image_size);

// Objects considered: non-DontCare ground truth, further restricted to
// area >= sel.area_threshold in kSafetyRelevant mode. Detections below
// sel.score_threshold are ignored.
InconsistencyCount CountInconsistencies(
    const std::vector<GroundTruthObject>& gt, const DetectionSet& dets_real,
    const DetectionSet& dets_syn, const AttributeSelector& sel,
    double iou_min, CountMode mode);

// |FNR_real - FNR_syn| over the objects selected by `mode` (safety relevant
// by default); 0 when there are none.
double FnrConsistency(const std::vector<GroundTruthObject>& gt,
                      const DetectionSet& dets_real,
                      const DetectionSet& dets_syn,
                      const AttributeSelector& sel, double iou_min,
                      CountMode mode = CountMode::kSafetyRelevant);

std::string MetricName(Metric metric);
absl::StatusOr<Metric> ParseMetric(absl::string_view name);
std::string CountModeName(CountMode mode);

}  // namespace safidel

#endif  // SAFIDEL_FIDELITY_H_
