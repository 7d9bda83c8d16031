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

// Calibration of a black-box synthetic data generator.
//
// The generator's output is post-processed by ApplyCalibrator(theta). For a
// paired dataset the objective is
//
//   J(theta) = sum over samples of
//              loss(project(interpret(f(real))),
//                   project(interpret(f(calibrate(synthetic, theta)))))
//
// where project keeps the safety-influencing attributes (SA mode) or every
// perceivable attribute (OV mode). The count and fnr losses replace the
// attribute comparison with per-object detection consistency. The search is
// black-box: exhaustive over a grid, or uniform random sampling.

#ifndef SAFIDEL_CALIBRATION_H_
#define SAFIDEL_CALIBRATION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "safidel/detector.h"
#include "safidel/enhance.h"
#include "safidel/fidelity.h"
#include "safidel/manifest.h"
#include "safidel/scenario.h"

namespace safidel {

struct ParamRange {
  double start = 1.0;
  double stop = 1.0;
  double step = 0.1;

  absl::Status Validate() const;
  // floor((stop - start) / step + 1 + 1e-9)
  size_t Count() const;
  // start + i * step rounded to 10 decimal places.
  double Value(size_t i) const;
};

// Axes left unset stay at the identity value.
struct ParamGrid {
  std::optional<ParamRange> contrast;
  std::optional<ParamRange> brightness;
  std::optional<ParamRange> sharpness;
  std::optional<ParamRange> blur_sigma;

  absl::Status Validate() const;
  size_t Size() const;
};

// contrast, brightness and sharpness each over 0.8:1.2:0.1; blur off.
ParamGrid DefaultGrid();

// "contrast=0.8:1.2:0.1,brightness=1.1,blur=0:1:0.5". A bare value v means
// v:v:1. Axis names: contrast, brightness, sharpness, blur.
absl::StatusOr<ParamGrid> ParseParamGrid(absl::string_view text);

// Lexicographic, contrast outermost, then brightness, sharpness, blur.
std::vector<CalibratorParams> EnumerateGrid(const ParamGrid& grid);

enum class CalibrationLoss { kNeq, kL1, kFnr, kCount };
enum class CalibrationMode { kSafetyAware, kOutputValue };

absl::StatusOr<CalibrationLoss> ParseCalibrationLoss(absl::string_view name);
std::string CalibrationLossName(CalibrationLoss loss);
std::string CalibrationModeName(CalibrationMode mode);

struct CalibrationOptions {
  CalibrationLoss loss = CalibrationLoss::kNeq;
  CalibrationMode mode = CalibrationMode::kSafetyAware;
  double iou_min = kDefaultIouMin;
  // Concurrent objective evaluations; forced to 1 for detectors that do not
  // accept concurrent calls.
  int jobs = 1;
};

struct TraceEntry {
  CalibratorParams params;
  double objective = 0.0;
};

struct CalibrationResult {
  CalibratorParams best;
  double best_objective = 0.0;
  CalibratorParams worst;
  double worst_objective = 0.0;
  // Evaluation order.
  std::vector<TraceEntry> trace;
};

// In-memory calibration sample.
struct CalibrationSample {
  std::string sample_id;
  ImageSize image_size;
  std::vector<GroundTruthObject> ground_truth;
  ScenarioDescription sd;
  // Synthetic image, held in memory or re-read from disk per evaluation.
  std::variant<ImageTensor, std::string> synthetic;
  // Used once to compute and cache the real-side detections.
  std::variant<ImageTensor, std::string> real;
};

// Per-sample state shared by every objective evaluation. Real-image
// detections are computed once here; they do not depend on theta.
class CalibrationProblem {
 public:
  static absl::StatusOr<CalibrationProblem> Create(
      std::vector<CalibrationSample> samples, AttributeSelector selector,
      Detector& detector, CalibrationOptions options);

  static absl::StatusOr<CalibrationProblem> FromDataset(
      const PairedDataset& ds, const std::string& generator, Detector& detector,
      CalibrationOptions options);

  absl::StatusOr<double> SampleLoss(size_t index,
                                    const DetectionSet& calibrated) const;
  absl::StatusOr<double> Objective(const CalibratorParams& params) const;

  size_t size() const { return samples_.size(); }
  const CalibrationOptions& options() const { return options_; }
  const std::vector<DetectionSet>& real_detections() const {
    return real_dets_;
  }

 private:
  CalibrationProblem(std::vector<CalibrationSample> samples,
                     AttributeSelector selector, Detector& detector,
                     CalibrationOptions options)
      : samples_(std::move(samples)),
        selector_(std::move(selector)),
        detector_(&detector),
        options_(options) {}

  std::vector<CalibrationSample> samples_;
  std::vector<DetectionSet> real_dets_;
  AttributeSelector selector_;
  Detector* detector_;
  CalibrationOptions options_;
};

// Evaluates `candidates` in order (possibly concurrently) and summarizes.
// Ties go to the earliest candidate for both best and worst.
absl::StatusOr<CalibrationResult> EvaluateCandidates(
    const CalibrationProblem& problem,
    const std::vector<CalibratorParams>& candidates);

absl::StatusOr<CalibrationResult> Calibrate(const CalibrationProblem& problem,
                                            const ParamGrid& grid);

absl::StatusOr<CalibrationResult> Calibrate(const PairedDataset& ds,
                                            const std::string& generator,
                                            Detector& detector,
                                            const ParamGrid& grid,
                                            const CalibrationOptions& options);

// Draws each axis present in `bounds` uniformly from [start, stop] (step is
// ignored) with a seeded 64-bit Mersenne twister.
std::vector<CalibratorParams> SampleRandomCandidates(const ParamGrid& bounds,
                                                     size_t n, uint64_t seed);

absl::StatusOr<CalibrationResult> RandomSearch(const CalibrationProblem& problem,
                                               const ParamGrid& bounds,
                                               size_t n_samples, uint64_t seed);

absl::StatusOr<CalibrationResult> RandomSearch(
    const PairedDataset& ds, const std::string& generator, Detector& detector,
    const ParamGrid& bounds, size_t n_samples, uint64_t seed,
    const CalibrationOptions& options);

// "(contrast,brightness,sharpness):objective", e.g. "(1.1,0.8,0.8):592".
std::string TableEntry(const CalibratorParams& params, double objective);

}  // namespace safidel

#endif  // SAFIDEL_CALIBRATION_H_
