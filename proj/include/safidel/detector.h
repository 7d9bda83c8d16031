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

// The perception function under test, seen as a black box.
//
// Real detectors live in another process and are reached through the wire
// protocol in protocol.h. The mock detector is an in-process deterministic
// stand-in that reads ground truth and decides per object whether the image
// region is bright and textured enough to be "seen".

#ifndef SAFIDEL_DETECTOR_H_
#define SAFIDEL_DETECTOR_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "safidel/geometry.h"
#include "safidel/image.h"

namespace safidel {

class Detector {
 public:
  virtual ~Detector() = default;

  // `ground_truth` is only consulted by the mock detector.
  virtual absl::StatusOr<DetectionSet> Detect(
      const ImageTensor& img, const std::string& image_id,
      std::span<const GroundTruthObject> ground_truth) = 0;

  // Cache namespace; distinct detectors must report distinct ids.
  virtual const std::string& id() const = 0;

  // Whether Detect may be called from several threads at once.
  virtual bool SupportsConcurrentCalls() const { return true; }
};

struct MockRule {
  double min_area = 500.0;
  double luma_lo = 0.2;
  double luma_hi = 0.8;
  double min_rms_contrast = 0.0;

  absl::Status Validate() const;
  friend bool operator==(const MockRule&, const MockRule&) = default;
};

// For every non-DontCare object: mean luma m and RMS contrast c of the bbox
// region (pixels whose centres lie inside the clamped box). The object is
// reported with its own label and box iff area >= min_area, m lies in
// [luma_lo, luma_hi] and c >= min_rms_contrast. Score is
// 0.5 + 0.5 * min(1, area / (2 * min_area)).
DetectionSet DetectMock(const MockRule& rule, const ImageTensor& img,
                        std::span<const GroundTruthObject> gt);

class MockDetector : public Detector {
 public:
  explicit MockDetector(MockRule rule, std::string id = "mock");

  absl::StatusOr<DetectionSet> Detect(
      const ImageTensor& img, const std::string& image_id,
      std::span<const GroundTruthObject> ground_truth) override;
  const std::string& id() const override { return id_; }

  const MockRule& rule() const { return rule_; }

 private:
  MockRule rule_;
  std::string id_;
};

enum class Transport { kSubprocessStdio, kHttp };

struct DetectorHandle {
  Transport transport = Transport::kSubprocessStdio;
  // Shell command line, or base URL such as http://127.0.0.1:8080.
  std::string endpoint;
  std::string detector_id;
  double score_threshold = 0.5;
  std::vector<std::string> requested_layers;
  // Per-request timeout.
  int timeout_ms = 300000;

  absl::Status Validate() const;
};

// Opens the transport (spawning the process for stdio). Concurrent calls are
// multiplexed over one connection and correlated by request id.
absl::StatusOr<std::unique_ptr<Detector>> ConnectDetector(
    const DetectorHandle& handle);

// Parsed form of the --detector flag:
//   cmd:<command line>     subprocess over stdio
//   http:<url>             HTTP (http://host:port also accepted)
//   mock[:k=v,...]         in-process mock; keys min_area, lo, hi, min_rms
struct DetectorSpec {
  bool is_mock = false;
  MockRule mock_rule;
  DetectorHandle handle;
};

absl::StatusOr<DetectorSpec> ParseDetectorSpec(const std::string& spec);

}  // namespace safidel

#endif  // SAFIDEL_DETECTOR_H_
