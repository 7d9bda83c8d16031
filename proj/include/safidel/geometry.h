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

// Detection and ground-truth carriers shared by every module.

#ifndef SAFIDEL_GEOMETRY_H_
#define SAFIDEL_GEOMETRY_H_

#include <map>
#include <string>
#include <vector>

#include "absl/status/status.h"

namespace safidel {

// Axis-aligned box in pixel coordinates, origin top-left.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double Width() const { return x2 - x1; }
  double Height() const { return y2 - y1; }
  double Area() const { return Width() * Height(); }
  double CenterX() const { return 0.5 * (x1 + x2); }
  double CenterY() const { return 0.5 * (y1 + y2); }
  bool IsValid() const;

  // Intersection with [0,width]x[0,height]. May be degenerate.
  BoundingBox ClampTo(double width, double height) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct Detection {
  std::string label;
  BoundingBox bbox;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Perception output for one image: boxes plus optional per-layer features.
struct DetectionSet {
  std::string image_id;
  std::vector<Detection> detections;
  std::map<std::string, std::vector<double>> features;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

// One row of a KITTI label file.
struct GroundTruthObject {
  std::string label;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  BoundingBox bbox;
  double height_m = 0.0;
  double width_m = 0.0;
  double length_m = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rotation_y = 0.0;
  bool dont_care = false;

  friend bool operator==(const GroundTruthObject&,
                         const GroundTruthObject&) = default;
};

inline constexpr char kDontCareLabel[] = "DontCare";

// Case-insensitive label comparison ("Car" from KITTI vs "car" from COCO
// detectors).
bool SameLabel(const std::string& a, const std::string& b);

absl::Status ValidateDetection(const Detection& det);

}  // namespace safidel

#endif  // SAFIDEL_GEOMETRY_H_
