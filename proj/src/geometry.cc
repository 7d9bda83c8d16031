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

#include "safidel/geometry.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"

namespace safidel {

bool BoundingBox::IsValid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x2 > x1 && y2 > y1;
}

BoundingBox BoundingBox::ClampTo(double width, double height) const {
  BoundingBox out;
  out.x1 = std::clamp(x1, 0.0, width);
  out.y1 = std::clamp(y1, 0.0, height);
  out.x2 = std::clamp(x2, 0.0, width);
  out.y2 = std::clamp(y2, 0.0, height);
  return out;
}

bool SameLabel(const std::string& a, const std::string& b) {
  return absl::EqualsIgnoreCase(a, b);
}

absl::Status ValidateDetection(const Detection& det) {
  if (!det.bbox.IsValid()) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid bbox [", det.bbox.x1, ",", det.bbox.y1, ",",
                     det.bbox.x2, ",", det.bbox.y2, "]"));
  }
  if (!(det.score >= 0.0 && det.score <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("score ", det.score, " outside [0,1]"));
  }
  return absl::OkStatus();
}

}  // namespace safidel
