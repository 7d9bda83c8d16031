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

// KITTI object label files: one object per line, 15 whitespace-separated
// columns
//
//   type truncated occluded alpha left top right bottom h w l x y z rot_y

#ifndef SAFIDEL_KITTI_H_
#define SAFIDEL_KITTI_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "safidel/geometry.h"

namespace safidel {

inline constexpr int kKittiColumns = 15;

// Blank lines are skipped. Errors carry the 1-based line number.
absl::StatusOr<std::vector<GroundTruthObject>> ParseKittiLabels(
    absl::string_view text);

absl::StatusOr<std::vector<GroundTruthObject>> LoadKittiLabels(
    const std::string& path);

// Inverse of the parser, two decimals like the KITTI devkit.
std::string FormatKittiLabel(const GroundTruthObject& obj);

}  // namespace safidel

#endif  // SAFIDEL_KITTI_H_
