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

#include "safidel/kitti.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"

namespace safidel {
namespace {

absl::Status LineError(int line, absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("line ", line, ": ", what));
}

}  // namespace

absl::StatusOr<std::vector<GroundTruthObject>> ParseKittiLabels(
    absl::string_view text) {
  std::vector<GroundTruthObject> objects;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    std::vector<absl::string_view> cols =
        absl::StrSplit(line, absl::ByAnyChar(" \t\r"), absl::SkipEmpty());
    if (cols.size() != kKittiColumns) {
      return LineError(line_no, absl::StrCat("expected ", kKittiColumns,
                                             " columns, found ", cols.size()));
    }
    double v[kKittiColumns] = {};
    for (int i = 1; i < kKittiColumns; ++i) {
      if (i == 2) continue;
      if (!absl::SimpleAtod(cols[i], &v[i]) || !std::isfinite(v[i])) {
        return LineError(line_no, absl::StrCat("column ", i + 1,
                                               " is not a number: '", cols[i],
                                               "'"));
      }
    }
    GroundTruthObject obj;
    if (!absl::SimpleAtoi(cols[2], &obj.occluded)) {
      return LineError(line_no, absl::StrCat("column 3 is not an integer: '",
                                             cols[2], "'"));
    }
    obj.label = std::string(cols[0]);
    obj.truncated = v[1];
    obj.alpha = v[3];
    obj.bbox = {v[4], v[5], v[6], v[7]};
    obj.height_m = v[8];
    obj.width_m = v[9];
    obj.length_m = v[10];
    obj.x = v[11];
    obj.y = v[12];
    obj.z = v[13];
    obj.rotation_y = v[14];
    obj.dont_care = obj.label == kDontCareLabel;
    if (!obj.bbox.IsValid()) {
      return LineError(line_no, "bbox must satisfy right > left and "
                                "bottom > top");
    }
    objects.push_back(std::move(obj));
  }
  return objects;
}

absl::StatusOr<std::vector<GroundTruthObject>> LoadKittiLabels(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  absl::StatusOr<std::vector<GroundTruthObject>> parsed =
      ParseKittiLabels(ss.str());
  if (!parsed.ok()) {
    return absl::Status(parsed.status().code(),
                        absl::StrCat(path, ": ", parsed.status().message()));
  }
  return parsed;
}

std::string FormatKittiLabel(const GroundTruthObject& obj) {
  return absl::StrFormat(
      "%s %.2f %d %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f",
      obj.label, obj.truncated, obj.occluded, obj.alpha, obj.bbox.x1,
      obj.bbox.y1, obj.bbox.x2, obj.bbox.y2, obj.height_m, obj.width_m,
      obj.length_m, obj.x, obj.y, obj.z, obj.rotation_y);
}

}  // namespace safidel
