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

#include "safidel/scenario.h"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"

namespace safidel {
namespace {

bool MatchesAny(const std::vector<std::string>& patterns,
                const std::string& name) {
  for (const std::string& p : patterns) {
    if (fnmatch(p.c_str(), name.c_str(), 0) == 0) return true;
  }
  return false;
}

int CellIndex(double coord, double extent, int cells) {
  double t = coord * cells / extent;
  double f = std::floor(t);
  int idx = static_cast<int>(f);
  if (t == f && idx > 0) --idx;
  return std::clamp(idx, 0, cells - 1);
}

struct CellName {
  int row;
  int col;
  bool near;
};

std::optional<CellName> ParseCellName(const std::string& name) {
  std::vector<std::string> parts = absl::StrSplit(name, '_');
  if (parts.size() != 4 || parts[0] != "cell") return std::nullopt;
  CellName out;
  if (!absl::SimpleAtoi(parts[1], &out.row) ||
      !absl::SimpleAtoi(parts[2], &out.col)) {
    return std::nullopt;
  }
  if (parts[3] == "near") {
    out.near = true;
  } else if (parts[3] == "any") {
    out.near = false;
  } else {
    return std::nullopt;
  }
  if (out.row < 0 || out.col < 0) return std::nullopt;
  return out;
}

// Per-cell and whole-image occupancy of a set of boxes.
struct Occupancy {
  std::vector<bool> near;
  std::vector<bool> any;
  bool summary_near = false;
  bool summary_far = false;
  bool summary_any = false;
};

Occupancy ComputeOccupancy(const std::vector<BoundingBox>& boxes,
                           ImageSize size, const AttributeSelector& sel) {
  const size_t cells = static_cast<size_t>(sel.grid_rows) * sel.grid_cols;
  Occupancy occ{std::vector<bool>(cells, false),
                std::vector<bool>(cells, false)};
  for (const BoundingBox& raw : boxes) {
    BoundingBox box = raw.ClampTo(size.width, size.height);
    if (!box.IsValid()) continue;
    auto [row, col] = CellOf(box.CenterX(), box.CenterY(), size, sel);
    const size_t idx = static_cast<size_t>(row) * sel.grid_cols + col;
    const bool large = box.Area() >= sel.area_threshold;
    occ.any[idx] = true;
    occ.summary_any = true;
    if (large) {
      occ.near[idx] = true;
      occ.summary_near = true;
    } else {
      occ.summary_far = true;
    }
  }
  return occ;
}

absl::Status CheckImageSize(ImageSize size) {
  if (size.width <= 0 || size.height <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("image size must be positive, got ", size.width, "x",
                     size.height));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ValidateAttribute(const Attribute& attr) {
  if (attr.name.empty()) {
    return absl::InvalidArgumentError("attribute name must be non-empty");
  }
  if (!std::isfinite(attr.value)) {
    return absl::InvalidArgumentError(
        absl::StrCat("attribute ", attr.name, " has non-finite value"));
  }
  return absl::OkStatus();
}

absl::StatusOr<ScenarioDescription> ScenarioDescription::FromAttributes(
    const std::vector<Attribute>& attrs) {
  ScenarioDescription sd;
  for (const Attribute& a : attrs) {
    if (sd.attributes.count(a.name)) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate attribute ", a.name));
    }
    absl::Status st = sd.Set(a.name, a.value);
    if (!st.ok()) return st;
  }
  return sd;
}

absl::Status ScenarioDescription::Set(const std::string& name, double value) {
  absl::Status st = ValidateAttribute({name, value});
  if (!st.ok()) return st;
  attributes[name] = value;
  return absl::OkStatus();
}

std::vector<std::string> ScenarioDescription::Names() const {
  std::vector<std::string> names;
  names.reserve(attributes.size());
  for (const auto& [name, value] : attributes) names.push_back(name);
  return names;
}

std::string DebugString(const ScenarioDescription& sd) {
  return absl::StrCat(
      "{",
      absl::StrJoin(sd.attributes, ", ",
                    [](std::string* out, const auto& kv) {
                      absl::StrAppend(out, "(", kv.first, ",", kv.second, ")");
                    }),
      "}");
}

absl::Status AttributeSelector::Validate() const {
  if (grid_rows < 1 || grid_cols < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "grid must be at least 1x1, got ", grid_rows, "x", grid_cols));
  }
  if (!std::isfinite(area_threshold) || area_threshold < 0.0) {
    return absl::InvalidArgumentError("area_threshold must be >= 0");
  }
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    return absl::InvalidArgumentError("score_threshold must lie in [0,1]");
  }
  for (const std::string& s : sia_names) {
    if (!MatchesAny(pia_names, s)) {
      return absl::InvalidArgumentError(
          absl::StrCat("sia pattern '", s, "' is not covered by pia"));
    }
  }
  for (const std::string& p : passthrough_names) {
    if (MatchesAny(pia_names, p)) {
      return absl::InvalidArgumentError(
          absl::StrCat("passthrough attribute '", p, "' overlaps pia"));
    }
  }
  return absl::OkStatus();
}

bool AttributeSelector::IsPia(const std::string& name) const {
  return !IsPassthrough(name) && MatchesAny(pia_names, name);
}

bool AttributeSelector::IsSia(const std::string& name) const {
  return IsPia(name) && MatchesAny(sia_names, name);
}

bool AttributeSelector::IsPassthrough(const std::string& name) const {
  return std::find(passthrough_names.begin(), passthrough_names.end(), name) !=
         passthrough_names.end();
}

std::string CellAttributeName(int row, int col, bool near) {
  return absl::StrCat("cell_", row, "_", col, near ? "_near" : "_any");
}

std::pair<int, int> CellOf(double x, double y, ImageSize size,
                           const AttributeSelector& sel) {
  return {CellIndex(y, size.height, sel.grid_rows),
          CellIndex(x, size.width, sel.grid_cols)};
}

ScenarioDescription Pia(const ScenarioDescription& sd,
                        const AttributeSelector& sel) {
  ScenarioDescription out;
  out.source_id = sd.source_id;
  for (const auto& [name, value] : sd.attributes) {
    if (sel.IsPia(name)) out.attributes.emplace(name, value);
  }
  return out;
}

ScenarioDescription Sia(const ScenarioDescription& sd,
                        const AttributeSelector& sel) {
  ScenarioDescription out;
  out.source_id = sd.source_id;
  for (const auto& [name, value] : sd.attributes) {
    if (sel.IsSia(name)) out.attributes.emplace(name, value);
  }
  return out;
}

absl::StatusOr<ScenarioDescription> EncodeGroundTruth(
    const std::vector<GroundTruthObject>& objects, ImageSize image_size,
    const AttributeSelector& sel, const ScenarioDescription& extra) {
  if (absl::Status st = CheckImageSize(image_size); !st.ok()) return st;
  if (absl::Status st = sel.Validate(); !st.ok()) return st;

  std::vector<BoundingBox> boxes;
  for (const GroundTruthObject& obj : objects) {
    if (!obj.dont_care) boxes.push_back(obj.bbox);
  }
  Occupancy occ = ComputeOccupancy(boxes, image_size, sel);

  ScenarioDescription sd;
  sd.source_id = extra.source_id;
  for (int r = 0; r < sel.grid_rows; ++r) {
    for (int c = 0; c < sel.grid_cols; ++c) {
      const size_t idx = static_cast<size_t>(r) * sel.grid_cols + c;
      sd.attributes[CellAttributeName(r, c, true)] = occ.near[idx] ? 1.0 : 0.0;
      sd.attributes[CellAttributeName(r, c, false)] = occ.any[idx] ? 1.0 : 0.0;
    }
  }
  for (const auto& [name, value] : extra.attributes) {
    if (sd.attributes.count(name) || ParseCellName(name).has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("extra attribute '", name,
                       "' collides with a grid-cell attribute"));
    }
    if (absl::Status st = sd.Set(name, value); !st.ok()) return st;
  }
  return sd;
}

absl::StatusOr<ScenarioDescription> Interpret(const DetectionSet& dets,
                                              const ScenarioDescription& sd,
                                              const AttributeSelector& sel,
                                              ImageSize image_size) {
  if (absl::Status st = CheckImageSize(image_size); !st.ok()) return st;
  if (sd.source_id.has_value() && !dets.image_id.empty() &&
      *sd.source_id != dets.image_id) {
    return absl::FailedPreconditionError(
        absl::StrCat("detections for image '", dets.image_id,
                     "' interpreted against scenario of '", *sd.source_id,
                     "'"));
  }

  std::vector<BoundingBox> boxes;
  for (const Detection& d : dets.detections) {
    if (d.score >= sel.score_threshold) boxes.push_back(d.bbox);
  }
  Occupancy occ = ComputeOccupancy(boxes, image_size, sel);

  ScenarioDescription out;
  out.source_id = sd.source_id;
  for (const auto& [name, value] : sd.attributes) {
    if (!sel.IsPia(name)) {
      out.attributes.emplace(name, value);
      continue;
    }
    if (std::optional<CellName> cell = ParseCellName(name);
        cell.has_value() && cell->row < sel.grid_rows &&
        cell->col < sel.grid_cols) {
      const size_t idx = static_cast<size_t>(cell->row) * sel.grid_cols +
                         cell->col;
      const bool hit = cell->near ? occ.near[idx] : occ.any[idx];
      out.attributes.emplace(name, hit ? 1.0 : 0.0);
      continue;
    }
    auto summary = sel.summary_attributes.find(name);
    if (summary == sel.summary_attributes.end()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "pia attribute '", name, "' cannot be derived from detections"));
    }
    bool hit = false;
    switch (summary->second) {
      case SummaryKind::kNear:
        hit = occ.summary_near;
        break;
      case SummaryKind::kFar:
        hit = occ.summary_far;
        break;
      case SummaryKind::kAny:
        hit = occ.summary_any;
        break;
    }
    out.attributes.emplace(name, hit ? 1.0 : 0.0);
  }
  return out;
}

absl::StatusOr<bool> SafetySimilar(const ScenarioDescription& sd,
                                   const DetectionSet& a,
                                   const DetectionSet& b,
                                   const AttributeSelector& sel,
                                   ImageSize image_size) {
  absl::StatusOr<ScenarioDescription> ia = Interpret(a, sd, sel, image_size);
  if (!ia.ok()) return ia.status();
  absl::StatusOr<ScenarioDescription> ib = Interpret(b, sd, sel, image_size);
  if (!ib.ok()) return ib.status();
  return Sia(*ia, sel) == Sia(*ib, sel);
}

absl::StatusOr<double> AttrLoss(AttributeLoss kind,
                                const ScenarioDescription& a,
                                const ScenarioDescription& b) {
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  for (const auto& [name, value] : a.attributes) {
    if (!b.attributes.count(name)) only_a.push_back(name);
  }
  for (const auto& [name, value] : b.attributes) {
    if (!a.attributes.count(name)) only_b.push_back(name);
  }
  if (!only_a.empty() || !only_b.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "attribute name sets differ; only in first: [",
        absl::StrJoin(only_a, ","), "], only in second: [",
        absl::StrJoin(only_b, ","), "]"));
  }
  if (kind == AttributeLoss::kNeq) return a == b ? 0.0 : 1.0;
  double sum = 0.0;
  for (const auto& [name, value] : a.attributes) {
    sum += std::abs(value - b.attributes.at(name));
  }
  return sum;
}

}  // namespace safidel
