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

// Scenario descriptions and the interpretation of detector output.
//
// A scenario description is a set of named real-valued attributes. The
// default encoding splits the image into a grid and emits two binary
// attributes per cell:
//
//   cell_{r}_{c}_near  some object with area >= area_threshold is centred
//                      in the cell (safety influencing)
//   cell_{r}_{c}_any   some object is centred in the cell
//
// Interpreting a detector output rewrites exactly the attributes the
// perception unit can infer (pia) and copies everything else.

#ifndef SAFIDEL_SCENARIO_H_
#define SAFIDEL_SCENARIO_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "safidel/geometry.h"

namespace safidel {

struct Attribute {
  std::string name;
  double value = 0.0;
};

absl::Status ValidateAttribute(const Attribute& attr);

// Attributes iterate in lexicographic name order.
struct ScenarioDescription {
  std::map<std::string, double> attributes;
  // Image/sample the description was derived from, when known.
  std::optional<std::string> source_id;

  static absl::StatusOr<ScenarioDescription> FromAttributes(
      const std::vector<Attribute>& attrs);

  absl::Status Set(const std::string& name, double value);
  std::vector<std::string> Names() const;
  size_t size() const { return attributes.size(); }

  // Provenance does not take part in equality.
  friend bool operator==(const ScenarioDescription& a,
                         const ScenarioDescription& b) {
    return a.attributes == b.attributes;
  }
};

std::string DebugString(const ScenarioDescription& sd);

// Aggregate attributes computed over the whole image rather than a cell.
enum class SummaryKind {
  kNear,  // some object at or above the area threshold
  kFar,   // some object below the area threshold
  kAny,   // some object
};

struct AttributeSelector {
  int grid_rows = 3;
  int grid_cols = 4;
  // Objects with bbox area >= area_threshold (px^2) are safety relevant.
  double area_threshold = 2000.0;
  // Detections below this score do not establish object existence.
  double score_threshold = 0.5;
  // Glob patterns (fnmatch syntax).
  std::vector<std::string> pia_names = {"cell_*"};
  std::vector<std::string> sia_names = {"cell_*_near"};
  std::vector<std::string> passthrough_names;
  // Named whole-image attributes, e.g. {"frontcar", kNear}.
  std::map<std::string, SummaryKind> summary_attributes;

  absl::Status Validate() const;

  bool IsPia(const std::string& name) const;
  // Implies IsPia.
  bool IsSia(const std::string& name) const;
  bool IsPassthrough(const std::string& name) const;
};

std::string CellAttributeName(int row, int col, bool near);

// Grid cell containing the point. Points on an interior cell boundary go to
// the lower row/column index.
std::pair<int, int> CellOf(double x, double y, ImageSize size,
                           const AttributeSelector& sel);

ScenarioDescription Pia(const ScenarioDescription& sd,
                        const AttributeSelector& sel);
ScenarioDescription Sia(const ScenarioDescription& sd,
                        const AttributeSelector& sel);

// Grid-cell encoding of labelled ground truth. DontCare objects are ignored;
// boxes are clamped to the image. `extra` attributes are appended verbatim
// and must not collide with a cell attribute.
absl::StatusOr<ScenarioDescription> EncodeGroundTruth(
    const std::vector<GroundTruthObject>& objects, ImageSize image_size,
    const AttributeSelector& sel, const ScenarioDescription& extra = {});

// Rewrites the pia attributes of `sd` from `dets`, copying all others.
absl::StatusOr<ScenarioDescription> Interpret(const DetectionSet& dets,
                                              const ScenarioDescription& sd,
                                              const AttributeSelector& sel,
                                              ImageSize image_size);

// Output safety similarity: equal sia projections of both interpretations.
absl::StatusOr<bool> SafetySimilar(const ScenarioDescription& sd,
                                   const DetectionSet& a,
                                   const DetectionSet& b,
                                   const AttributeSelector& sel,
                                   ImageSize image_size);

enum class AttributeLoss { kNeq, kL1 };

// Both descriptions must carry the same attribute names.
absl::StatusOr<double> AttrLoss(AttributeLoss kind,
                                const ScenarioDescription& a,
                                const ScenarioDescription& b);

}  // namespace safidel

#endif  // SAFIDEL_SCENARIO_H_
