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

#include "safidel/serialization.h"

#include <string>

#include "absl/strings/str_cat.h"

namespace safidel {
namespace {

absl::Status Malformed(absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("malformed JSON: ", what));
}

const char* SummaryName(SummaryKind kind) {
  switch (kind) {
    case SummaryKind::kNear:
      return "near";
    case SummaryKind::kFar:
      return "far";
    case SummaryKind::kAny:
      return "any";
  }
  return "any";
}

absl::StatusOr<std::vector<std::string>> StringList(const Json& j,
                                                    absl::string_view key) {
  if (!j.is_array()) return Malformed(absl::StrCat(key, " must be an array"));
  std::vector<std::string> out;
  for (const Json& e : j) {
    if (!e.is_string()) {
      return Malformed(absl::StrCat(key, " entries must be strings"));
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

Json ToJson(const BoundingBox& box) {
  return Json::array({box.x1, box.y1, box.x2, box.y2});
}

Json ToJson(const Detection& det) {
  return Json{{"label", det.label}, {"bbox", ToJson(det.bbox)},
              {"score", det.score}};
}

Json ToJson(const DetectionSet& dets) {
  Json j;
  j["image_id"] = dets.image_id;
  j["detections"] = Json::array();
  for (const Detection& d : dets.detections) j["detections"].push_back(ToJson(d));
  j["features"] = Json::object();
  for (const auto& [layer, values] : dets.features) j["features"][layer] = values;
  return j;
}

Json ToJson(const AttributeSelector& sel) {
  Json j{{"grid_rows", sel.grid_rows},
         {"grid_cols", sel.grid_cols},
         {"area_threshold", sel.area_threshold},
         {"score_threshold", sel.score_threshold},
         {"passthrough", sel.passthrough_names},
         {"pia", sel.pia_names},
         {"sia", sel.sia_names}};
  j["summary"] = Json::object();
  for (const auto& [name, kind] : sel.summary_attributes) {
    j["summary"][name] = SummaryName(kind);
  }
  return j;
}

Json ToJson(const ScenarioDescription& sd) {
  Json j = Json::object();
  for (const auto& [name, value] : sd.attributes) j[name] = value;
  return j;
}

Json ToJson(const FidelityVerdict& v) {
  Json j{{"min_distance", v.min_distance}, {"holds", v.holds}};
  j["witness_id"] = v.witness_id ? Json(*v.witness_id) : Json(nullptr);
  return j;
}

Json ToJson(const InconsistencyCount& c) {
  return Json{{"false_negatives", c.false_negatives},
              {"false_positives", c.false_positives},
              {"total", c.total},
              {"num_objects", c.num_objects}};
}

Json ToJson(const CalibratorParams& p) {
  return Json{{"contrast", p.contrast},
              {"brightness", p.brightness},
              {"sharpness", p.sharpness},
              {"blur_sigma", p.blur_sigma}};
}

absl::StatusOr<BoundingBox> BoundingBoxFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    return Malformed("bbox must be an array [x1,y1,x2,y2]");
  }
  for (const Json& v : j) {
    if (!v.is_number()) return Malformed("bbox entries must be numbers");
  }
  return BoundingBox{j[0].get<double>(), j[1].get<double>(),
                     j[2].get<double>(), j[3].get<double>()};
}

absl::StatusOr<Detection> DetectionFromJson(const Json& j) {
  if (!j.is_object()) return Malformed("detection must be an object");
  if (!j.contains("label") || !j["label"].is_string()) {
    return Malformed("detection.label must be a string");
  }
  if (!j.contains("score") || !j["score"].is_number()) {
    return Malformed("detection.score must be a number");
  }
  if (!j.contains("bbox")) return Malformed("detection.bbox missing");
  absl::StatusOr<BoundingBox> box = BoundingBoxFromJson(j["bbox"]);
  if (!box.ok()) return box.status();
  Detection det{j["label"].get<std::string>(), *box, j["score"].get<double>()};
  if (absl::Status st = ValidateDetection(det); !st.ok()) return st;
  return det;
}

absl::StatusOr<DetectionSet> DetectionSetFromJson(const Json& j) {
  if (!j.is_object()) return Malformed("detection set must be an object");
  DetectionSet out;
  if (j.contains("image_id")) {
    if (!j["image_id"].is_string()) return Malformed("image_id must be a string");
    out.image_id = j["image_id"].get<std::string>();
  }
  if (j.contains("detections")) {
    if (!j["detections"].is_array()) return Malformed("detections must be an array");
    for (const Json& d : j["detections"]) {
      absl::StatusOr<Detection> det = DetectionFromJson(d);
      if (!det.ok()) return det.status();
      out.detections.push_back(*std::move(det));
    }
  }
  if (j.contains("features") && !j["features"].is_null()) {
    if (!j["features"].is_object()) return Malformed("features must be an object");
    for (const auto& [layer, values] : j["features"].items()) {
      if (!values.is_array()) return Malformed("feature vectors must be arrays");
      std::vector<double> vec;
      vec.reserve(values.size());
      for (const Json& v : values) {
        if (!v.is_number()) return Malformed("feature entries must be numbers");
        vec.push_back(v.get<double>());
      }
      out.features.emplace(layer, std::move(vec));
    }
  }
  return out;
}

absl::StatusOr<AttributeSelector> SelectorFromJson(
    const Json& j, const AttributeSelector& base) {
  if (!j.is_object()) return Malformed("selector must be an object");
  AttributeSelector sel = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "grid_rows" || key == "grid_cols") {
      if (!value.is_number_integer()) {
        return Malformed(absl::StrCat(key, " must be an integer"));
      }
      (key == "grid_rows" ? sel.grid_rows : sel.grid_cols) = value.get<int>();
    } else if (key == "area_threshold" || key == "score_threshold") {
      if (!value.is_number()) return Malformed(absl::StrCat(key, " must be a number"));
      (key == "area_threshold" ? sel.area_threshold : sel.score_threshold) =
          value.get<double>();
    } else if (key == "passthrough" || key == "pia" || key == "sia") {
      absl::StatusOr<std::vector<std::string>> names = StringList(value, key);
      if (!names.ok()) return names.status();
      if (key == "passthrough") {
        sel.passthrough_names = *std::move(names);
      } else if (key == "pia") {
        sel.pia_names = *std::move(names);
      } else {
        sel.sia_names = *std::move(names);
      }
    } else if (key == "summary") {
      if (!value.is_object()) return Malformed("summary must be an object");
      sel.summary_attributes.clear();
      for (const auto& [name, kind] : value.items()) {
        const std::string k = kind.is_string() ? kind.get<std::string>() : "";
        if (k == "near") {
          sel.summary_attributes[name] = SummaryKind::kNear;
        } else if (k == "far") {
          sel.summary_attributes[name] = SummaryKind::kFar;
        } else if (k == "any") {
          sel.summary_attributes[name] = SummaryKind::kAny;
        } else {
          return Malformed(absl::StrCat("summary kind for '", name,
                                        "' must be near, far or any"));
        }
      }
    } else {
      return Malformed(absl::StrCat("unknown selector key '", key, "'"));
    }
  }
  if (absl::Status st = sel.Validate(); !st.ok()) return st;
  return sel;
}

}  // namespace safidel
