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

#include "safidel/protocol.h"

#include "absl/strings/str_cat.h"
#include "safidel/serialization.h"

namespace safidel {
namespace {

absl::StatusOr<Json> ParseObject(const std::string& text) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return absl::InvalidArgumentError("message is not JSON");
  if (!j.is_object()) {
    return absl::InvalidArgumentError("message is not a JSON object");
  }
  return j;
}

}  // namespace

std::string SerializeRequest(const DetectRequestMessage& req) {
  Json j{{"id", req.id},
         {"image_png_b64", req.image_png_b64},
         {"layers", req.layers},
         {"score_threshold", req.score_threshold}};
  return j.dump();
}

std::string SerializeResponse(const DetectResponseMessage& resp) {
  Json j;
  j["id"] = resp.id;
  j["detections"] = Json::array();
  for (const Detection& d : resp.detections) j["detections"].push_back(ToJson(d));
  if (!resp.features.empty()) {
    j["features"] = Json::object();
    for (const auto& [layer, values] : resp.features) j["features"][layer] = values;
  }
  if (resp.error.has_value()) j["error"] = *resp.error;
  return j.dump();
}

absl::StatusOr<DetectRequestMessage> ParseRequest(const std::string& text) {
  absl::StatusOr<Json> j = ParseObject(text);
  if (!j.ok()) return j.status();
  DetectRequestMessage req;
  if (!j->contains("id") || !(*j)["id"].is_string()) {
    return absl::InvalidArgumentError("request.id must be a string");
  }
  req.id = (*j)["id"].get<std::string>();
  if (!j->contains("image_png_b64") || !(*j)["image_png_b64"].is_string()) {
    return absl::InvalidArgumentError("request.image_png_b64 must be a string");
  }
  req.image_png_b64 = (*j)["image_png_b64"].get<std::string>();
  if (j->contains("layers")) {
    const Json& layers = (*j)["layers"];
    if (!layers.is_array()) {
      return absl::InvalidArgumentError("request.layers must be an array");
    }
    for (const Json& l : layers) {
      if (!l.is_string()) {
        return absl::InvalidArgumentError("request.layers must hold strings");
      }
      req.layers.push_back(l.get<std::string>());
    }
  }
  if (j->contains("score_threshold")) {
    if (!(*j)["score_threshold"].is_number()) {
      return absl::InvalidArgumentError(
          "request.score_threshold must be a number");
    }
    req.score_threshold = (*j)["score_threshold"].get<double>();
  }
  return req;
}

absl::StatusOr<DetectResponseMessage> ParseResponse(const std::string& text) {
  absl::StatusOr<Json> j = ParseObject(text);
  if (!j.ok()) return j.status();
  DetectResponseMessage resp;
  if (!j->contains("id") || !(*j)["id"].is_string()) {
    return absl::InvalidArgumentError("response.id must be a string");
  }
  resp.id = (*j)["id"].get<std::string>();
  if (j->contains("error") && !(*j)["error"].is_null()) {
    if (!(*j)["error"].is_string()) {
      return absl::InvalidArgumentError("response.error must be a string");
    }
    resp.error = (*j)["error"].get<std::string>();
  }
  Json body = *j;
  body.erase("id");
  body.erase("error");
  absl::StatusOr<DetectionSet> dets = DetectionSetFromJson(body);
  if (!dets.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("response ", resp.id, ": ", dets.status().message()));
  }
  resp.detections = std::move(dets->detections);
  resp.features = std::move(dets->features);
  return resp;
}

absl::StatusOr<std::string> PeekMessageId(const std::string& text) {
  absl::StatusOr<Json> j = ParseObject(text);
  if (!j.ok()) return j.status();
  if (!j->contains("id") || !(*j)["id"].is_string()) {
    return absl::InvalidArgumentError("message has no string id");
  }
  return (*j)["id"].get<std::string>();
}

}  // namespace safidel
