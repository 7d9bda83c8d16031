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

// Wire protocol between the toolkit and an external detector.
//
// Both transports carry one JSON object per message. Over stdio each message
// is a single line; over HTTP it is the body of POST /detect.
//
//   request   {"id": str, "image_png_b64": str, "layers": [str],
//              "score_threshold": number}
//   response  {"id": str,
//              "detections": [{"label": str, "bbox": [x1,y1,x2,y2],
//                              "score": number}],
//              "features": {layer: [number]},
//              "error": str}            // error only on failure
//
// Doubles are written in shortest round-trip form, so every value survives
// serialization exactly.

#ifndef SAFIDEL_PROTOCOL_H_
#define SAFIDEL_PROTOCOL_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "safidel/geometry.h"

namespace safidel {

struct DetectRequestMessage {
  std::string id;
  std::string image_png_b64;
  std::vector<std::string> layers;
  double score_threshold = 0.5;
};

struct DetectResponseMessage {
  std::string id;
  std::vector<Detection> detections;
  std::map<std::string, std::vector<double>> features;
  std::optional<std::string> error;
};

// Single line, no trailing newline.
std::string SerializeRequest(const DetectRequestMessage& req);
std::string SerializeResponse(const DetectResponseMessage& resp);

absl::StatusOr<DetectRequestMessage> ParseRequest(const std::string& text);
absl::StatusOr<DetectResponseMessage> ParseResponse(const std::string& text);

// Reads just the correlation id, for routing responses.
absl::StatusOr<std::string> PeekMessageId(const std::string& text);

}  // namespace safidel

#endif  // SAFIDEL_PROTOCOL_H_
