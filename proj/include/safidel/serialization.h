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

// JSON forms of the domain types. Field names are snake_case and mirror the
// struct members.

#ifndef SAFIDEL_SERIALIZATION_H_
#define SAFIDEL_SERIALIZATION_H_

#include "absl/status/statusor.h"
#include "json.hpp"
#include "safidel/enhance.h"
#include "safidel/fidelity.h"
#include "safidel/geometry.h"
#include "safidel/scenario.h"

namespace safidel {

using Json = nlohmann::ordered_json;

Json ToJson(const BoundingBox& box);  // [x1, y1, x2, y2]
Json ToJson(const Detection& det);
Json ToJson(const DetectionSet& dets);
Json ToJson(const AttributeSelector& sel);
Json ToJson(const ScenarioDescription& sd);
Json ToJson(const FidelityVerdict& v);
Json ToJson(const InconsistencyCount& c);
Json ToJson(const CalibratorParams& p);

absl::StatusOr<BoundingBox> BoundingBoxFromJson(const Json& j);
absl::StatusOr<Detection> DetectionFromJson(const Json& j);
absl::StatusOr<DetectionSet> DetectionSetFromJson(const Json& j);
// Missing keys keep their defaults; `base` supplies them.
absl::StatusOr<AttributeSelector> SelectorFromJson(
    const Json& j, const AttributeSelector& base = {});

}  // namespace safidel

#endif  // SAFIDEL_SERIALIZATION_H_
