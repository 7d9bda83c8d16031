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

#include "safidel/manifest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "safidel/image.h"
#include "safidel/kitti.h"
#include "safidel/serialization.h"

namespace safidel {
namespace {

namespace fs = std::filesystem;

absl::Status SchemaError(absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("manifest: ", what));
}

absl::StatusOr<std::string> StringField(const Json& obj, const char* key,
                                        absl::string_view where) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    return SchemaError(absl::StrCat(where, ": '", key, "' must be a string"));
  }
  return obj[key].get<std::string>();
}

absl::StatusOr<std::string> ResolveExisting(const fs::path& base,
                                            const std::string& rel,
                                            absl::string_view where) {
  fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    return absl::NotFoundError(
        absl::StrCat("manifest: ", where, ": file not found: ", p.string()));
  }
  return p.lexically_normal().string();
}

}  // namespace

std::vector<std::string> PairedSample::RealImages() const {
  std::vector<std::string> out{real_image};
  out.insert(out.end(), extra_real_images.begin(), extra_real_images.end());
  return out;
}

bool PairedDataset::HasGenerator(const std::string& name) const {
  return std::find(generators.begin(), generators.end(), name) !=
         generators.end();
}

void SelectorOverrides::ApplyTo(AttributeSelector& sel) const {
  if (grid_rows) sel.grid_rows = *grid_rows;
  if (grid_cols) sel.grid_cols = *grid_cols;
  if (area_threshold) sel.area_threshold = *area_threshold;
  if (score_threshold) sel.score_threshold = *score_threshold;
}

absl::StatusOr<PairedDataset> LoadManifest(const std::string& path,
                                           const SelectorOverrides& overrides) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open manifest ", path));
  std::stringstream ss;
  ss << in.rdbuf();
  Json root = Json::parse(ss.str(), nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded() || !root.is_object()) {
    return SchemaError("not a JSON object");
  }
  const fs::path base = fs::path(path).parent_path();

  PairedDataset ds;
  if (root.contains("selector")) {
    absl::StatusOr<AttributeSelector> sel = SelectorFromJson(root["selector"]);
    if (!sel.ok()) return sel.status();
    ds.selector = *std::move(sel);
  }
  overrides.ApplyTo(ds.selector);
  if (absl::Status st = ds.selector.Validate(); !st.ok()) return st;

  if (!root.contains("generators") || !root["generators"].is_array()) {
    return SchemaError("'generators' must be an array");
  }
  for (const Json& g : root["generators"]) {
    if (!g.is_string()) return SchemaError("generator names must be strings");
    std::string name = g.get<std::string>();
    if (ds.HasGenerator(name)) {
      return SchemaError(absl::StrCat("duplicate generator '", name, "'"));
    }
    ds.generators.push_back(std::move(name));
  }

  if (!root.contains("samples") || !root["samples"].is_array()) {
    return SchemaError("'samples' must be an array");
  }
  std::set<std::string> seen;
  for (const Json& s : root["samples"]) {
    if (!s.is_object()) return SchemaError("samples must be objects");
    PairedSample sample;
    absl::StatusOr<std::string> id = StringField(s, "id", "sample");
    if (!id.ok()) return id.status();
    sample.sample_id = *id;
    if (!seen.insert(sample.sample_id).second) {
      return SchemaError(absl::StrCat("duplicate sample id '", *id, "'"));
    }
    const std::string where = absl::StrCat("sample '", *id, "'");

    absl::StatusOr<std::string> real = StringField(s, "real_image", where);
    if (!real.ok()) return real.status();
    absl::StatusOr<std::string> real_path = ResolveExisting(base, *real, where);
    if (!real_path.ok()) return real_path.status();
    sample.real_image = *real_path;

    absl::StatusOr<std::string> labels = StringField(s, "labels", where);
    if (!labels.ok()) return labels.status();
    absl::StatusOr<std::string> labels_path =
        ResolveExisting(base, *labels, where);
    if (!labels_path.ok()) return labels_path.status();
    sample.labels = *labels_path;

    if (s.contains("extra_real")) {
      if (!s["extra_real"].is_array()) {
        return SchemaError(absl::StrCat(where, ": 'extra_real' must be an array"));
      }
      for (const Json& e : s["extra_real"]) {
        if (!e.is_string()) {
          return SchemaError(absl::StrCat(where, ": 'extra_real' entries must be strings"));
        }
        absl::StatusOr<std::string> p =
            ResolveExisting(base, e.get<std::string>(), where);
        if (!p.ok()) return p.status();
        sample.extra_real_images.push_back(*p);
      }
    }

    const Json empty = Json::object();
    const Json& synthetic = s.contains("synthetic") ? s["synthetic"] : empty;
    if (!synthetic.is_object()) {
      return SchemaError(absl::StrCat(where, ": 'synthetic' must be an object"));
    }
    for (const std::string& gen : ds.generators) {
      if (!synthetic.contains(gen) || !synthetic[gen].is_string()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "manifest: sample '", *id, "' has no image for generator '", gen,
            "'"));
      }
      absl::StatusOr<std::string> p =
          ResolveExisting(base, synthetic[gen].get<std::string>(),
                          absl::StrCat(where, " generator '", gen, "'"));
      if (!p.ok()) return p.status();
      sample.synthetic_images[gen] = *p;
    }

    absl::StatusOr<ImageSize> size = ReadImageSize(sample.real_image);
    if (!size.ok()) return size.status();
    sample.image_size = *size;
    std::vector<std::string> others = sample.extra_real_images;
    for (const auto& [gen, p] : sample.synthetic_images) others.push_back(p);
    for (const std::string& p : others) {
      absl::StatusOr<ImageSize> other = ReadImageSize(p);
      if (!other.ok()) return other.status();
      if (!(*other == *size)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "manifest: ", where, ": ", p, " is ", other->width, "x",
            other->height, " but the real image is ", size->width, "x",
            size->height));
      }
    }

    absl::StatusOr<std::vector<GroundTruthObject>> gt =
        LoadKittiLabels(sample.labels);
    if (!gt.ok()) return gt.status();
    sample.ground_truth = *std::move(gt);

    ScenarioDescription extra;
    extra.source_id = sample.sample_id;
    if (s.contains("extra_attributes")) {
      if (!s["extra_attributes"].is_object()) {
        return SchemaError(
            absl::StrCat(where, ": 'extra_attributes' must be an object"));
      }
      for (const auto& [name, value] : s["extra_attributes"].items()) {
        if (!value.is_number()) {
          return SchemaError(absl::StrCat(where, ": extra attribute '", name,
                                          "' must be a number"));
        }
        if (absl::Status st = extra.Set(name, value.get<double>()); !st.ok()) {
          return st;
        }
      }
    }
    absl::StatusOr<ScenarioDescription> sd = EncodeGroundTruth(
        sample.ground_truth, sample.image_size, ds.selector, extra);
    if (!sd.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("manifest: ", where, ": ", sd.status().message()));
    }
    sample.sd = *std::move(sd);
    ds.samples.push_back(std::move(sample));
  }
  if (ds.samples.empty()) {
    ds.warnings.push_back(absl::StrCat("manifest ", path, " lists no samples"));
  }
  return ds;
}

}  // namespace safidel
