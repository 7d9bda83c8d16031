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

#include "safidel/detection_cache.h"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/strings/escaping.h"
#include "absl/strings/str_cat.h"
#include "safidel/serialization.h"

namespace safidel {
namespace {

namespace fs = std::filesystem;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr);
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void Update(const void* data, size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  void Update(absl::string_view s) {
    // Length prefix keeps concatenated fields unambiguous.
    const uint64_t n = s.size();
    Update(&n, sizeof(n));
    Update(s.data(), s.size());
  }

  std::string HexDigest() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    return absl::BytesToHexString(
        absl::string_view(reinterpret_cast<const char*>(md), len));
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string Sha256Hex(absl::string_view bytes) {
  Sha256 h;
  h.Update(bytes.data(), bytes.size());
  return h.HexDigest();
}

std::string ImageDigest(const ImageTensor& img,
                        std::span<const std::string> layers,
                        double score_threshold) {
  Sha256 h;
  const int32_t shape[3] = {img.width(), img.height(), img.channels()};
  h.Update(shape, sizeof(shape));
  h.Update(img.data().data(), img.data().size() * sizeof(double));
  const uint64_t n_layers = layers.size();
  h.Update(&n_layers, sizeof(n_layers));
  for (const std::string& l : layers) h.Update(l);
  h.Update(&score_threshold, sizeof(score_threshold));
  return h.HexDigest();
}

std::string DefaultCacheDir() {
  if (const char* dir = std::getenv("SAFIDEL_CACHE_DIR"); dir && *dir) {
    return dir;
  }
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
    return absl::StrCat(xdg, "/safidel");
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return absl::StrCat(home, "/.cache/safidel");
  }
  return ".safidel-cache";
}

std::string DetectionCache::EntryPath(const std::string& detector_id,
                                      const std::string& digest) const {
  Sha256 h;
  h.Update(detector_id);
  h.Update(digest);
  const std::string key = h.HexDigest();
  return absl::StrCat(root_, "/", key.substr(0, 2), "/", key, ".json");
}

std::optional<DetectionSet> DetectionCache::Get(
    const std::string& detector_id, const std::string& digest) const {
  const std::string path = EntryPath(detector_id, digest);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  in.close();

  Json j = Json::parse(ss.str(), nullptr, /*allow_exceptions=*/false);
  if (!j.is_discarded() && j.is_object() && j.contains("detector_id") &&
      j["detector_id"] == detector_id && j.contains("digest") &&
      j["digest"] == digest && j.contains("value")) {
    absl::StatusOr<DetectionSet> value = DetectionSetFromJson(j["value"]);
    if (value.ok()) return *std::move(value);
  }
  std::error_code ec;
  fs::remove(path, ec);
  return std::nullopt;
}

absl::Status DetectionCache::Put(const std::string& detector_id,
                                 const std::string& digest,
                                 const DetectionSet& value) const {
  static std::atomic<uint64_t> counter{0};
  const std::string path = EntryPath(detector_id, digest);
  std::error_code ec;
  fs::create_directories(fs::path(path).parent_path(), ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create cache directory for ", path, ": ",
                     ec.message()));
  }
  Json j{{"detector_id", detector_id}, {"digest", digest},
         {"value", ToJson(value)}};
  const std::string tmp =
      absl::StrCat(path, ".tmp.", getpid(), ".", counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump();
    if (!out) return absl::DataLossError(absl::StrCat("cannot write ", tmp));
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return absl::DataLossError(absl::StrCat("cannot install ", path));
  }
  return absl::OkStatus();
}

CachingDetector::CachingDetector(std::unique_ptr<Detector> inner,
                                 DetectionCache cache,
                                 std::vector<std::string> layers,
                                 double score_threshold)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      layers_(std::move(layers)),
      score_threshold_(score_threshold) {}

absl::StatusOr<DetectionSet> CachingDetector::Detect(
    const ImageTensor& img, const std::string& image_id,
    std::span<const GroundTruthObject> ground_truth) {
  const std::string digest = ImageDigest(img, layers_, score_threshold_);
  if (std::optional<DetectionSet> hit = cache_.Get(inner_->id(), digest)) {
    hit->image_id = image_id;
    return *std::move(hit);
  }
  absl::StatusOr<DetectionSet> fresh =
      inner_->Detect(img, image_id, ground_truth);
  if (!fresh.ok()) return fresh;
  // A failed cache write only costs a recomputation later.
  (void)cache_.Put(inner_->id(), digest, *fresh);
  return fresh;
}

}  // namespace safidel
