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

// Content-addressed on-disk store of detector outputs.
//
// Layout: <root>/<k[0:2]>/<k>.json where k = SHA-256(detector_id, digest).
// Each entry repeats its detector id and digest; entries that fail to parse
// or do not match are evicted and reported as misses.

#ifndef SAFIDEL_DETECTION_CACHE_H_
#define SAFIDEL_DETECTION_CACHE_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/string_view.h"
#include "safidel/detector.h"
#include "safidel/geometry.h"
#include "safidel/image.h"

namespace safidel {

std::string Sha256Hex(absl::string_view bytes);

// Hash of the image shape, the exact pixel values, the requested layers and
// the score threshold.
std::string ImageDigest(const ImageTensor& img,
                        std::span<const std::string> layers,
                        double score_threshold);

// $SAFIDEL_CACHE_DIR, else $XDG_CACHE_HOME/safidel, else ~/.cache/safidel.
std::string DefaultCacheDir();

class DetectionCache {
 public:
  explicit DetectionCache(std::string root) : root_(std::move(root)) {}

  std::optional<DetectionSet> Get(const std::string& detector_id,
                                  const std::string& digest) const;
  // Atomic replace; the last writer wins.
  absl::Status Put(const std::string& detector_id, const std::string& digest,
                   const DetectionSet& value) const;

  const std::string& root() const { return root_; }

 private:
  std::string EntryPath(const std::string& detector_id,
                        const std::string& digest) const;

  std::string root_;
};

// Serves repeated images from the cache and forwards misses.
class CachingDetector : public Detector {
 public:
  CachingDetector(std::unique_ptr<Detector> inner, DetectionCache cache,
                  std::vector<std::string> layers, double score_threshold);

  absl::StatusOr<DetectionSet> Detect(
      const ImageTensor& img, const std::string& image_id,
      std::span<const GroundTruthObject> ground_truth) override;
  const std::string& id() const override { return inner_->id(); }
  bool SupportsConcurrentCalls() const override {
    return inner_->SupportsConcurrentCalls();
  }

 private:
  std::unique_ptr<Detector> inner_;
  DetectionCache cache_;
  std::vector<std::string> layers_;
  double score_threshold_;
};

}  // namespace safidel

#endif  // SAFIDEL_DETECTION_CACHE_H_
