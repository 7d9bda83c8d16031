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

#ifndef SAFIDEL_IMAGE_H_
#define SAFIDEL_IMAGE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "safidel/geometry.h"

namespace safidel {

// Row-major, channel-interleaved image with values in [0,1].
class ImageTensor {
 public:
  ImageTensor() = default;
  // Creates a width x height image with every sample set to `fill`.
  ImageTensor(int width, int height, int channels, double fill = 0.0);

  // Validates dimensions, channel count (1 or 3) and value range.
  static absl::StatusOr<ImageTensor> FromData(int width, int height,
                                              int channels,
                                              std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  ImageSize size() const { return {width_, height_}; }
  bool empty() const { return data_.empty(); }
  bool SameShape(const ImageTensor& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& mutable_data() { return data_; }

  double at(int x, int y, int c) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  double& at(int x, int y, int c) {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  // ITU-R 601 luma (0.299 R + 0.587 G + 0.114 B); the value itself for
  // single-channel images.
  double Luma(int x, int y) const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// u8 <-> [0,1] mapping. Quantization rounds to nearest, ties to even.
double FromU8(uint8_t v);
uint8_t ToU8(double v);

absl::StatusOr<ImageTensor> DecodePng(const std::string& bytes);
absl::StatusOr<std::string> EncodePng(const ImageTensor& img);

absl::StatusOr<ImageTensor> LoadImage(const std::string& path);
absl::Status SaveImage(const ImageTensor& img, const std::string& path);

// Reads only the PNG header.
absl::StatusOr<ImageSize> ReadImageSize(const std::string& path);

}  // namespace safidel

#endif  // SAFIDEL_IMAGE_H_
