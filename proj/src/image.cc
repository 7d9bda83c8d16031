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

#include "safidel/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <utility>

#include "absl/strings/str_cat.h"

namespace safidel {
namespace {

// Frees the simplified-API control structure on every exit path.
class PngImageGuard {
 public:
  explicit PngImageGuard(png_image* image) : image_(image) {}
  ~PngImageGuard() { png_image_free(image_); }
  PngImageGuard(const PngImageGuard&) = delete;
  PngImageGuard& operator=(const PngImageGuard&) = delete;

 private:
  png_image* image_;
};

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status BeginRead(const std::string& bytes, png_image& image) {
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) ==
      0) {
    return absl::InvalidArgumentError(
        absl::StrCat("not a readable PNG: ", image.message));
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    return absl::InvalidArgumentError("16-bit PNG images are not supported");
  }
  return absl::OkStatus();
}

}  // namespace

ImageTensor::ImageTensor(int width, int height, int channels, double fill)
    : width_(width),
      height_(height),
      channels_(channels),
      data_(static_cast<size_t>(width) * height * channels, fill) {}

absl::StatusOr<ImageTensor> ImageTensor::FromData(int width, int height,
                                                  int channels,
                                                  std::vector<double> data) {
  if (width <= 0 || height <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad image size ", width, "x", height));
  }
  if (channels != 1 && channels != 3) {
    return absl::InvalidArgumentError(
        absl::StrCat("unsupported channel count ", channels));
  }
  if (data.size() != static_cast<size_t>(width) * height * channels) {
    return absl::InvalidArgumentError(
        absl::StrCat("data length ", data.size(), " does not match ", width,
                     "x", height, "x", channels));
  }
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("pixel value ", v, " outside [0,1]"));
    }
  }
  ImageTensor img;
  img.width_ = width;
  img.height_ = height;
  img.channels_ = channels;
  img.data_ = std::move(data);
  return img;
}

double ImageTensor::Luma(int x, int y) const {
  if (channels_ == 1) return at(x, y, 0);
  return 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2);
}

double FromU8(uint8_t v) { return static_cast<double>(v) / 255.0; }

uint8_t ToU8(double v) {
  // nearbyint honours the default FE_TONEAREST mode: ties go to even.
  double scaled = std::nearbyint(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<uint8_t>(scaled);
}

absl::StatusOr<ImageTensor> DecodePng(const std::string& bytes) {
  png_image image;
  absl::Status begun = BeginRead(bytes, image);
  PngImageGuard guard(&image);
  if (!begun.ok()) return begun;

  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr) == 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("PNG decode failed: ", image.message));
  }
  std::vector<double> data(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) data[i] = FromU8(raw[i]);
  return ImageTensor::FromData(static_cast<int>(image.width),
                               static_cast<int>(image.height), channels,
                               std::move(data));
}

absl::StatusOr<std::string> EncodePng(const ImageTensor& img) {
  if (img.empty()) return absl::InvalidArgumentError("empty image");
  std::vector<uint8_t> raw(img.data().size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = ToU8(img.data()[i]);

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  PngImageGuard guard(&image);

  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&image, nullptr, &size, 0, raw.data(), 0,
                                nullptr) == 0) {
    return absl::InternalError(
        absl::StrCat("PNG size query failed: ", image.message));
  }
  std::string out(size, '\0');
  if (png_image_write_to_memory(&image, out.data(), &size, 0, raw.data(), 0,
                                nullptr) == 0) {
    return absl::InternalError(
        absl::StrCat("PNG encode failed: ", image.message));
  }
  out.resize(size);
  return out;
}

absl::StatusOr<ImageTensor> LoadImage(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFile(path);
  if (!bytes.ok()) return bytes.status();
  absl::StatusOr<ImageTensor> img = DecodePng(*bytes);
  if (!img.ok()) {
    return absl::Status(img.status().code(),
                        absl::StrCat(path, ": ", img.status().message()));
  }
  return img;
}

absl::Status SaveImage(const ImageTensor& img, const std::string& path) {
  absl::StatusOr<std::string> bytes = EncodePng(img);
  if (!bytes.ok()) return bytes.status();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out.write(bytes->data(), static_cast<std::streamsize>(bytes->size()));
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

absl::StatusOr<ImageSize> ReadImageSize(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFile(path);
  if (!bytes.ok()) return bytes.status();
  png_image image;
  absl::Status begun = BeginRead(*bytes, image);
  PngImageGuard guard(&image);
  if (!begun.ok()) {
    return absl::Status(begun.code(), absl::StrCat(path, ": ", begun.message()));
  }
  return ImageSize{static_cast<int>(image.width),
                   static_cast<int>(image.height)};
}

}  // namespace safidel
