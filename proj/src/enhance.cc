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

#include "safidel/enhance.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace safidel {
namespace {

ImageTensor Blend(const ImageTensor& img, const ImageTensor& degenerate,
                  double factor) {
  ImageTensor out = img;
  std::vector<double>& o = out.mutable_data();
  const std::vector<double>& d = degenerate.data();
  for (size_t i = 0; i < o.size(); ++i) {
    o[i] = std::clamp(d[i] + factor * (o[i] - d[i]), 0.0, 1.0);
  }
  return out;
}

ImageTensor MeanLumaImage(const ImageTensor& img) {
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) sum += img.Luma(x, y);
  }
  const double mean =
      sum / (static_cast<double>(img.width()) * img.height());
  return ImageTensor(img.width(), img.height(), img.channels(), mean);
}

ImageTensor Smoothed(const ImageTensor& img) {
  ImageTensor out = img;
  const int w = img.width();
  const int h = img.height();
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 4.0 * img.at(x, y, c);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) acc += img.at(x + dx, y + dy, c);
        }
        out.at(x, y, c) = acc / 13.0;
      }
    }
  }
  return out;
}

}  // namespace

absl::StatusOr<ImageTensor> ApplyEnhancement(const ImageTensor& img,
                                             Enhancement kind, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    return absl::InvalidArgumentError(
        absl::StrCat("enhancement factor must be positive, got ", factor));
  }
  if (factor == 1.0 || img.empty()) return img;
  switch (kind) {
    case Enhancement::kBrightness:
      return Blend(img, ImageTensor(img.width(), img.height(), img.channels()),
                   factor);
    case Enhancement::kContrast:
      return Blend(img, MeanLumaImage(img), factor);
    case Enhancement::kSharpness:
      return Blend(img, Smoothed(img), factor);
  }
  return absl::InternalError("unknown enhancement");
}

std::vector<double> GaussianKernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

absl::StatusOr<ImageTensor> ApplyGaussianBlur(const ImageTensor& img,
                                              double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("blur sigma must be >= 0, got ", sigma));
  }
  if (sigma == 0.0 || img.empty()) return img;
  const std::vector<double> k = GaussianKernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();

  ImageTensor tmp = img;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = acc;
      }
    }
  }
  ImageTensor out = tmp;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        }
        out.at(x, y, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

absl::Status CalibratorParams::Validate() const {
  for (double f : {contrast, brightness, sharpness}) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      return absl::InvalidArgumentError(
          absl::StrCat("enhancement factors must be positive, got ", f));
    }
  }
  if (!(blur_sigma >= 0.0) || !std::isfinite(blur_sigma)) {
    return absl::InvalidArgumentError("blur_sigma must be >= 0");
  }
  return absl::OkStatus();
}

bool CalibratorParams::IsIdentity() const {
  return contrast == 1.0 && brightness == 1.0 && sharpness == 1.0 &&
         blur_sigma == 0.0;
}

absl::StatusOr<ImageTensor> ApplyCalibrator(const ImageTensor& img,
                                            const CalibratorParams& p) {
  if (absl::Status st = p.Validate(); !st.ok()) return st;
  absl::StatusOr<ImageTensor> out =
      ApplyEnhancement(img, Enhancement::kContrast, p.contrast);
  if (!out.ok()) return out;
  out = ApplyEnhancement(*out, Enhancement::kBrightness, p.brightness);
  if (!out.ok()) return out;
  out = ApplyEnhancement(*out, Enhancement::kSharpness, p.sharpness);
  if (!out.ok()) return out;
  return ApplyGaussianBlur(*out, p.blur_sigma);
}

}  // namespace safidel
