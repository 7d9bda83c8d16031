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

// Dimension-preserving image transforms that make up the calibrator.
//
// Enhancements blend between the image and a degenerate version of it:
//
//   out = degenerate + factor * (img - degenerate), clamped to [0,1]
//
//   brightness  degenerate is black
//   contrast    degenerate is uniform grey at the mean luma of the image
//   sharpness   degenerate is the 3x3 smoothed image (1/13 [1 1 1;1 5 1;1 1 1],
//               border pixels copied)
//
// A factor of exactly 1 returns the input unchanged.

#ifndef SAFIDEL_ENHANCE_H_
#define SAFIDEL_ENHANCE_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "safidel/image.h"

namespace safidel {

enum class Enhancement { kBrightness, kContrast, kSharpness };

absl::StatusOr<ImageTensor> ApplyEnhancement(const ImageTensor& img,
                                             Enhancement kind, double factor);

// Normalized discrete Gaussian of radius ceil(3 sigma). sigma > 0.
std::vector<double> GaussianKernel(double sigma);

// Separable blur with edge replication; sigma == 0 is the identity.
absl::StatusOr<ImageTensor> ApplyGaussianBlur(const ImageTensor& img,
                                              double sigma);

struct CalibratorParams {
  double contrast = 1.0;
  double brightness = 1.0;
  double sharpness = 1.0;
  double blur_sigma = 0.0;

  absl::Status Validate() const;
  bool IsIdentity() const;

  friend bool operator==(const CalibratorParams&,
                         const CalibratorParams&) = default;
};

// contrast, then brightness, then sharpness, then blur. The enhancement
// operators do not commute, so this order is part of the contract.
absl::StatusOr<ImageTensor> ApplyCalibrator(const ImageTensor& img,
                                            const CalibratorParams& p);

}  // namespace safidel

#endif  // SAFIDEL_ENHANCE_H_
