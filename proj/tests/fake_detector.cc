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


// Line-delimited JSON detector used by the tests. It reports one "Car"
// covering the top-left quadrant whose score is twice the mean luma, and a
// feature vector (mean luma, width, height) for every requested layer.
// Flags inject the failure modes the bridge must survive.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/escaping.h"
#include "safidel/image.h"
#include "safidel/protocol.h"

namespace {

using safidel::DetectRequestMessage;
using safidel::DetectResponseMessage;

DetectResponseMessage Answer(const std::string& line, bool omit_layers) {
  DetectResponseMessage resp;
  absl::StatusOr<DetectRequestMessage> req = safidel::ParseRequest(line);
  if (!req.ok()) {
    absl::StatusOr<std::string> id = safidel::PeekMessageId(line);
    resp.id = id.ok() ? *id : "";
    resp.error = std::string(req.status().message());
    return resp;
  }
  resp.id = req->id;
  std::string png;
  if (!absl::Base64Unescape(req->image_png_b64, &png)) {
    resp.error = "image is not base64";
    return resp;
  }
  absl::StatusOr<safidel::ImageTensor> img = safidel::DecodePng(png);
  if (!img.ok()) {
    resp.error = std::string(img.status().message());
    return resp;
  }
  double sum = 0.0;
  for (int y = 0; y < img->height(); ++y) {
    for (int x = 0; x < img->width(); ++x) sum += img->Luma(x, y);
  }
  const double mean = sum / (double(img->width()) * img->height());
  const double score = std::min(1.0, 2.0 * mean);
  if (score >= req->score_threshold) {
    resp.detections.push_back(
        {"Car", {0.0, 0.0, img->width() / 2.0, img->height() / 2.0}, score});
  }
  if (!omit_layers) {
    for (const std::string& layer : req->layers) {
      resp.features[layer] = {mean, double(img->width()), double(img->height())};
    }
  }
  return resp;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fake detector"};
  int reverse = 1;
  int die_after = -1;
  int error_after = -1;
  int delay_ms = 0;
  bool omit_layers = false;
  bool wrong_id = false;
  bool garbage = false;
  std::string log_path;
  app.add_option("--reverse", reverse, "answer batches of N in reverse order");
  app.add_option("--die-after", die_after, "exit after answering N requests");
  app.add_option("--error-after", error_after,
                 "report an error for every request after the first N");
  app.add_option("--delay-ms", delay_ms, "sleep before each answer");
  app.add_flag("--omit-layers", omit_layers, "never send features");
  app.add_flag("--wrong-id", wrong_id, "echo a different id");
  app.add_flag("--garbage", garbage, "answer with a non-JSON line");
  app.add_option("--log", log_path, "append one line per request");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::string> batch;
  int answered = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (!log_path.empty()) {
      std::ofstream(log_path, std::ios::app) << "request\n";
    }
    batch.push_back(line);
    if (static_cast<int>(batch.size()) < reverse) continue;
    for (auto it = batch.rbegin(); it != batch.rend(); ++it) {
      if (die_after >= 0 && answered >= die_after) return 1;
      if (delay_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      }
      if (garbage) {
        std::cout << "this is not json" << std::endl;
        ++answered;
        continue;
      }
      DetectResponseMessage resp = Answer(*it, omit_layers);
      if (error_after >= 0 && answered >= error_after) {
        resp.detections.clear();
        resp.features.clear();
        resp.error = "injected failure";
      }
      if (wrong_id) resp.id += "-x";
      std::cout << safidel::SerializeResponse(resp) << std::endl;
      ++answered;
    }
    batch.clear();
  }
  return 0;
}
