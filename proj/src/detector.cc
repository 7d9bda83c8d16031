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

#include "safidel/detector.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "absl/strings/escaping.h"
#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "httplib.h"
#include "safidel/protocol.h"
#include "safidel/subprocess.h"

namespace safidel {
namespace {

// Carries one request/response exchange over some transport.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual absl::StatusOr<std::string> Exchange(const std::string& id,
                                               const std::string& message,
                                               int timeout_ms) = 0;
};

// Line-delimited JSON over a child's stdin/stdout. Requests from several
// threads may be in flight; a reader thread routes responses by id.
class StdioChannel : public Channel {
 public:
  explicit StdioChannel(std::unique_ptr<Subprocess> proc)
      : proc_(std::move(proc)) {
    reader_ = std::thread([this] { ReadLoop(); });
  }

  ~StdioChannel() override {
    proc_->Terminate();
    reader_.join();
  }

  absl::StatusOr<std::string> Exchange(const std::string& id,
                                       const std::string& message,
                                       int timeout_ms) override {
    std::future<absl::StatusOr<std::string>> reply;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!alive_) return closed_status_;
      if (pending_.count(id)) {
        return absl::AlreadyExistsError(
            absl::StrCat("request id '", id, "' already in flight"));
      }
      reply = pending_[id].get_future();
    }
    absl::Status written;
    {
      std::lock_guard<std::mutex> lock(write_mu_);
      written = proc_->WriteLine(message);
    }
    if (!written.ok()) {
      Forget(id);
      return written;
    }
    if (reply.wait_for(std::chrono::milliseconds(timeout_ms)) !=
        std::future_status::ready) {
      Forget(id);
      return absl::DeadlineExceededError(
          absl::StrCat("no response to request '", id, "' within ",
                       timeout_ms, " ms"));
    }
    return reply.get();
  }

 private:
  void Forget(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu_);
    pending_.erase(id);
  }

  void ReadLoop() {
    while (std::optional<std::string> line = proc_->ReadLine()) {
      if (absl::StripAsciiWhitespace(*line).empty()) continue;
      absl::StatusOr<std::string> id = PeekMessageId(*line);
      std::lock_guard<std::mutex> lock(mu_);
      if (!id.ok()) {
        // Uncorrelatable output can only be blamed on a lone request.
        if (pending_.size() == 1) {
          pending_.begin()->second.set_value(absl::InvalidArgumentError(
              absl::StrCat("malformed detector response: ",
                           id.status().message())));
          pending_.clear();
        } else {
          std::cerr << "safidel: ignoring malformed detector output\n";
        }
        continue;
      }
      auto it = pending_.find(*id);
      if (it == pending_.end()) {
        std::cerr << "safidel: ignoring response for unknown id '" << *id
                  << "'\n";
        continue;
      }
      it->second.set_value(*std::move(line));
      pending_.erase(it);
    }
    std::lock_guard<std::mutex> lock(mu_);
    alive_ = false;
    closed_status_ = absl::UnavailableError("detector process exited");
    for (auto& [id, promise] : pending_) promise.set_value(closed_status_);
    pending_.clear();
  }

  std::unique_ptr<Subprocess> proc_;
  std::mutex write_mu_;
  std::mutex mu_;
  std::map<std::string, std::promise<absl::StatusOr<std::string>>> pending_;
  bool alive_ = true;
  absl::Status closed_status_;
  std::thread reader_;
};

class HttpChannel : public Channel {
 public:
  explicit HttpChannel(std::string base_url) : base_url_(std::move(base_url)) {}

  absl::StatusOr<std::string> Exchange(const std::string& /*id*/,
                                       const std::string& message,
                                       int timeout_ms) override {
    httplib::Client client(base_url_);
    const auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Result res = client.Post("/detect", message, "application/json");
    if (!res) {
      return absl::UnavailableError(absl::StrCat(
          "POST ", base_url_, "/detect failed: ", httplib::to_string(res.error())));
    }
    if (res->status != 200) {
      // Protocol errors may still come back as a JSON body with "error".
      if (!res->body.empty() && PeekMessageId(res->body).ok()) return res->body;
      return absl::UnavailableError(
          absl::StrCat("POST ", base_url_, "/detect returned HTTP ",
                       res->status));
    }
    return res->body;
  }

 private:
  std::string base_url_;
};

class RemoteDetector : public Detector {
 public:
  RemoteDetector(DetectorHandle handle, std::unique_ptr<Channel> channel)
      : handle_(std::move(handle)), channel_(std::move(channel)) {}

  absl::StatusOr<DetectionSet> Detect(
      const ImageTensor& img, const std::string& image_id,
      std::span<const GroundTruthObject> /*ground_truth*/) override {
    absl::StatusOr<std::string> png = EncodePng(img);
    if (!png.ok()) return png.status();
    DetectRequestMessage req;
    req.id = absl::StrCat(image_id, "#", next_id_.fetch_add(1));
    req.image_png_b64 = absl::Base64Escape(*png);
    req.layers = handle_.requested_layers;
    req.score_threshold = handle_.score_threshold;

    absl::StatusOr<std::string> raw =
        channel_->Exchange(req.id, SerializeRequest(req), handle_.timeout_ms);
    if (!raw.ok()) return raw.status();
    absl::StatusOr<DetectResponseMessage> resp = ParseResponse(*raw);
    if (!resp.ok()) return resp.status();
    if (resp->id != req.id) {
      return absl::InternalError(absl::StrCat(
          "response id '", resp->id, "' does not match request '", req.id, "'"));
    }
    if (resp->error.has_value()) {
      return absl::InternalError(
          absl::StrCat("detector error for '", image_id, "': ", *resp->error));
    }
    DetectionSet out;
    out.image_id = image_id;
    for (const std::string& layer : handle_.requested_layers) {
      auto it = resp->features.find(layer);
      if (it == resp->features.end()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "detector response for '", image_id,
            "' is missing requested layer '", layer, "'"));
      }
      out.features.emplace(layer, std::move(it->second));
    }
    for (Detection& d : resp->detections) {
      if (d.score >= handle_.score_threshold) out.detections.push_back(std::move(d));
    }
    return out;
  }

  const std::string& id() const override { return handle_.detector_id; }

 private:
  DetectorHandle handle_;
  std::unique_ptr<Channel> channel_;
  std::atomic<uint64_t> next_id_{0};
};

absl::Status ParseMockRule(absl::string_view params, MockRule& rule) {
  if (params.empty()) return absl::OkStatus();
  for (absl::string_view kv : absl::StrSplit(params, ',', absl::SkipEmpty())) {
    std::pair<absl::string_view, absl::string_view> p = absl::StrSplit(kv, '=');
    double v = 0.0;
    if (!absl::SimpleAtod(p.second, &v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("mock parameter '", kv, "' needs a numeric value"));
    }
    if (p.first == "min_area") {
      rule.min_area = v;
    } else if (p.first == "lo") {
      rule.luma_lo = v;
    } else if (p.first == "hi") {
      rule.luma_hi = v;
    } else if (p.first == "min_rms") {
      rule.min_rms_contrast = v;
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown mock parameter '", p.first, "'"));
    }
  }
  return rule.Validate();
}

}  // namespace

absl::Status MockRule::Validate() const {
  if (!(min_area >= 0.0)) return absl::InvalidArgumentError("min_area must be >= 0");
  if (!(luma_lo <= luma_hi) || luma_lo < 0.0 || luma_hi > 1.0) {
    return absl::InvalidArgumentError("luma window must satisfy 0 <= lo <= hi <= 1");
  }
  if (!(min_rms_contrast >= 0.0)) {
    return absl::InvalidArgumentError("min_rms_contrast must be >= 0");
  }
  return absl::OkStatus();
}

DetectionSet DetectMock(const MockRule& rule, const ImageTensor& img,
                        std::span<const GroundTruthObject> gt) {
  DetectionSet out;
  for (const GroundTruthObject& obj : gt) {
    if (obj.dont_care) continue;
    const double area = obj.bbox.Area();
    if (area < rule.min_area) continue;
    const BoundingBox box = obj.bbox.ClampTo(img.width(), img.height());
    // Pixel centres at (x + 0.5, y + 0.5) inside [x1, x2) x [y1, y2).
    const int px0 = static_cast<int>(std::ceil(box.x1 - 0.5));
    const int px1 = static_cast<int>(std::ceil(box.x2 - 0.5));
    const int py0 = static_cast<int>(std::ceil(box.y1 - 0.5));
    const int py1 = static_cast<int>(std::ceil(box.y2 - 0.5));
    if (px1 <= px0 || py1 <= py0) continue;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        const double l = img.Luma(x, y);
        sum += l;
        sum_sq += l * l;
      }
    }
    const double n = static_cast<double>(px1 - px0) * (py1 - py0);
    const double mean = sum / n;
    const double rms = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
    if (mean < rule.luma_lo || mean > rule.luma_hi) continue;
    if (rms < rule.min_rms_contrast) continue;
    const double ratio =
        rule.min_area > 0.0 ? area / (2.0 * rule.min_area) : 1.0;
    out.detections.push_back(
        {obj.label, obj.bbox, 0.5 + 0.5 * std::min(1.0, ratio)});
  }
  return out;
}

MockDetector::MockDetector(MockRule rule, std::string id)
    : rule_(rule), id_(std::move(id)) {}

absl::StatusOr<DetectionSet> MockDetector::Detect(
    const ImageTensor& img, const std::string& image_id,
    std::span<const GroundTruthObject> ground_truth) {
  DetectionSet out = DetectMock(rule_, img, ground_truth);
  out.image_id = image_id;
  return out;
}

absl::Status DetectorHandle::Validate() const {
  if (detector_id.empty()) {
    return absl::InvalidArgumentError("detector_id must be non-empty");
  }
  if (endpoint.empty()) return absl::InvalidArgumentError("empty endpoint");
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    return absl::InvalidArgumentError("score_threshold must lie in [0,1]");
  }
  if (timeout_ms <= 0) return absl::InvalidArgumentError("timeout must be positive");
  return absl::OkStatus();
}

absl::StatusOr<std::unique_ptr<Detector>> ConnectDetector(
    const DetectorHandle& handle) {
  if (absl::Status st = handle.Validate(); !st.ok()) return st;
  std::unique_ptr<Channel> channel;
  if (handle.transport == Transport::kSubprocessStdio) {
    absl::StatusOr<std::unique_ptr<Subprocess>> proc =
        Subprocess::Start(handle.endpoint);
    if (!proc.ok()) return proc.status();
    channel = std::make_unique<StdioChannel>(*std::move(proc));
  } else {
    channel = std::make_unique<HttpChannel>(handle.endpoint);
  }
  return std::unique_ptr<Detector>(
      new RemoteDetector(handle, std::move(channel)));
}

absl::StatusOr<DetectorSpec> ParseDetectorSpec(const std::string& spec) {
  DetectorSpec out;
  absl::string_view rest = spec;
  if (rest == "mock" || absl::ConsumePrefix(&rest, "mock:")) {
    if (rest == "mock") rest = "";
    out.is_mock = true;
    if (absl::Status st = ParseMockRule(rest, out.mock_rule); !st.ok()) return st;
    const MockRule& r = out.mock_rule;
    out.handle.detector_id =
        absl::StrFormat("mock(min_area=%g,lo=%g,hi=%g,min_rms=%g)", r.min_area,
                        r.luma_lo, r.luma_hi, r.min_rms_contrast);
    return out;
  }
  if (absl::ConsumePrefix(&rest, "cmd:")) {
    out.handle.transport = Transport::kSubprocessStdio;
    out.handle.endpoint = std::string(rest);
  } else if (absl::StartsWith(rest, "http://") ||
             absl::ConsumePrefix(&rest, "http:")) {
    out.handle.transport = Transport::kHttp;
    out.handle.endpoint = absl::StartsWith(rest, "http://")
                              ? std::string(rest)
                              : absl::StrCat("http://", rest);
  } else {
    return absl::InvalidArgumentError(absl::StrCat(
        "detector spec must start with cmd:, http: or mock, got '", spec, "'"));
  }
  if (out.handle.endpoint.empty()) {
    return absl::InvalidArgumentError("detector spec has an empty endpoint");
  }
  out.handle.detector_id = spec;
  return out;
}

}  // namespace safidel
