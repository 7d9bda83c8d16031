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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "absl/strings/escaping.h"
#include "absl/strings/str_cat.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "httplib.h"
#include "safidel/detection_cache.h"
#include "safidel/enhance.h"
#include "safidel/image.h"
#include "safidel/protocol.h"
#include "tests/test_util.h"

namespace safidel {
namespace {

using ::safidel::testing::Car;
using ::safidel::testing::FakeDetectorPath;
using ::safidel::testing::FillChecker;
using ::safidel::testing::FillRect;
using ::safidel::testing::TempDir;
using ::testing::HasSubstr;

TEST(ProtocolTest, GoldenRequest) {
  DetectRequestMessage req{"s1#0", "QUJD", {"backbone.3"}, 0.25};
  const std::string wire = SerializeRequest(req);
  EXPECT_EQ(wire,
            R"({"id":"s1#0","image_png_b64":"QUJD","layers":["backbone.3"],)"
            R"("score_threshold":0.25})");
  DetectRequestMessage back = *ParseRequest(wire);
  EXPECT_EQ(back.id, req.id);
  EXPECT_EQ(back.layers, req.layers);
  EXPECT_EQ(back.score_threshold, 0.25);
}

TEST(ProtocolTest, GoldenResponse) {
  DetectResponseMessage resp;
  resp.id = "s1#0";
  resp.detections = {{"Car", {1, 2, 30.5, 40}, 0.875}};
  resp.features["fc"] = {0.1, -2};
  const std::string wire = SerializeResponse(resp);
  EXPECT_EQ(wire,
            R"({"id":"s1#0","detections":[{"label":"Car","bbox":[1.0,2.0,30.5,)"
            R"(40.0],"score":0.875}],"features":{"fc":[0.1,-2.0]}})");
  DetectResponseMessage back = *ParseResponse(wire);
  EXPECT_EQ(back.detections, resp.detections);
  EXPECT_EQ(back.features, resp.features);
  EXPECT_FALSE(back.error.has_value());

  DetectResponseMessage err;
  err.id = "x";
  err.error = "out of memory";
  EXPECT_EQ(SerializeResponse(err),
            R"({"id":"x","detections":[],"error":"out of memory"})");
  EXPECT_EQ(*ParseResponse(SerializeResponse(err))->error, "out of memory");
}

TEST(ProtocolTest, DoublesRoundTripExactly) {
  DetectResponseMessage resp;
  resp.id = "r";
  resp.detections = {{"Car", {0.1, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0 + 1e-12}, 0.1 + 0.2}};
  EXPECT_EQ(ParseResponse(SerializeResponse(resp))->detections, resp.detections);
}

TEST(ProtocolTest, MalformedMessages) {
  EXPECT_FALSE(ParseRequest("not json").ok());
  EXPECT_FALSE(ParseRequest("[]").ok());
  EXPECT_FALSE(ParseRequest(R"({"id":"a"})").ok());
  EXPECT_FALSE(ParseRequest(R"({"id":1,"image_png_b64":""})").ok());
  EXPECT_FALSE(ParseRequest(R"({"id":"a","image_png_b64":"","layers":[1]})").ok());
  EXPECT_FALSE(ParseResponse(R"({"id":"a","detections":[{"label":"Car"}]})").ok());
  EXPECT_FALSE(ParseResponse(
                   R"({"id":"a","detections":[{"label":"Car","bbox":[0,0,1],"score":0.5}]})")
                   .ok());
  EXPECT_FALSE(ParseResponse(R"({"id":"a","detections":{}})").ok());
}

TEST(ProtocolTest, PeekMessageId) {
  EXPECT_EQ(*PeekMessageId(R"({"detections":[],"id":"abc"})"), "abc");
  EXPECT_FALSE(PeekMessageId(R"({"detections":[]})").ok());
  EXPECT_FALSE(PeekMessageId("garbage").ok());
}

TEST(MockDetectorTest, AcceptanceRegion) {
  ImageTensor img(100, 100, 1, 0.0);
  FillRect(img, 0, 0, 20, 20, 0.5);    // detected, area 400 -> score 0.9
  FillRect(img, 50, 0, 10, 10, 0.5);   // too small
  FillRect(img, 0, 50, 20, 20, 0.95);  // too bright
  FillChecker(img, 50, 50, 20, 20, 0.4, 0.6);
  std::vector<GroundTruthObject> gt = {Car(0, 0, 20, 20), Car(50, 0, 60, 10),
                                       Car(0, 50, 20, 70), Car(50, 50, 70, 70),
                                       Car(0, 0, 20, 20, "DontCare")};
  MockRule rule{250, 0.2, 0.8, 0.0};
  DetectionSet d = DetectMock(rule, img, gt);
  ASSERT_EQ(d.detections.size(), 2u);
  EXPECT_EQ(d.detections[0].bbox, gt[0].bbox);
  EXPECT_DOUBLE_EQ(d.detections[0].score, 0.5 + 0.5 * 0.8);
  rule.min_rms_contrast = 0.05;
  d = DetectMock(rule, img, gt);
  ASSERT_EQ(d.detections.size(), 1u);
  EXPECT_EQ(d.detections[0].bbox, gt[3].bbox);
  EXPECT_DOUBLE_EQ(d.detections[0].score, 0.5 + 0.5 * 0.8);
}

TEST(MockDetectorTest, BrighteningRecoversDarkObject) {
  ImageTensor img(40, 40, 1, 0.0);
  FillRect(img, 10, 10, 20, 20, 0.3);
  std::vector<GroundTruthObject> gt = {Car(10, 10, 30, 30)};
  MockRule rule{100, 0.4, 0.9, 0.0};
  EXPECT_TRUE(DetectMock(rule, img, gt).detections.empty());
  ImageTensor bright = *ApplyEnhancement(img, Enhancement::kBrightness, 1.34);
  EXPECT_EQ(DetectMock(rule, bright, gt).detections.size(), 1u);
  rule.min_rms_contrast = 0.01;
  EXPECT_TRUE(DetectMock(rule, bright, gt).detections.empty());
}

TEST(ParseDetectorSpecTest, Forms) {
  DetectorSpec mock = *ParseDetectorSpec("mock:min_area=100,lo=0.1");
  EXPECT_TRUE(mock.is_mock);
  EXPECT_EQ(mock.mock_rule.min_area, 100);
  EXPECT_EQ(mock.mock_rule.luma_lo, 0.1);
  EXPECT_EQ(mock.mock_rule.luma_hi, 0.8);
  EXPECT_TRUE(ParseDetectorSpec("mock")->is_mock);
  DetectorSpec cmd = *ParseDetectorSpec("cmd:python3 serve.py --stdio");
  EXPECT_EQ(cmd.handle.transport, Transport::kSubprocessStdio);
  EXPECT_EQ(cmd.handle.endpoint, "python3 serve.py --stdio");
  EXPECT_EQ(ParseDetectorSpec("http:127.0.0.1:8080")->handle.endpoint,
            "http://127.0.0.1:8080");
  EXPECT_EQ(ParseDetectorSpec("http://h:1")->handle.transport, Transport::kHttp);
  for (const char* bad : {"", "yolo", "cmd:", "mock:gamma=1", "mock:lo=x",
                          "mock:lo=0.9,hi=0.1"}) {
    EXPECT_FALSE(ParseDetectorSpec(bad).ok()) << bad;
  }
}

DetectorHandle FakeHandle(const std::string& flags, std::vector<std::string> layers = {}) {
  DetectorHandle h;
  h.endpoint = absl::StrCat(FakeDetectorPath(), " ", flags);
  h.detector_id = "fake";
  h.requested_layers = std::move(layers);
  h.timeout_ms = 20000;
  return h;
}

ImageTensor Grey(double v) { return ImageTensor(16, 8, 3, v); }

TEST(SubprocessDetectorTest, AnswersWithFeatures) {
  std::unique_ptr<Detector> det = *ConnectDetector(FakeHandle("", {"a", "b"}));
  DetectionSet d = *det->Detect(Grey(FromU8(102)), "img0", {});
  EXPECT_EQ(d.image_id, "img0");
  ASSERT_EQ(d.detections.size(), 1u);
  EXPECT_NEAR(d.detections[0].score, 2 * FromU8(102), 1e-12);
  EXPECT_EQ(d.detections[0].bbox, (BoundingBox{0, 0, 8, 4}));
  EXPECT_THAT(d.features.at("b"),
              ::testing::ElementsAre(::testing::DoubleNear(FromU8(102), 1e-12), 16, 8));
  // Below the score threshold.
  EXPECT_TRUE(det->Detect(Grey(0.1), "img1", {})->detections.empty());
}

TEST(SubprocessDetectorTest, ConcurrentOutOfOrderResponsesAreRouted) {
  std::unique_ptr<Detector> det = *ConnectDetector(FakeHandle("--reverse 4"));
  std::vector<std::thread> threads;
  std::vector<absl::StatusOr<DetectionSet>> out(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      out[i] = det->Detect(Grey(FromU8(130 + 10 * i)), absl::StrCat("img", i), {});
    });
  }
  for (std::thread& t : threads) t.join();
  for (int i = 0; i < 8; ++i) {
    ASSERT_TRUE(out[i].ok()) << out[i].status();
    EXPECT_EQ(out[i]->image_id, absl::StrCat("img", i));
    EXPECT_NEAR(out[i]->detections[0].score,
                std::min(1.0, 2 * FromU8(130 + 10 * i)), 1e-12);
  }
}

TEST(SubprocessDetectorTest, FailureModes) {
  {
    std::unique_ptr<Detector> det = *ConnectDetector(FakeHandle("--die-after 1"));
    EXPECT_TRUE(det->Detect(Grey(0.5), "a", {}).ok());
    absl::StatusOr<DetectionSet> r = det->Detect(Grey(0.5), "b", {});
    ASSERT_FALSE(r.ok());
    EXPECT_EQ(r.status().code(), absl::StatusCode::kUnavailable);
    EXPECT_FALSE(det->Detect(Grey(0.5), "c", {}).ok());
  }
  {
    std::unique_ptr<Detector> det = *ConnectDetector(FakeHandle("--error-after 0"));
    absl::StatusOr<DetectionSet> r = det->Detect(Grey(0.5), "a", {});
    ASSERT_FALSE(r.ok());
    EXPECT_THAT(std::string(r.status().message()), HasSubstr("injected failure"));
  }
  {
    DetectorHandle h = FakeHandle("--wrong-id");
    h.timeout_ms = 500;
    std::unique_ptr<Detector> det = *ConnectDetector(h);
    EXPECT_EQ(det->Detect(Grey(0.5), "a", {}).status().code(),
              absl::StatusCode::kDeadlineExceeded);
  }
  {
    std::unique_ptr<Detector> det = *ConnectDetector(FakeHandle("--garbage"));
    absl::StatusOr<DetectionSet> r = det->Detect(Grey(0.5), "a", {});
    ASSERT_FALSE(r.ok());
    EXPECT_THAT(std::string(r.status().message()), HasSubstr("malformed"));
  }
  {
    std::unique_ptr<Detector> det =
        *ConnectDetector(FakeHandle("--omit-layers", {"fc"}));
    absl::StatusOr<DetectionSet> r = det->Detect(Grey(0.5), "a", {});
    ASSERT_FALSE(r.ok());
    EXPECT_THAT(std::string(r.status().message()), HasSubstr("missing requested layer 'fc'"));
  }
  {
    std::unique_ptr<Detector> det = *ConnectDetector(FakeHandle("--bogus-flag"));
    EXPECT_FALSE(det->Detect(Grey(0.5), "a", {}).ok());
  }
}

int CountLines(const std::string& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

TEST(DetectionCacheTest, SecondPassMakesNoRequests) {
  TempDir dir;
  const std::string log = dir.File("requests.log");
  DetectionCache cache(dir.File("cache"));
  std::vector<DetectionSet> first;
  for (int pass = 0; pass < 2; ++pass) {
    CachingDetector det(*ConnectDetector(FakeHandle("--log " + log, {"fc"})), cache,
                        {"fc"}, 0.5);
    for (int i = 0; i < 5; ++i) {
      DetectionSet d = *det.Detect(Grey(FromU8(140 + i)), absl::StrCat("s", i), {});
      if (pass == 0) {
        first.push_back(d);
      } else {
        EXPECT_EQ(d, first[i]);
      }
    }
    EXPECT_EQ(CountLines(log), 5);
  }
}

TEST(DetectionCacheTest, KeyIncludesLayersThresholdAndPixels) {
  ImageTensor a = Grey(0.5), b = Grey(0.5);
  b.at(3, 3, 1) = FromU8(129);
  const std::vector<std::string> fc = {"fc"}, none = {};
  const std::string base = ImageDigest(a, fc, 0.5);
  EXPECT_EQ(base, ImageDigest(Grey(0.5), fc, 0.5));
  EXPECT_NE(base, ImageDigest(b, fc, 0.5));
  EXPECT_NE(base, ImageDigest(a, none, 0.5));
  EXPECT_NE(base, ImageDigest(a, fc, 0.4));
  EXPECT_NE(base, ImageDigest(ImageTensor(8, 16, 3, 0.5), fc, 0.5));
}

TEST(DetectionCacheTest, CorruptEntriesAreEvicted) {
  TempDir dir;
  DetectionCache cache(dir.path());
  DetectionSet d;
  d.detections = {{"Car", {0, 0, 1, 1}, 0.5}};
  ASSERT_TRUE(cache.Put("det", "k1", d).ok());
  EXPECT_EQ(*cache.Get("det", "k1"), d);
  EXPECT_FALSE(cache.Get("other", "k1").has_value());
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
    if (e.is_regular_file()) testing::WriteFile(e.path().string(), "{broken");
  }
  EXPECT_FALSE(cache.Get("det", "k1").has_value());
  int files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
    files += e.is_regular_file();
  }
  EXPECT_EQ(files, 0);
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

class HttpDetectorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/detect", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      DetectResponseMessage resp;
      absl::StatusOr<DetectRequestMessage> parsed = ParseRequest(req.body);
      if (!parsed.ok()) {
        res.status = 400;
        return;
      }
      resp.id = parsed->id;
      std::string png;
      absl::Base64Unescape(parsed->image_png_b64, &png);
      absl::StatusOr<ImageTensor> img = DecodePng(png);
      if (!img.ok() || img->width() == 1) {
        resp.error = "cannot handle";
        res.status = 500;
      } else {
        resp.detections = {{"Car", {0, 0, 2, 2}, img->at(0, 0, 0)}};
      }
      res.set_content(SerializeResponse(resp), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

TEST_F(HttpDetectorTest, PostsOneRequestPerImage) {
  DetectorSpec spec = *ParseDetectorSpec(absl::StrCat("http://127.0.0.1:", port_));
  std::unique_ptr<Detector> det = *ConnectDetector(spec.handle);
  DetectionSet d = *det->Detect(Grey(FromU8(200)), "a", {});
  ASSERT_EQ(d.detections.size(), 1u);
  EXPECT_EQ(d.detections[0].score, FromU8(200));
  EXPECT_TRUE(det->Detect(Grey(FromU8(100)), "b", {})->detections.empty());
  absl::StatusOr<DetectionSet> err = det->Detect(ImageTensor(1, 1, 1, 0.5), "c", {});
  ASSERT_FALSE(err.ok());
  EXPECT_THAT(std::string(err.status().message()), HasSubstr("cannot handle"));
  EXPECT_EQ(requests_.load(), 3);
}

TEST(HttpDetectorUnreachableTest, ReportsUnavailable) {
  DetectorHandle h;
  h.transport = Transport::kHttp;
  h.endpoint = "http://127.0.0.1:1";
  h.detector_id = "x";
  h.timeout_ms = 1000;
  std::unique_ptr<Detector> det = *ConnectDetector(h);
  EXPECT_EQ(det->Detect(Grey(0.5), "a", {}).status().code(),
            absl::StatusCode::kUnavailable);
}

}  // namespace
}  // namespace safidel
