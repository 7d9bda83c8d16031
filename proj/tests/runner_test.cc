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


// End-to-end runs of the command-line tool.

#include "safidel/runner.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "safidel/image.h"
#include "safidel/kitti.h"
#include "tests/test_util.h"

namespace safidel {
namespace {

using ::safidel::testing::CliPath;
using ::safidel::testing::FakeDetectorPath;
using ::safidel::testing::MakeBrightnessFixture;
using ::safidel::testing::MockSpec;
using ::safidel::testing::PlantedFixture;
using ::safidel::testing::ReadFile;
using ::safidel::testing::TempDir;
using ::safidel::testing::WriteFile;
using ::testing::HasSubstr;
using Json = nlohmann::json;

struct CliResult {
  int exit_code = -1;
  std::string err;
};

CliResult RunCli(const TempDir& dir, const std::string& args) {
  const std::string err = dir.File("stderr.txt");
  const std::string cmd =
      absl::StrCat(CliPath(), " ", args, " 2>", err, " >", dir.File("stdout.txt"));
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = ReadFile(err);
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fx_ = MakeBrightnessFixture(12);
    manifest_ = testing::WriteFixtureDataset(fx_, dir_);
    mock_ = absl::StrCat("'", MockSpec(fx_.rule), "'");
  }

  std::string Common() const {
    return absl::StrCat("--manifest ", manifest_, " --detector ", mock_);
  }

  TempDir dir_;
  PlantedFixture fx_;
  std::string manifest_;
  std::string mock_;
};

TEST_F(CliTest, AssessWritesReport) {
  const std::string out = dir_.File("report.json");
  CliResult r = RunCli(dir_, absl::StrCat("assess ", Common(), " --out ", out));
  ASSERT_EQ(r.exit_code, kExitOk) << r.err;
  Json j = Json::parse(ReadFile(out));
  EXPECT_EQ(j["status"], "complete");
  ASSERT_EQ(j["samples"].size(), 12u);
  // Every dark object drops below the luma window in the synthetic image.
  for (const Json& s : j["samples"]) {
    EXPECT_EQ(s["safety_relevant"]["false_positives"], 1);
    EXPECT_EQ(s["safety_relevant"]["total"], 1);
  }
  EXPECT_EQ(j["ranking"]["sa"][0]["stats"]["mean"], 1.0);
  EXPECT_EQ(j["provenance"]["tool_version"], ToolVersion());
}

TEST_F(CliTest, AssessCsvAndRank) {
  const std::string csv = dir_.File("r.csv");
  ASSERT_EQ(RunCli(dir_, absl::StrCat("assess ", Common(), " --format csv -o ", csv))
                .exit_code,
            kExitOk);
  const std::string text = ReadFile(csv);
  EXPECT_THAT(text, HasSubstr("detector,generator,sample_id,mode,fn,fp,total\n"));
  EXPECT_THAT(text, HasSubstr(",syn,b00000,sa,0,1,1\n"));
  const std::string rank = dir_.File("rank.csv");
  ASSERT_EQ(RunCli(dir_, absl::StrCat("rank ", Common(), " --format csv -o ", rank))
                .exit_code,
            kExitOk);
  EXPECT_THAT(ReadFile(rank), HasSubstr(",sa,1,syn,12,1.000000,"));
}

TEST_F(CliTest, ConfigErrorsExitTwoWithoutReport) {
  const std::string out = dir_.File("never.json");
  CliResult r = RunCli(
      dir_, absl::StrCat("assess --manifest ", dir_.File("nope.json"), " -o ", out));
  EXPECT_EQ(r.exit_code, kExitConfigError);
  EXPECT_THAT(r.err, HasSubstr("nope.json"));
  EXPECT_FALSE(std::filesystem::exists(out));
  EXPECT_EQ(RunCli(dir_, "assess --bogus").exit_code, kExitConfigError);
  EXPECT_EQ(RunCli(dir_, absl::StrCat("assess ", Common(), " --mode xy")).exit_code,
            kExitConfigError);
  EXPECT_EQ(RunCli(dir_, absl::StrCat("calibrate ", Common(), " --grid gamma=1"))
                .exit_code,
            kExitConfigError);
  EXPECT_EQ(RunCli(dir_, absl::StrCat("assess ", Common(), " --generator other"))
                .exit_code,
            kExitConfigError);
}

TEST_F(CliTest, DetectorFailureKeepsCompletedSamples) {
  const std::string out = dir_.File("partial.json");
  const std::string det =
      absl::StrCat("'cmd:", FakeDetectorPath(), " --die-after 5'");
  CliResult r = RunCli(dir_, absl::StrCat("assess --manifest ", manifest_,
                                          " --detector ", det, " --no-cache -o ", out));
  EXPECT_EQ(r.exit_code, kExitDetectorFailure) << r.err;
  Json j = Json::parse(ReadFile(out));
  EXPECT_EQ(j["status"], "failed");
  const size_t done = j["samples"].size();
  EXPECT_GE(done, 1u);
  EXPECT_LT(done, 12u);
  EXPECT_EQ(j["error"]["sample_id"], absl::StrFormat("b%05d", done));
  for (size_t i = 0; i < done; ++i) {
    EXPECT_EQ(j["samples"][i]["sample_id"], absl::StrFormat("b%05d", i));
  }
}

TEST_F(CliTest, UnstartableDetectorExitsThree) {
  CliResult r = RunCli(dir_, absl::StrCat("assess --manifest ", manifest_,
                                          " --detector 'cmd:/nonexistent/detector'"
                                          " --no-cache -o ",
                                          dir_.File("x.json")));
  EXPECT_EQ(r.exit_code, kExitDetectorFailure) << r.err;
}

// Independent detection rule: mean of the pixels inside the box lies in the
// luma window and the box is large enough.
bool Seen(const ImageTensor& img, const GroundTruthObject& o, const MockRule& rule) {
  if (o.bbox.Area() < rule.min_area) return false;
  double sum = 0;
  int n = 0;
  for (int y = static_cast<int>(o.bbox.y1); y < o.bbox.y2; ++y) {
    for (int x = static_cast<int>(o.bbox.x1); x < o.bbox.x2; ++x) {
      sum += img.at(x, y, 0);
      ++n;
    }
  }
  const double mean = sum / n;
  return mean >= rule.luma_lo && mean <= rule.luma_hi;
}

TEST_F(CliTest, CalibrateFindsPlantedBrightness) {
  const std::string out = dir_.File("cal.json");
  CliResult r = RunCli(
      dir_, absl::StrCat("calibrate ", Common(),
                         " --grid brightness=0.8:1.2:0.1 --loss fnr --mode sa"
                         " --jobs 4 -o ",
                         out));
  ASSERT_EQ(r.exit_code, kExitOk) << r.err;
  Json j = Json::parse(ReadFile(out));
  ASSERT_EQ(j["results"].size(), 1u);
  const Json& res = j["results"][0];
  EXPECT_EQ(res["best"]["params"]["brightness"], 1.1);
  EXPECT_EQ(res["best"]["objective"], 0.0);
  EXPECT_EQ(res["best"]["table"], "(1.0,1.1,1.0):0");
  ASSERT_EQ(res["trace"].size(), 5u);

  for (const Json& t : res["trace"]) {
    CalibratorParams p;
    p.brightness = t["params"]["brightness"].get<double>();
    double expected = 0;
    for (size_t i = 0; i < fx_.samples.size(); ++i) {
      const std::string id = fx_.samples[i].sample_id;
      ImageTensor real = *LoadImage(dir_.File("real/" + id + ".png"));
      ImageTensor syn = *ApplyCalibrator(*LoadImage(dir_.File("syn/" + id + ".png")), p);
      std::vector<GroundTruthObject> gt =
          *LoadKittiLabels(dir_.File("labels/" + id + ".txt"));
      int n = 0, miss_real = 0, miss_syn = 0;
      for (const GroundTruthObject& o : gt) {
        if (o.bbox.Area() < fx_.selector.area_threshold) continue;
        ++n;
        miss_real += !Seen(real, o, fx_.rule);
        miss_syn += !Seen(syn, o, fx_.rule);
      }
      expected += std::abs(miss_real - miss_syn) / static_cast<double>(n);
    }
    EXPECT_NEAR(t["objective"].get<double>(), expected, 1e-12) << p.brightness;
  }
}

TEST_F(CliTest, DeterministicAcrossRunsAndJobs) {
  std::string first;
  for (const char* jobs : {"1", "8", "1"}) {
    for (const char* cmd : {"assess", "calibrate"}) {
      const std::string out = dir_.File(absl::StrCat(cmd, jobs, ".csv"));
      const std::string grid = std::string(cmd) == "calibrate"
                                   ? " --grid brightness=0.9:1.1:0.1"
                                   : "";
      ASSERT_EQ(RunCli(dir_, absl::StrCat(cmd, " ", Common(), grid,
                                          " --iv-epsilon 5 --format csv --jobs ",
                                          jobs, " -o ", out))
                    .exit_code,
                kExitOk);
    }
  }
  for (const char* cmd : {"assess", "calibrate"}) {
    const std::string a = ReadFile(dir_.File(absl::StrCat(cmd, "1.csv")));
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, ReadFile(dir_.File(absl::StrCat(cmd, "8.csv")))) << cmd;
  }
}

TEST_F(CliTest, FakeDetectorRunsAreDeterministicAcrossJobs) {
  const std::string det = absl::StrCat("'cmd:", FakeDetectorPath(), "'");
  for (const char* jobs : {"1", "8"}) {
    ASSERT_EQ(RunCli(dir_, absl::StrCat("assess --manifest ", manifest_, " --detector ",
                                        det, " --detector-id fake --no-cache"
                                        " --ov-epsilon 0.5 --jobs ",
                                        jobs, " -o ", dir_.File(absl::StrCat("f", jobs))))
                  .exit_code,
              kExitOk);
  }
  EXPECT_EQ(ReadFile(dir_.File("f1")), ReadFile(dir_.File("f8")));
}

TEST_F(CliTest, ConfigFileLosesToFlags) {
  const std::string cfg = dir_.File("cfg.json");
  WriteFile(cfg, Json{{"manifest", manifest_},
                      {"detector", MockSpec(fx_.rule)},
                      {"format", "json"},
                      {"mode", "sa"}}
                     .dump());
  const std::string out = dir_.File("c.csv");
  ASSERT_EQ(RunCli(dir_, absl::StrCat("assess --config ", cfg, " --format csv -o ", out))
                .exit_code,
            kExitOk);
  EXPECT_THAT(ReadFile(out), HasSubstr("detector,generator,sample_id"));
  WriteFile(cfg, R"({"manifest": "m.json", "colour": "red"})");
  CliResult r = RunCli(dir_, absl::StrCat("assess --config ", cfg));
  EXPECT_EQ(r.exit_code, kExitConfigError);
  EXPECT_THAT(r.err, HasSubstr("unknown config key 'colour'"));
}

TEST_F(CliTest, TransformIdentityAndBrightness) {
  const std::string in = dir_.File("real/b00000.png");
  ASSERT_EQ(RunCli(dir_, absl::StrCat("transform --in ", in, " --out ",
                                      dir_.File("same.png")))
                .exit_code,
            kExitOk);
  EXPECT_EQ(*LoadImage(dir_.File("same.png")), *LoadImage(in));
  ASSERT_EQ(RunCli(dir_, absl::StrCat("transform --in ", in, " --brightness 0.5 -o ",
                                      dir_.File("half.png")))
                .exit_code,
            kExitOk);
  ImageTensor src = *LoadImage(in), half = *LoadImage(dir_.File("half.png"));
  for (size_t i = 0; i < src.data().size(); ++i) {
    EXPECT_EQ(half.data()[i], FromU8(ToU8(src.data()[i] * 0.5)));
  }
  EXPECT_EQ(RunCli(dir_, absl::StrCat("transform --in ", in, " --contrast -1 -o ",
                                      dir_.File("bad.png")))
                .exit_code,
            kExitConfigError);
}

TEST(ConfigTest, HashIgnoresJobsAndOutput) {
  RunConfig a;
  a.manifest = "m.json";
  RunConfig b = a;
  b.jobs = 8;
  b.out = "elsewhere.json";
  EXPECT_EQ(ConfigHash(a, "assess"), ConfigHash(b, "assess"));
  b.seed = 3;
  EXPECT_NE(ConfigHash(a, "assess"), ConfigHash(b, "assess"));
  EXPECT_NE(ConfigHash(a, "assess"), ConfigHash(a, "calibrate"));
}

TEST(ConfigTest, ApplyConfigJsonTypes) {
  RunConfig c;
  ASSERT_TRUE(ApplyConfigJson(nlohmann::ordered_json::parse(
                                  R"({"jobs": 4, "layers": "fc", "iou": 0.7,
                                      "per_element_mean": true, "loss": "count"})"),
                              c)
                  .ok());
  EXPECT_EQ(c.jobs, 4);
  EXPECT_THAT(c.layers, ::testing::ElementsAre("fc"));
  EXPECT_EQ(c.iou_min, 0.7);
  EXPECT_TRUE(c.per_element_mean);
  EXPECT_EQ(c.loss, CalibrationLoss::kCount);
  EXPECT_FALSE(ApplyConfigJson(nlohmann::ordered_json::parse(R"({"jobs": "4"})"), c).ok());
  EXPECT_FALSE(ApplyConfigJson(nlohmann::ordered_json::parse(R"({"loss": "x"})"), c).ok());
  EXPECT_FALSE(RunConfig{}.per_element_mean);
}

}  // namespace
}  // namespace safidel
