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


#include "safidel/fidelity.h"

#include <cmath>
#include <numeric>
#include <random>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "tests/test_util.h"

namespace safidel {
namespace {

using ::safidel::testing::Car;
using ::safidel::testing::Det;
using ::safidel::testing::RandomImage;

FidelityQuery Query(Metric m, double eps) {
  FidelityQuery q;
  q.metric = m;
  q.epsilon = eps;
  return q;
}

TEST(VectorDistanceTest, HandExamples) {
  const std::vector<double> a = {0, 1}, b = {1, 1};
  EXPECT_DOUBLE_EQ(*VectorDistance(Metric::kL1, a, b), 1.0);
  const std::vector<double> c = {0.2, 0.5}, d = {0.5, 0.1};
  EXPECT_NEAR(*VectorDistance(Metric::kLinf, c, d), 0.4, 1e-12);
  EXPECT_NEAR(*VectorDistance(Metric::kL2, c, d), 0.5, 1e-12);
  for (Metric m : {Metric::kL1, Metric::kL2, Metric::kLinf}) {
    EXPECT_EQ(*VectorDistance(m, c, c), 0.0);
  }
  const std::vector<double> e = {1.0};
  EXPECT_FALSE(VectorDistance(Metric::kL2, a, e).ok());
}

TEST(VectorDistanceTest, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 1 + rng() % 9;
    std::vector<double> x(n), y(n), z(n);
    for (size_t i = 0; i < n; ++i) x[i] = u(rng), y[i] = u(rng), z[i] = u(rng);
    for (Metric m : {Metric::kL1, Metric::kL2, Metric::kLinf}) {
      const double xy = *VectorDistance(m, x, y);
      EXPECT_EQ(xy, *VectorDistance(m, y, x));
      EXPECT_LE(xy, *VectorDistance(m, x, z) + *VectorDistance(m, z, y) + 1e-12);
      EXPECT_GT(xy, 0.0);
    }
  }
}

TEST(IouTest, HandExamples) {
  EXPECT_DOUBLE_EQ(Iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(Iou({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
  EXPECT_NEAR(Iou({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0 / 7.0, 1e-12);
}

TEST(MatchDetectionsTest, GreedyByScore) {
  std::vector<GroundTruthObject> gt = {Car(0, 0, 10, 10)};
  // IoU 0.6 with the ground truth.
  std::vector<Detection> one = {Det(0, 0, 10, 6, 0.8)};
  EXPECT_EQ(MatchDetections(one, gt, 0.5).gt_to_det[0], 0u);

  std::vector<Detection> two = {Det(0, 0, 10, 9, 0.7), Det(0, 0, 10, 10, 0.9)};
  MatchResult m = MatchDetections(two, gt, 0.5);
  EXPECT_EQ(m.gt_to_det[0], 1u);

  MatchResult none = MatchDetections({}, {Car(0, 0, 5, 5), Car(6, 6, 9, 9)}, 0.5);
  EXPECT_FALSE(none.Detected(0));
  EXPECT_FALSE(none.Detected(1));
}

TEST(MatchDetectionsTest, LabelsMustAgree) {
  std::vector<GroundTruthObject> gt = {Car(0, 0, 10, 10, "Pedestrian")};
  EXPECT_FALSE(MatchDetections({Det(0, 0, 10, 10, 0.9)}, gt, 0.5).Detected(0));
  EXPECT_TRUE(
      MatchDetections({Det(0, 0, 10, 10, 0.9, "pedestrian")}, gt, 0.5).Detected(0));
}

TEST(MatchDetectionsTest, DontCareAbsorbsButIsNeverMatched) {
  std::vector<GroundTruthObject> gt = {Car(0, 0, 10, 10, "DontCare"),
                                       Car(50, 50, 60, 60)};
  MatchResult m = MatchDetections({Det(0, 0, 10, 10, 0.9)}, gt, 0.5);
  EXPECT_FALSE(m.Detected(0));
  EXPECT_THAT(m.absorbed, ::testing::ElementsAre(0u));
}

TEST(EmbedOutputTest, MaxScorePerCell) {
  AttributeSelector sel;  // 3 x 4 on 160 x 120: cells 40 x 40
  sel.score_threshold = 0.3;
  DetectionSet d;
  EXPECT_EQ(EmbedOutput(d, sel, {160, 120}), std::vector<double>(12, 0.0));
  d.detections = {Det(125, 5, 155, 35, 0.9)};  // cell (0,3) -> index 3
  std::vector<double> e = EmbedOutput(d, sel, {160, 120});
  EXPECT_EQ(e[3], 0.9);
  EXPECT_EQ(std::accumulate(e.begin(), e.end(), 0.0), 0.9);
  d.detections = {Det(0, 0, 20, 20, 0.4), Det(0, 0, 30, 30, 0.7)};
  EXPECT_EQ(EmbedOutput(d, sel, {160, 120})[0], 0.7);
}

TEST(IvFidelityTest, NearestRealImage) {
  ImageTensor x = *ImageTensor::FromData(2, 1, 1, {0, 0});
  std::vector<ImageTensor> rw = {*ImageTensor::FromData(2, 1, 1, {0, 1}),
                                 *ImageTensor::FromData(2, 1, 1, {1, 1})};
  FidelityVerdict v = *IvFidelity(x, rw, Query(Metric::kL1, 1.0));
  EXPECT_EQ(v.min_distance, 1.0);
  EXPECT_TRUE(v.holds);
  EXPECT_EQ(v.witness_index, 0u);
  EXPECT_FALSE(IvFidelity(x, rw, Query(Metric::kL1, 0.5))->holds);
  rw.push_back(x);
  EXPECT_EQ(IvFidelity(x, rw, Query(Metric::kL2, 1e-9))->min_distance, 0.0);
  EXPECT_FALSE(IvFidelity(x, {}, Query(Metric::kL1, 1.0)).ok());
  std::vector<ImageTensor> wrong = {ImageTensor(3, 1, 1)};
  EXPECT_FALSE(IvFidelity(x, wrong, Query(Metric::kL1, 1.0)).ok());
}

TEST(IvFidelityTest, PerElementMeanNormalizes) {
  ImageTensor x(10, 10, 1, 0.0), y(10, 10, 1, 0.5);
  FidelityQuery q = Query(Metric::kL1, 1.0);
  EXPECT_DOUBLE_EQ(IvFidelity(x, {&y, 1}, q)->min_distance, 50.0);
  q.per_element_mean = true;
  EXPECT_DOUBLE_EQ(IvFidelity(x, {&y, 1}, q)->min_distance, 0.5);
}

TEST(OvFidelityTest, EmbeddingDistance) {
  AttributeSelector sel;
  DetectionSet syn, real;
  real.detections = {Det(0, 0, 30, 30, 0.8)};
  FidelityVerdict v =
      *OvFidelity(syn, {&real, 1}, Query(Metric::kL1, 1.0), sel, {160, 120});
  EXPECT_DOUBLE_EQ(v.min_distance, 0.8);
  EXPECT_EQ(OvFidelity(real, {&real, 1}, Query(Metric::kL1, 1.0), sel, {160, 120})
                ->min_distance,
            0.0);
  EXPECT_FALSE(OvFidelity(syn, {}, Query(Metric::kL1, 1.0), sel, {160, 120}).ok());
}

TEST(LfFidelityTest, MaxOverLayers) {
  DetectionSet syn, real;
  syn.features = {{"a", {0.0}}, {"b", {0.0}}};
  real.features = {{"a", {0.3}}, {"b", {0.9}}};
  FidelityQuery q = Query(Metric::kL1, 0.9);
  q.layers = {"a", "b"};
  FidelityVerdict v = *LfFidelity(syn, {&real, 1}, q);
  EXPECT_NEAR(v.min_distance, 0.9, 1e-12);
  EXPECT_TRUE(v.holds);
  q.epsilon = 0.89;
  EXPECT_FALSE(LfFidelity(syn, {&real, 1}, q)->holds);
  q.layers = {"a", "missing"};
  EXPECT_FALSE(LfFidelity(syn, {&real, 1}, q).ok());
  q.layers = {};
  FidelityVerdict vacuous = *LfFidelity(syn, {&real, 1}, q);
  EXPECT_TRUE(vacuous.holds);
  EXPECT_EQ(vacuous.min_distance, 0.0);
}

TEST(SaFidelityTest, ExampleScene) {
  AttributeSelector sel;
  sel.pia_names = {"frontcar", "farcar"};
  sel.sia_names = {"frontcar"};
  sel.passthrough_names = {"rain"};
  sel.summary_attributes = {{"frontcar", SummaryKind::kNear},
                            {"farcar", SummaryKind::kFar}};
  sel.area_threshold = 1000;
  ScenarioDescription sd =
      *ScenarioDescription::FromAttributes({{"frontcar", 1}, {"farcar", 1}, {"rain", 1}});
  DetectionSet real, syn;
  syn.detections = {Det(0, 0, 50, 50, 0.9)};
  FidelityVerdict v = *SaFidelity(syn, {&real, 1}, sd, sel, {100, 100});
  EXPECT_FALSE(v.holds);
  EXPECT_EQ(v.min_distance, 1.0);
  EXPECT_TRUE(SaFidelity(syn, {&syn, 1}, sd, sel, {100, 100})->holds);
}

TEST(SaFidelityTest, HoldsWhereOutputValueFails) {
  AttributeSelector sel;
  sel.area_threshold = 800;
  const std::vector<GroundTruthObject> gt = {Car(5, 5, 35, 35), Car(85, 85, 95, 95)};
  ScenarioDescription sd = *EncodeGroundTruth(gt, {160, 120}, sel);
  DetectionSet real, syn;
  real.detections = {Det(5, 5, 35, 35, 0.9), Det(85, 85, 95, 95, 0.9)};
  syn.detections = {Det(5, 5, 35, 35, 0.9)};
  EXPECT_TRUE(SaFidelity(syn, {&real, 1}, sd, sel, {160, 120})->holds);
  EXPECT_FALSE(
      OvFidelity(syn, {&real, 1}, Query(Metric::kL2, 0.1), sel, {160, 120})->holds);
}

// Detected by the four left-most cars on the real side; the synthetic
// image picks up the two distant cars and loses the left-most one.
struct SixCarScene {
  std::vector<GroundTruthObject> gt;
  DetectionSet real;
  DetectionSet syn;
  AttributeSelector sel;
};

SixCarScene MakeSixCarScene() {
  SixCarScene f;
  f.sel.area_threshold = 2000;
  for (int i = 0; i < 6; ++i) {
    const double x = 20 + 150 * i;
    f.gt.push_back(Car(x, 200, x + 60, 250));
  }
  f.gt.push_back(Car(1000, 180, 1030, 190));  // far, not safety relevant
  auto det = [&](int i) {
    const BoundingBox& b = f.gt[i].bbox;
    return Det(b.x1 + 1, b.y1 + 1, b.x2, b.y2, 0.9);
  };
  f.real.detections = {det(0), det(1), det(2), det(3)};
  f.syn.detections = {det(1), det(2), det(3), det(4), det(5), det(6)};
  return f;
}

TEST(CountInconsistenciesTest, SixCarScene) {
  SixCarScene f = MakeSixCarScene();
  InconsistencyCount c = CountInconsistencies(f.gt, f.real, f.syn, f.sel, 0.5,
                                              CountMode::kSafetyRelevant);
  EXPECT_EQ(c.false_negatives, 2);
  EXPECT_EQ(c.false_positives, 1);
  EXPECT_EQ(c.total, 3);
  EXPECT_EQ(c.num_objects, 6);
  InconsistencyCount all = CountInconsistencies(f.gt, f.real, f.syn, f.sel, 0.5,
                                                CountMode::kAllObjects);
  EXPECT_EQ(all.total, 4);
  EXPECT_EQ(all.num_objects, 7);
  EXPECT_EQ(CountInconsistencies(f.gt, f.real, f.real, f.sel, 0.5,
                                 CountMode::kSafetyRelevant)
                .total,
            0);
}

TEST(CountInconsistenciesTest, IgnoresLowScoresAndDontCare) {
  AttributeSelector sel;
  sel.area_threshold = 0;
  std::vector<GroundTruthObject> gt = {Car(0, 0, 10, 10), Car(20, 20, 30, 30, "DontCare")};
  DetectionSet real, syn;
  real.detections = {Det(0, 0, 10, 10, 0.4), Det(20, 20, 30, 30, 0.9)};
  InconsistencyCount c =
      CountInconsistencies(gt, real, syn, sel, 0.5, CountMode::kAllObjects);
  EXPECT_EQ(c.num_objects, 1);
  EXPECT_EQ(c.total, 0);
}

TEST(FnrConsistencyTest, HandExamples) {
  AttributeSelector sel;
  sel.area_threshold = 100;
  std::vector<GroundTruthObject> gt;
  for (int i = 0; i < 4; ++i) gt.push_back(Car(30 * i, 0, 30 * i + 20, 20));
  DetectionSet real, syn;
  real.detections = {Det(0, 0, 20, 20, 0.9), Det(30, 0, 50, 20, 0.9)};
  syn.detections = {Det(0, 0, 20, 20, 0.9), Det(30, 0, 50, 20, 0.9),
                    Det(60, 0, 80, 20, 0.9)};
  EXPECT_DOUBLE_EQ(FnrConsistency(gt, real, syn, sel, 0.5), 0.25);
  EXPECT_EQ(FnrConsistency(gt, real, real, sel, 0.5), 0.0);
  EXPECT_EQ(FnrConsistency({}, real, syn, sel, 0.5), 0.0);
}

// Random well-separated scenes: every detection overlaps at most one
// ground-truth box, so "detected" reduces to the existence of a confident
// same-label detection with enough overlap.
struct RandomScene {
  std::vector<GroundTruthObject> gt;
  DetectionSet real, syn;
  AttributeSelector sel;
};

RandomScene MakeRandomScene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  RandomScene s;
  s.sel.area_threshold = 1500;
  const int n = 1 + static_cast<int>(rng() % 8);
  for (int i = 0; i < n; ++i) {
    const double x = 100.0 * i, w = 20 + 60 * u(rng), h = 20 + 60 * u(rng);
    s.gt.push_back(Car(x, 10, x + w, 10 + h, u(rng) < 0.1 ? "DontCare" : "Car"));
  }
  for (DetectionSet* d : {&s.real, &s.syn}) {
    for (const GroundTruthObject& o : s.gt) {
      if (u(rng) < 0.45) continue;
      const double shrink = u(rng) * 0.6;  // IoU 1 - shrink
      d->detections.push_back({u(rng) < 0.9 ? "Car" : "Van",
                               {o.bbox.x1, o.bbox.y1, o.bbox.x2,
                                o.bbox.y1 + o.bbox.Height() * (1 - shrink)},
                               u(rng)});
    }
    if (u(rng) < 0.3) d->detections.push_back(Det(5000, 10, 5040, 60, 0.95));
  }
  return s;
}

bool OracleDetected(const GroundTruthObject& o, const DetectionSet& d,
                    double score_min) {
  for (const Detection& det : d.detections) {
    if (det.score < score_min || det.label != o.label) continue;
    const double inter = (std::min(o.bbox.x2, det.bbox.x2) -
                          std::max(o.bbox.x1, det.bbox.x1)) *
                         (std::min(o.bbox.y2, det.bbox.y2) -
                          std::max(o.bbox.y1, det.bbox.y1));
    if (inter <= 0) continue;
    const double uni = o.bbox.Area() + det.bbox.Area() - inter;
    if (inter / uni >= 0.5) return true;
  }
  return false;
}

TEST(CountInconsistenciesPropertyTest, MatchesBruteForceXor) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    RandomScene s = MakeRandomScene(rng);
    for (CountMode mode : {CountMode::kSafetyRelevant, CountMode::kAllObjects}) {
      int fn = 0, fp = 0, n = 0;
      for (const GroundTruthObject& o : s.gt) {
        if (o.dont_care) continue;
        if (mode == CountMode::kSafetyRelevant && o.bbox.Area() < 1500) continue;
        ++n;
        const bool r = OracleDetected(o, s.real, s.sel.score_threshold);
        const bool y = OracleDetected(o, s.syn, s.sel.score_threshold);
        fn += !r && y;
        fp += r && !y;
      }
      InconsistencyCount c = CountInconsistencies(s.gt, s.real, s.syn, s.sel, 0.5, mode);
      EXPECT_EQ(c.false_negatives, fn);
      EXPECT_EQ(c.false_positives, fp);
      EXPECT_EQ(c.total, fn + fp);
      EXPECT_EQ(c.num_objects, n);
      EXPECT_LE(c.total, c.num_objects);
    }
  }
}

TEST(CountInconsistenciesPropertyTest, SwapAndDominance) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    RandomScene s = MakeRandomScene(rng);
    InconsistencyCount a = CountInconsistencies(s.gt, s.real, s.syn, s.sel, 0.5,
                                                CountMode::kSafetyRelevant);
    InconsistencyCount b = CountInconsistencies(s.gt, s.syn, s.real, s.sel, 0.5,
                                                CountMode::kSafetyRelevant);
    EXPECT_EQ(a.false_negatives, b.false_positives);
    EXPECT_EQ(a.false_positives, b.false_negatives);
    EXPECT_EQ(a.total, b.total);
    EXPECT_LE(a.total, CountInconsistencies(s.gt, s.real, s.syn, s.sel, 0.5,
                                            CountMode::kAllObjects)
                           .total);
  }
}

TEST(FidelityPropertyTest, SubsetMinDistanceIsConservative) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    ImageTensor x = RandomImage(rng, 4, 3, 1);
    std::vector<ImageTensor> rw;
    const int n = 2 + rng() % 5;
    for (int i = 0; i < n; ++i) rw.push_back(RandomImage(rng, 4, 3, 1));
    std::vector<ImageTensor> subset(rw.begin(), rw.begin() + 1 + rng() % n);
    for (Metric m : {Metric::kL1, Metric::kL2, Metric::kLinf}) {
      EXPECT_GE(IvFidelity(x, subset, Query(m, 1))->min_distance,
                IvFidelity(x, rw, Query(m, 1))->min_distance);
    }
  }
}

TEST(MetricNameTest, RoundTrip) {
  for (Metric m : {Metric::kL1, Metric::kL2, Metric::kLinf}) {
    EXPECT_EQ(*ParseMetric(MetricName(m)), m);
  }
  EXPECT_FALSE(ParseMetric("cosine").ok());
}

}  // namespace
}  // namespace safidel
