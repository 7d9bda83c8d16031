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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace safidel {
namespace {

absl::Status CheckQuery(const FidelityQuery& q) {
  if (!(q.epsilon > 0.0)) {
    return absl::InvalidArgumentError("epsilon must be positive");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> QueryDistance(const FidelityQuery& q,
                                     std::span<const double> x,
                                     std::span<const double> y) {
  absl::StatusOr<double> d = VectorDistance(q.metric, x, y);
  if (!d.ok() || !q.per_element_mean || x.empty()) return d;
  const double n = static_cast<double>(x.size());
  switch (q.metric) {
    case Metric::kL1:
      return *d / n;
    case Metric::kL2:
      return *d / std::sqrt(n);
    case Metric::kLinf:
      return *d;
  }
  return d;
}

// Nearest member of a candidate set, ties to the lowest index.
template <typename DistanceFn>
absl::StatusOr<FidelityVerdict> NearestMember(size_t n, double epsilon,
                                              DistanceFn distance) {
  FidelityVerdict v;
  v.min_distance = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    absl::StatusOr<double> d = distance(i);
    if (!d.ok()) return d.status();
    if (*d < v.min_distance) {
      v.min_distance = *d;
      v.witness_index = i;
    }
  }
  v.holds = v.min_distance <= epsilon;
  return v;
}

bool ObjectSelected(const GroundTruthObject& obj, const AttributeSelector& sel,
                    CountMode mode) {
  if (obj.dont_care) return false;
  return mode == CountMode::kAllObjects ||
         obj.bbox.Area() >= sel.area_threshold;
}

std::vector<Detection> Confident(const DetectionSet& dets,
                                 const AttributeSelector& sel) {
  std::vector<Detection> out;
  for (const Detection& d : dets.detections) {
    if (d.score >= sel.score_threshold) out.push_back(d);
  }
  return out;
}

}  // namespace

absl::StatusOr<double> VectorDistance(Metric metric, std::span<const double> x,
                                      std::span<const double> y) {
  if (x.size() != y.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: ", x.size(), " vs ", y.size()));
  }
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    switch (metric) {
      case Metric::kL1:
        acc += d;
        break;
      case Metric::kL2:
        acc += d * d;
        break;
      case Metric::kLinf:
        acc = std::max(acc, d);
        break;
    }
  }
  return metric == Metric::kL2 ? std::sqrt(acc) : acc;
}

double Iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.Area() + b.Area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

MatchResult MatchDetections(const std::vector<Detection>& dets,
                            const std::vector<GroundTruthObject>& gt,
                            double iou_min) {
  MatchResult result;
  result.gt_to_det.assign(gt.size(), std::nullopt);

  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dets[a].score > dets[b].score;
  });

  for (size_t di : order) {
    const Detection& det = dets[di];
    std::optional<size_t> best;
    double best_iou = 0.0;
    bool hits_dont_care = false;
    for (size_t gi = 0; gi < gt.size(); ++gi) {
      const double overlap = Iou(det.bbox, gt[gi].bbox);
      if (overlap < iou_min) continue;
      if (gt[gi].dont_care) {
        hits_dont_care = true;
        continue;
      }
      if (result.gt_to_det[gi].has_value()) continue;
      if (!SameLabel(det.label, gt[gi].label)) continue;
      if (!best.has_value() || overlap > best_iou) {
        best = gi;
        best_iou = overlap;
      }
    }
    if (best.has_value()) {
      result.gt_to_det[*best] = di;
    } else if (hits_dont_care) {
      result.absorbed.push_back(di);
    }
  }
  return result;
}

std::vector<double> EmbedOutput(const DetectionSet& dets,
                                const AttributeSelector& sel,
                                ImageSize image_size) {
  std::vector<double> out(static_cast<size_t>(sel.grid_rows) * sel.grid_cols,
                          0.0);
  for (const Detection& d : dets.detections) {
    if (d.score < sel.score_threshold) continue;
    BoundingBox box = d.bbox.ClampTo(image_size.width, image_size.height);
    if (!box.IsValid()) continue;
    auto [row, col] = CellOf(box.CenterX(), box.CenterY(), image_size, sel);
    double& cell = out[static_cast<size_t>(row) * sel.grid_cols + col];
    cell = std::max(cell, d.score);
  }
  return out;
}

absl::StatusOr<FidelityVerdict> IvFidelity(const ImageTensor& x_syn,
                                           std::span<const ImageTensor> rw,
                                           const FidelityQuery& q) {
  if (absl::Status st = CheckQuery(q); !st.ok()) return st;
  if (rw.empty()) return absl::InvalidArgumentError("empty real set");
  for (const ImageTensor& x : rw) {
    if (!x.SameShape(x_syn)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "image shape mismatch: ", x.width(), "x", x.height(), "x",
          x.channels(), " vs ", x_syn.width(), "x", x_syn.height(), "x",
          x_syn.channels()));
    }
  }
  return NearestMember(rw.size(), q.epsilon, [&](size_t i) {
    return QueryDistance(q, x_syn.data(), rw[i].data());
  });
}

absl::StatusOr<FidelityVerdict> OvFidelity(
    const DetectionSet& dets_syn, std::span<const DetectionSet> dets_rw,
    const FidelityQuery& q, const AttributeSelector& sel,
    ImageSize image_size) {
  if (absl::Status st = CheckQuery(q); !st.ok()) return st;
  if (dets_rw.empty()) return absl::InvalidArgumentError("empty real set");
  const std::vector<double> syn = EmbedOutput(dets_syn, sel, image_size);
  absl::StatusOr<FidelityVerdict> v =
      NearestMember(dets_rw.size(), q.epsilon, [&](size_t i) {
        return QueryDistance(q, syn, EmbedOutput(dets_rw[i], sel, image_size));
      });
  if (v.ok() && v->witness_index) {
    v->witness_id = dets_rw[*v->witness_index].image_id;
  }
  return v;
}

absl::StatusOr<FidelityVerdict> LfFidelity(const DetectionSet& feat_syn,
                                           std::span<const DetectionSet> feat_rw,
                                           const FidelityQuery& q) {
  if (absl::Status st = CheckQuery(q); !st.ok()) return st;
  if (feat_rw.empty()) return absl::InvalidArgumentError("empty real set");
  auto layer_of = [](const DetectionSet& d, const std::string& layer)
      -> absl::StatusOr<const std::vector<double>*> {
    auto it = d.features.find(layer);
    if (it == d.features.end()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "image '", d.image_id, "' has no features for layer '", layer, "'"));
    }
    return &it->second;
  };
  absl::StatusOr<FidelityVerdict> v =
      NearestMember(feat_rw.size(), q.epsilon,
                    [&](size_t i) -> absl::StatusOr<double> {
                      double worst = 0.0;
                      for (const std::string& layer : q.layers) {
                        auto a = layer_of(feat_syn, layer);
                        if (!a.ok()) return a.status();
                        auto b = layer_of(feat_rw[i], layer);
                        if (!b.ok()) return b.status();
                        absl::StatusOr<double> d = QueryDistance(q, **a, **b);
                        if (!d.ok()) return d.status();
                        worst = std::max(worst, *d);
                      }
                      return worst;
                    });
  if (v.ok() && v->witness_index) {
    v->witness_id = feat_rw[*v->witness_index].image_id;
  }
  return v;
}

absl::StatusOr<FidelityVerdict> SaFidelity(
    const DetectionSet& dets_syn, std::span<const DetectionSet> dets_rw,
    const ScenarioDescription& sd, const AttributeSelector& sel,
    ImageSize image_size) {
  if (dets_rw.empty()) return absl::InvalidArgumentError("empty real set");
  FidelityVerdict v;
  v.min_distance = 1.0;
  for (size_t i = 0; i < dets_rw.size(); ++i) {
    absl::StatusOr<bool> similar =
        SafetySimilar(sd, dets_syn, dets_rw[i], sel, image_size);
    if (!similar.ok()) return similar.status();
    if (*similar) {
      v.min_distance = 0.0;
      v.holds = true;
      v.witness_index = i;
      v.witness_id = dets_rw[i].image_id;
      break;
    }
  }
  return v;
}

InconsistencyCount CountInconsistencies(
    const std::vector<GroundTruthObject>& gt, const DetectionSet& dets_real,
    const DetectionSet& dets_syn, const AttributeSelector& sel,
    double iou_min, CountMode mode) {
  const MatchResult real =
      MatchDetections(Confident(dets_real, sel), gt, iou_min);
  const MatchResult syn = MatchDetections(Confident(dets_syn, sel), gt, iou_min);
  InconsistencyCount count;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!ObjectSelected(gt[i], sel, mode)) continue;
    ++count.num_objects;
    const bool in_real = real.Detected(i);
    const bool in_syn = syn.Detected(i);
    if (!in_real && in_syn) ++count.false_negatives;
    if (in_real && !in_syn) ++count.false_positives;
  }
  count.total = count.false_negatives + count.false_positives;
  return count;
}

double FnrConsistency(const std::vector<GroundTruthObject>& gt,
                      const DetectionSet& dets_real,
                      const DetectionSet& dets_syn,
                      const AttributeSelector& sel, double iou_min,
                      CountMode mode) {
  const MatchResult real =
      MatchDetections(Confident(dets_real, sel), gt, iou_min);
  const MatchResult syn = MatchDetections(Confident(dets_syn, sel), gt, iou_min);
  int n = 0;
  int missed_real = 0;
  int missed_syn = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!ObjectSelected(gt[i], sel, mode)) continue;
    ++n;
    if (!real.Detected(i)) ++missed_real;
    if (!syn.Detected(i)) ++missed_syn;
  }
  if (n == 0) return 0.0;
  return std::abs(static_cast<double>(missed_real) / n -
                  static_cast<double>(missed_syn) / n);
}

std::string MetricName(Metric metric) {
  switch (metric) {
    case Metric::kL1:
      return "L1";
    case Metric::kL2:
      return "L2";
    case Metric::kLinf:
      return "Linf";
  }
  return "?";
}

absl::StatusOr<Metric> ParseMetric(absl::string_view name) {
  if (name == "L1" || name == "l1") return Metric::kL1;
  if (name == "L2" || name == "l2") return Metric::kL2;
  if (name == "Linf" || name == "linf") return Metric::kLinf;
  return absl::InvalidArgumentError(absl::StrCat("unknown metric '", name, "'"));
}

std::string CountModeName(CountMode mode) {
  return mode == CountMode::kSafetyRelevant ? "safety_relevant" : "all_objects";
}

}  // namespace safidel
