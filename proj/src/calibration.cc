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

#include "safidel/calibration.h"

#include <cmath>
#include <random>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "safidel/parallel.h"

namespace safidel {
namespace {

double Round10(double v) {
  double r = std::round(v * 1e10) / 1e10;
  return r == 0.0 ? 0.0 : r;
}

std::string ParamsString(const CalibratorParams& p) {
  return absl::StrFormat("(contrast=%g, brightness=%g, sharpness=%g, blur=%g)",
                         p.contrast, p.brightness, p.sharpness, p.blur_sigma);
}

absl::StatusOr<ImageTensor> Materialize(
    const std::variant<ImageTensor, std::string>& source) {
  if (const ImageTensor* img = std::get_if<ImageTensor>(&source)) return *img;
  return LoadImage(std::get<std::string>(source));
}

// Trims trailing zeros but keeps at least `min_decimals`.
std::string TrimmedDecimal(double v, int min_decimals) {
  std::string s = absl::StrFormat("%.10f", v);
  size_t dot = s.find('.');
  size_t keep = dot + 1 + min_decimals;
  while (s.size() > keep && s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

const std::vector<double>* AxisValues(const std::optional<ParamRange>& r,
                                      double identity,
                                      std::vector<double>& storage) {
  storage.clear();
  if (!r.has_value()) {
    storage.push_back(identity);
  } else {
    for (size_t i = 0; i < r->Count(); ++i) storage.push_back(r->Value(i));
  }
  return &storage;
}

}  // namespace

absl::Status ParamRange::Validate() const {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
    return absl::InvalidArgumentError("grid range values must be finite");
  }
  if (start > stop) {
    return absl::InvalidArgumentError(
        absl::StrCat("grid range start ", start, " exceeds stop ", stop));
  }
  if (!(step > 0.0)) {
    return absl::InvalidArgumentError("grid step must be positive");
  }
  return absl::OkStatus();
}

size_t ParamRange::Count() const {
  return static_cast<size_t>(std::floor((stop - start) / step + 1.0 + 1e-9));
}

double ParamRange::Value(size_t i) const {
  return Round10(start + static_cast<double>(i) * step);
}

absl::Status ParamGrid::Validate() const {
  const std::pair<const char*, const std::optional<ParamRange>*> axes[] = {
      {"contrast", &contrast},
      {"brightness", &brightness},
      {"sharpness", &sharpness},
      {"blur", &blur_sigma}};
  for (const auto& [name, range] : axes) {
    if (!range->has_value()) continue;
    if (absl::Status st = (*range)->Validate(); !st.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(name, ": ", st.message()));
    }
    const bool is_blur = range == &blur_sigma;
    if (is_blur ? (*range)->start < 0.0 : (*range)->start <= 0.0) {
      return absl::InvalidArgumentError(absl::StrCat(
          name, is_blur ? " must be >= 0" : " factors must be positive"));
    }
  }
  return absl::OkStatus();
}

size_t ParamGrid::Size() const {
  size_t n = 1;
  for (const auto* r : {&contrast, &brightness, &sharpness, &blur_sigma}) {
    if (r->has_value()) n *= (*r)->Count();
  }
  return n;
}

ParamGrid DefaultGrid() {
  ParamGrid g;
  g.contrast = ParamRange{0.8, 1.2, 0.1};
  g.brightness = ParamRange{0.8, 1.2, 0.1};
  g.sharpness = ParamRange{0.8, 1.2, 0.1};
  return g;
}

absl::StatusOr<ParamGrid> ParseParamGrid(absl::string_view text) {
  ParamGrid grid;
  for (absl::string_view item : absl::StrSplit(text, ',', absl::SkipEmpty())) {
    item = absl::StripAsciiWhitespace(item);
    std::vector<absl::string_view> kv = absl::StrSplit(item, '=');
    if (kv.size() != 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid item '", item, "' must look like name=start:stop:step"));
    }
    std::vector<absl::string_view> parts = absl::StrSplit(kv[1], ':');
    double v[3] = {0.0, 0.0, 1.0};
    if (parts.size() != 1 && parts.size() != 3) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid item '", item, "' needs 1 or 3 numbers"));
    }
    for (size_t i = 0; i < parts.size(); ++i) {
      if (!absl::SimpleAtod(parts[i], &v[i])) {
        return absl::InvalidArgumentError(
            absl::StrCat("grid item '", item, "' has a non-numeric value"));
      }
    }
    ParamRange range = parts.size() == 1 ? ParamRange{v[0], v[0], 1.0}
                                         : ParamRange{v[0], v[1], v[2]};
    std::optional<ParamRange>* target = nullptr;
    if (kv[0] == "contrast") {
      target = &grid.contrast;
    } else if (kv[0] == "brightness") {
      target = &grid.brightness;
    } else if (kv[0] == "sharpness") {
      target = &grid.sharpness;
    } else if (kv[0] == "blur" || kv[0] == "blur_sigma") {
      target = &grid.blur_sigma;
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown grid parameter '", kv[0], "'"));
    }
    if (target->has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid parameter '", kv[0], "' given twice"));
    }
    *target = range;
  }
  if (absl::Status st = grid.Validate(); !st.ok()) return st;
  return grid;
}

std::vector<CalibratorParams> EnumerateGrid(const ParamGrid& grid) {
  std::vector<double> cs, bs, ss, ls;
  AxisValues(grid.contrast, 1.0, cs);
  AxisValues(grid.brightness, 1.0, bs);
  AxisValues(grid.sharpness, 1.0, ss);
  AxisValues(grid.blur_sigma, 0.0, ls);
  std::vector<CalibratorParams> out;
  out.reserve(cs.size() * bs.size() * ss.size() * ls.size());
  for (double c : cs) {
    for (double b : bs) {
      for (double s : ss) {
        for (double l : ls) out.push_back({c, b, s, l});
      }
    }
  }
  return out;
}

absl::StatusOr<CalibrationLoss> ParseCalibrationLoss(absl::string_view name) {
  if (name == "neq") return CalibrationLoss::kNeq;
  if (name == "l1") return CalibrationLoss::kL1;
  if (name == "fnr") return CalibrationLoss::kFnr;
  if (name == "count") return CalibrationLoss::kCount;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown loss '", name, "' (expected neq, l1, fnr or count)"));
}

std::string CalibrationLossName(CalibrationLoss loss) {
  switch (loss) {
    case CalibrationLoss::kNeq:
      return "neq";
    case CalibrationLoss::kL1:
      return "l1";
    case CalibrationLoss::kFnr:
      return "fnr";
    case CalibrationLoss::kCount:
      return "count";
  }
  return "?";
}

std::string CalibrationModeName(CalibrationMode mode) {
  return mode == CalibrationMode::kSafetyAware ? "sa" : "ov";
}

absl::StatusOr<CalibrationProblem> CalibrationProblem::Create(
    std::vector<CalibrationSample> samples, AttributeSelector selector,
    Detector& detector, CalibrationOptions options) {
  if (samples.empty()) {
    return absl::InvalidArgumentError("calibration dataset is empty");
  }
  if (absl::Status st = selector.Validate(); !st.ok()) return st;
  if (!(options.iou_min > 0.0 && options.iou_min <= 1.0)) {
    return absl::InvalidArgumentError("iou_min must lie in (0,1]");
  }
  if (!detector.SupportsConcurrentCalls()) options.jobs = 1;
  CalibrationProblem problem(std::move(samples), std::move(selector), detector,
                             options);
  problem.real_dets_.resize(problem.samples_.size());
  for (size_t i = 0; i < problem.samples_.size(); ++i) {
    CalibrationSample& s = problem.samples_[i];
    absl::StatusOr<ImageTensor> real = Materialize(s.real);
    if (!real.ok()) return real.status();
    absl::StatusOr<DetectionSet> dets =
        detector.Detect(*real, s.sample_id, s.ground_truth);
    if (!dets.ok()) {
      return absl::Status(dets.status().code(),
                          absl::StrCat("detector failed on real image of sample '",
                                       s.sample_id, "': ", dets.status().message()));
    }
    problem.real_dets_[i] = *std::move(dets);
    // Only the detections are needed from here on.
    s.real = std::string();
  }
  return problem;
}

absl::StatusOr<CalibrationProblem> CalibrationProblem::FromDataset(
    const PairedDataset& ds, const std::string& generator, Detector& detector,
    CalibrationOptions options) {
  if (!ds.HasGenerator(generator)) {
    return absl::NotFoundError(
        absl::StrCat("generator '", generator, "' is not in the dataset"));
  }
  std::vector<CalibrationSample> samples;
  samples.reserve(ds.samples.size());
  for (const PairedSample& p : ds.samples) {
    CalibrationSample s;
    s.sample_id = p.sample_id;
    s.image_size = p.image_size;
    s.ground_truth = p.ground_truth;
    s.sd = p.sd;
    s.synthetic = p.synthetic_images.at(generator);
    s.real = p.real_image;
    samples.push_back(std::move(s));
  }
  return Create(std::move(samples), ds.selector, detector, options);
}

absl::StatusOr<double> CalibrationProblem::SampleLoss(
    size_t index, const DetectionSet& calibrated) const {
  const CalibrationSample& s = samples_[index];
  const DetectionSet& real = real_dets_[index];
  const CountMode count_mode = options_.mode == CalibrationMode::kSafetyAware
                                   ? CountMode::kSafetyRelevant
                                   : CountMode::kAllObjects;
  switch (options_.loss) {
    case CalibrationLoss::kFnr:
      return FnrConsistency(s.ground_truth, real, calibrated, selector_,
                            options_.iou_min, count_mode);
    case CalibrationLoss::kCount:
      return static_cast<double>(CountInconsistencies(s.ground_truth, real,
                                                      calibrated, selector_,
                                                      options_.iou_min,
                                                      count_mode)
                                     .total);
    case CalibrationLoss::kNeq:
    case CalibrationLoss::kL1: {
      absl::StatusOr<ScenarioDescription> a =
          Interpret(real, s.sd, selector_, s.image_size);
      if (!a.ok()) return a.status();
      absl::StatusOr<ScenarioDescription> b =
          Interpret(calibrated, s.sd, selector_, s.image_size);
      if (!b.ok()) return b.status();
      const bool sa = options_.mode == CalibrationMode::kSafetyAware;
      return AttrLoss(options_.loss == CalibrationLoss::kNeq
                          ? AttributeLoss::kNeq
                          : AttributeLoss::kL1,
                      sa ? Sia(*a, selector_) : Pia(*a, selector_),
                      sa ? Sia(*b, selector_) : Pia(*b, selector_));
    }
  }
  return absl::InternalError("unknown loss");
}

absl::StatusOr<double> CalibrationProblem::Objective(
    const CalibratorParams& params) const {
  double total = 0.0;
  for (size_t i = 0; i < samples_.size(); ++i) {
    const CalibrationSample& s = samples_[i];
    absl::StatusOr<ImageTensor> syn = Materialize(s.synthetic);
    if (!syn.ok()) return syn.status();
    absl::StatusOr<ImageTensor> calibrated = ApplyCalibrator(*syn, params);
    if (!calibrated.ok()) return calibrated.status();
    absl::StatusOr<DetectionSet> dets =
        detector_->Detect(*calibrated, s.sample_id, s.ground_truth);
    if (!dets.ok()) {
      return absl::Status(
          dets.status().code(),
          absl::StrCat("detector failed on sample '", s.sample_id, "' at ",
                       ParamsString(params), ": ", dets.status().message()));
    }
    absl::StatusOr<double> loss = SampleLoss(i, *dets);
    if (!loss.ok()) return loss.status();
    total += *loss;
  }
  return total;
}

absl::StatusOr<CalibrationResult> EvaluateCandidates(
    const CalibrationProblem& problem,
    const std::vector<CalibratorParams>& candidates) {
  if (candidates.empty()) return absl::InvalidArgumentError("no candidates");
  std::vector<absl::StatusOr<double>> values(candidates.size(),
                                             absl::UnknownError("unevaluated"));
  ParallelFor(candidates.size(), problem.options().jobs, [&](size_t i) {
    values[i] = problem.Objective(candidates[i]);
  });
  CalibrationResult result;
  result.trace.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (!values[i].ok()) return values[i].status();
    const double v = *values[i];
    result.trace.push_back({candidates[i], v});
    if (i == 0 || v < result.best_objective) {
      result.best = candidates[i];
      result.best_objective = v;
    }
    if (i == 0 || v > result.worst_objective) {
      result.worst = candidates[i];
      result.worst_objective = v;
    }
  }
  return result;
}

absl::StatusOr<CalibrationResult> Calibrate(const CalibrationProblem& problem,
                                            const ParamGrid& grid) {
  if (absl::Status st = grid.Validate(); !st.ok()) return st;
  return EvaluateCandidates(problem, EnumerateGrid(grid));
}

absl::StatusOr<CalibrationResult> Calibrate(const PairedDataset& ds,
                                            const std::string& generator,
                                            Detector& detector,
                                            const ParamGrid& grid,
                                            const CalibrationOptions& options) {
  absl::StatusOr<CalibrationProblem> problem =
      CalibrationProblem::FromDataset(ds, generator, detector, options);
  if (!problem.ok()) return problem.status();
  return Calibrate(*problem, grid);
}

std::vector<CalibratorParams> SampleRandomCandidates(const ParamGrid& bounds,
                                                     size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  // 53 random mantissa bits; avoids implementation-defined distributions.
  auto draw = [&rng](const ParamRange& r) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return r.start + u * (r.stop - r.start);
  };
  std::vector<CalibratorParams> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    CalibratorParams p;
    if (bounds.contrast) p.contrast = draw(*bounds.contrast);
    if (bounds.brightness) p.brightness = draw(*bounds.brightness);
    if (bounds.sharpness) p.sharpness = draw(*bounds.sharpness);
    if (bounds.blur_sigma) p.blur_sigma = draw(*bounds.blur_sigma);
    out.push_back(p);
  }
  return out;
}

absl::StatusOr<CalibrationResult> RandomSearch(const CalibrationProblem& problem,
                                               const ParamGrid& bounds,
                                               size_t n_samples, uint64_t seed) {
  if (n_samples < 1) return absl::InvalidArgumentError("n_samples must be >= 1");
  if (absl::Status st = bounds.Validate(); !st.ok()) return st;
  return EvaluateCandidates(problem,
                            SampleRandomCandidates(bounds, n_samples, seed));
}

absl::StatusOr<CalibrationResult> RandomSearch(
    const PairedDataset& ds, const std::string& generator, Detector& detector,
    const ParamGrid& bounds, size_t n_samples, uint64_t seed,
    const CalibrationOptions& options) {
  absl::StatusOr<CalibrationProblem> problem =
      CalibrationProblem::FromDataset(ds, generator, detector, options);
  if (!problem.ok()) return problem.status();
  return RandomSearch(*problem, bounds, n_samples, seed);
}

std::string TableEntry(const CalibratorParams& params, double objective) {
  std::string obj = objective == std::floor(objective) && std::abs(objective) < 1e15
                        ? absl::StrFormat("%.0f", objective)
                        : TrimmedDecimal(objective, 0);
  return absl::StrCat("(", TrimmedDecimal(params.contrast, 1), ",",
                      TrimmedDecimal(params.brightness, 1), ",",
                      TrimmedDecimal(params.sharpness, 1), "):", obj);
}

}  // namespace safidel
