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


#include "safidel/runner.h"

#include <atomic>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "safidel/detection_cache.h"
#include "safidel/detector.h"
#include "safidel/image.h"
#include "safidel/parallel.h"
#include "safidel/serialization.h"

#ifndef SAFIDEL_VERSION
#define SAFIDEL_VERSION "unknown"
#endif

namespace safidel {
namespace {

// Remembers whether any call failed so run errors can be attributed to the
// detector rather than to the inputs.
class TrackingDetector : public Detector {
 public:
  explicit TrackingDetector(std::unique_ptr<Detector> inner)
      : inner_(std::move(inner)) {}

  absl::StatusOr<DetectionSet> Detect(
      const ImageTensor& img, const std::string& image_id,
      std::span<const GroundTruthObject> ground_truth) override {
    absl::StatusOr<DetectionSet> out = inner_->Detect(img, image_id, ground_truth);
    if (!out.ok()) failed_.store(true);
    return out;
  }
  const std::string& id() const override { return inner_->id(); }
  bool SupportsConcurrentCalls() const override {
    return inner_->SupportsConcurrentCalls();
  }
  bool failed() const { return failed_.load(); }

 private:
  std::unique_ptr<Detector> inner_;
  std::atomic<bool> failed_{false};
};

struct Setup {
  PairedDataset dataset;
  std::vector<std::string> generators;
  std::unique_ptr<TrackingDetector> detector;
  bool want_sa = true;
  bool want_ov = true;
};

int Fail(std::ostream& log, int code, const absl::Status& st) {
  log << "error: " << st.message() << "\n";
  return code;
}

absl::Status ParseMode(const std::string& mode, bool& sa, bool& ov) {
  if (mode == "sa") {
    sa = true;
    ov = false;
  } else if (mode == "ov") {
    sa = false;
    ov = true;
  } else if (mode == "both") {
    sa = ov = true;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown mode '", mode, "' (expected sa, ov or both)"));
  }
  return absl::OkStatus();
}

// Returns an exit code; kExitOk when `setup` is ready.
int Prepare(const RunConfig& cfg, std::ostream& log, Setup& setup) {
  if (absl::Status st = ParseMode(cfg.mode, setup.want_sa, setup.want_ov);
      !st.ok()) {
    return Fail(log, kExitConfigError, st);
  }
  if (cfg.jobs < 1) {
    return Fail(log, kExitConfigError,
                absl::InvalidArgumentError("--jobs must be >= 1"));
  }
  if (!(cfg.iou_min > 0.0 && cfg.iou_min <= 1.0)) {
    return Fail(log, kExitConfigError,
                absl::InvalidArgumentError("--iou must lie in (0,1]"));
  }
  if (cfg.manifest.empty()) {
    return Fail(log, kExitConfigError,
                absl::InvalidArgumentError("--manifest is required"));
  }
  absl::StatusOr<PairedDataset> ds = LoadManifest(cfg.manifest, cfg.overrides);
  if (!ds.ok()) return Fail(log, kExitConfigError, ds.status());
  setup.dataset = *std::move(ds);
  for (const std::string& w : setup.dataset.warnings) log << "warning: " << w << "\n";

  if (cfg.generators.empty()) {
    setup.generators = setup.dataset.generators;
  } else {
    for (const std::string& g : cfg.generators) {
      if (!setup.dataset.HasGenerator(g)) {
        return Fail(log, kExitConfigError,
                    absl::NotFoundError(absl::StrCat(
                        "generator '", g, "' is not in the manifest (have: ",
                        absl::StrJoin(setup.dataset.generators, ", "), ")")));
      }
      setup.generators.push_back(g);
    }
  }

  absl::StatusOr<DetectorSpec> spec = ParseDetectorSpec(cfg.detector);
  if (!spec.ok()) return Fail(log, kExitConfigError, spec.status());
  DetectorHandle& handle = spec->handle;
  if (!cfg.detector_id.empty()) handle.detector_id = cfg.detector_id;
  handle.score_threshold = setup.dataset.selector.score_threshold;
  handle.requested_layers = cfg.layers;
  handle.timeout_ms = cfg.timeout_ms;

  std::unique_ptr<Detector> inner;
  if (spec->is_mock) {
    if (absl::Status st = spec->mock_rule.Validate(); !st.ok()) {
      return Fail(log, kExitConfigError, st);
    }
    inner = std::make_unique<MockDetector>(spec->mock_rule, handle.detector_id);
  } else {
    if (absl::Status st = handle.Validate(); !st.ok()) {
      return Fail(log, kExitConfigError, st);
    }
    absl::StatusOr<std::unique_ptr<Detector>> remote = ConnectDetector(handle);
    if (!remote.ok()) return Fail(log, kExitDetectorFailure, remote.status());
    inner = *std::move(remote);
    if (cfg.use_cache) {
      inner = std::make_unique<CachingDetector>(
          std::move(inner),
          DetectionCache(cfg.cache_dir.empty() ? DefaultCacheDir()
                                               : cfg.cache_dir),
          cfg.layers, handle.score_threshold);
    }
  }
  setup.detector = std::make_unique<TrackingDetector>(std::move(inner));
  return kExitOk;
}

Provenance MakeProvenance(const RunConfig& cfg, absl::string_view command,
                          const Detector& det) {
  return Provenance{ConfigHash(cfg, command), ToolVersion(), det.id()};
}

absl::Status WriteOutput(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    std::cout.flush();
    return std::cout ? absl::OkStatus()
                     : absl::DataLossError("cannot write to stdout");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot open ", path));
  out << bytes;
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("cannot write ", path));
  return absl::OkStatus();
}

// Runs the detector over every pair of the dataset. Samples are the unit of
// work; on failure only the samples before the first failing one are kept so
// the report does not depend on scheduling.
struct AssessOutcome {
  std::vector<SampleResult> rows;
  std::optional<FailureRecord> failure;
  bool detector_failed = false;
};

absl::StatusOr<std::vector<SampleResult>> AssessSample(const RunConfig& cfg,
                                                       const Setup& setup,
                                                       const PairedSample& s,
                                                       std::string& generator) {
  const AttributeSelector& sel = setup.dataset.selector;
  Detector& det = *setup.detector;
  generator.clear();
  std::vector<ImageTensor> real_images;
  std::vector<DetectionSet> real_dets;
  for (const std::string& path : s.RealImages()) {
    absl::StatusOr<ImageTensor> img = LoadImage(path);
    if (!img.ok()) return img.status();
    absl::StatusOr<DetectionSet> d = det.Detect(*img, s.sample_id, s.ground_truth);
    if (!d.ok()) return d.status();
    real_dets.push_back(*std::move(d));
    real_images.push_back(*std::move(img));
  }
  FidelityQuery q;
  q.metric = cfg.metric;
  q.per_element_mean = cfg.per_element_mean;
  q.layers = cfg.layers;

  std::vector<SampleResult> out;
  for (const std::string& gen : setup.generators) {
    generator = gen;
    absl::StatusOr<ImageTensor> syn = LoadImage(s.synthetic_images.at(gen));
    if (!syn.ok()) return syn.status();
    absl::StatusOr<DetectionSet> d = det.Detect(*syn, s.sample_id, s.ground_truth);
    if (!d.ok()) return d.status();
    SampleResult r;
    r.detector = det.id();
    r.generator = gen;
    r.sample_id = s.sample_id;
    r.safety_relevant = CountInconsistencies(s.ground_truth, real_dets[0], *d, sel,
                                             cfg.iou_min,
                                             CountMode::kSafetyRelevant);
    r.all_objects = CountInconsistencies(s.ground_truth, real_dets[0], *d, sel,
                                         cfg.iou_min, CountMode::kAllObjects);
    r.fnr_consistency =
        FnrConsistency(s.ground_truth, real_dets[0], *d, sel, cfg.iou_min);
    if (setup.want_sa) {
      absl::StatusOr<FidelityVerdict> v =
          SaFidelity(*d, real_dets, s.sd, sel, s.image_size);
      if (!v.ok()) return v.status();
      r.sa = *v;
    }
    if (setup.want_ov && cfg.ov_epsilon) {
      q.epsilon = *cfg.ov_epsilon;
      absl::StatusOr<FidelityVerdict> v =
          OvFidelity(*d, real_dets, q, sel, s.image_size);
      if (!v.ok()) return v.status();
      r.ov = *v;
    }
    if (cfg.iv_epsilon) {
      q.epsilon = *cfg.iv_epsilon;
      absl::StatusOr<FidelityVerdict> v = IvFidelity(*syn, real_images, q);
      if (!v.ok()) return v.status();
      r.iv = *v;
    }
    if (cfg.lf_epsilon) {
      q.epsilon = *cfg.lf_epsilon;
      absl::StatusOr<FidelityVerdict> v = LfFidelity(*d, real_dets, q);
      if (!v.ok()) return v.status();
      r.lf = *v;
    }
    out.push_back(std::move(r));
  }
  generator.clear();
  return out;
}

AssessOutcome Assess(const RunConfig& cfg, const Setup& setup) {
  const std::vector<PairedSample>& samples = setup.dataset.samples;
  std::vector<absl::StatusOr<std::vector<SampleResult>>> results(
      samples.size(), absl::UnknownError("not run"));
  std::vector<std::string> failed_generator(samples.size());
  std::atomic<size_t> first_failure{samples.size()};
  const int jobs = setup.detector->SupportsConcurrentCalls() ? cfg.jobs : 1;
  ParallelFor(samples.size(), jobs, [&](size_t i) {
    // Later samples are dropped anyway once an earlier one has failed.
    if (i > first_failure.load()) return;
    results[i] = AssessSample(cfg, setup, samples[i], failed_generator[i]);
    if (!results[i].ok()) {
      size_t cur = first_failure.load();
      while (i < cur && !first_failure.compare_exchange_weak(cur, i)) {
      }
    }
  });

  AssessOutcome outcome;
  const size_t stop = first_failure.load();
  for (const std::string& gen : setup.generators) {
    for (size_t i = 0; i < stop; ++i) {
      for (const SampleResult& r : *results[i]) {
        if (r.generator == gen) outcome.rows.push_back(r);
      }
    }
  }
  if (stop < samples.size()) {
    outcome.failure = FailureRecord{setup.detector->id(), failed_generator[stop],
                                    samples[stop].sample_id,
                                    std::string(results[stop].status().message())};
    outcome.detector_failed = setup.detector->failed();
  }
  return outcome;
}

int Finish(const std::string& out_path, const std::string& bytes,
           const std::optional<FailureRecord>& failure, bool detector_failed,
           std::ostream& log) {
  if (absl::Status st = WriteOutput(out_path, bytes); !st.ok()) {
    return Fail(log, kExitConfigError, st);
  }
  if (failure) {
    log << "error: sample '" << failure->sample_id << "'"
        << (failure->generator.empty() ? ""
                                       : absl::StrCat(" generator '",
                                                      failure->generator, "'"))
        << ": " << failure->message << "\n";
    return detector_failed ? kExitDetectorFailure : kExitConfigError;
  }
  return kExitOk;
}

int AssessOrRank(const RunConfig& cfg, std::ostream& log, bool rank_only) {
  Setup setup;
  if (int code = Prepare(cfg, log, setup); code != kExitOk) return code;
  AssessOutcome outcome = Assess(cfg, setup);

  AssessReport report;
  report.provenance =
      MakeProvenance(cfg, rank_only ? "rank" : "assess", *setup.detector);
  report.failure = outcome.failure;
  report.warnings = setup.dataset.warnings;
  for (const auto& [want, mode, target] :
       {std::tuple{setup.want_sa, CountMode::kSafetyRelevant, &report.ranking_sa},
        std::tuple{setup.want_ov, CountMode::kAllObjects, &report.ranking_ov}}) {
    if (!want) continue;
    absl::StatusOr<std::vector<RankEntry>> entries =
        CollectRankEntries(outcome.rows, mode);
    if (!entries.ok()) return Fail(log, kExitConfigError, entries.status());
    absl::StatusOr<std::vector<RankedEntry>> ranked =
        RankGenerators(*std::move(entries));
    if (!ranked.ok()) return Fail(log, kExitConfigError, ranked.status());
    *target = *std::move(ranked);
  }
  report.samples = std::move(outcome.rows);
  const std::string bytes = rank_only ? EmitRanking(report, cfg.format)
                                      : EmitReport(report, cfg.format);
  return Finish(cfg.out, bytes, report.failure, outcome.detector_failed, log);
}

}  // namespace

const char* ToolVersion() { return SAFIDEL_VERSION; }

absl::Status ApplyConfigJson(const Json& j, RunConfig& cfg) {
  if (!j.is_object()) return absl::InvalidArgumentError("config must be a JSON object");
  auto bad = [](const std::string& key, const char* want) {
    return absl::InvalidArgumentError(
        absl::StrCat("config key '", key, "' must be ", want));
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "manifest" || key == "detector" || key == "detector_id" ||
        key == "mode" || key == "out" || key == "grid" || key == "search" ||
        key == "cache_dir" || key == "format" || key == "loss" ||
        key == "metric") {
      if (!v.is_string()) return bad(key, "a string");
      const std::string s = v.get<std::string>();
      if (key == "manifest") cfg.manifest = s;
      if (key == "detector") cfg.detector = s;
      if (key == "detector_id") cfg.detector_id = s;
      if (key == "mode") cfg.mode = s;
      if (key == "out") cfg.out = s;
      if (key == "grid") cfg.grid = s;
      if (key == "search") cfg.search = s;
      if (key == "cache_dir") cfg.cache_dir = s;
      if (key == "format") {
        absl::StatusOr<ReportFormat> f = ParseReportFormat(s);
        if (!f.ok()) return f.status();
        cfg.format = *f;
      }
      if (key == "loss") {
        absl::StatusOr<CalibrationLoss> l = ParseCalibrationLoss(s);
        if (!l.ok()) return l.status();
        cfg.loss = *l;
      }
      if (key == "metric") {
        absl::StatusOr<Metric> m = ParseMetric(s);
        if (!m.ok()) return m.status();
        cfg.metric = *m;
      }
    } else if (key == "layers" || key == "generators") {
      std::vector<std::string> list;
      if (v.is_string()) {
        list.push_back(v.get<std::string>());
      } else if (v.is_array()) {
        for (const Json& e : v) {
          if (!e.is_string()) return bad(key, "a list of strings");
          list.push_back(e.get<std::string>());
        }
      } else {
        return bad(key, "a list of strings");
      }
      (key == "layers" ? cfg.layers : cfg.generators) = std::move(list);
    } else if (key == "grid_rows" || key == "grid_cols" || key == "jobs" ||
               key == "samples" || key == "timeout_ms" || key == "seed") {
      if (!v.is_number_integer()) return bad(key, "an integer");
      if (key == "seed") {
        if (!v.is_number_unsigned()) return bad(key, "a non-negative integer");
        cfg.seed = v.get<uint64_t>();
        continue;
      }
      const int64_t n = v.get<int64_t>();
      if (key == "grid_rows") cfg.overrides.grid_rows = static_cast<int>(n);
      if (key == "grid_cols") cfg.overrides.grid_cols = static_cast<int>(n);
      if (key == "jobs") cfg.jobs = static_cast<int>(n);
      if (key == "timeout_ms") cfg.timeout_ms = static_cast<int>(n);
      if (key == "samples") {
        if (n < 1) return bad(key, "positive");
        cfg.random_samples = static_cast<size_t>(n);
      }
    } else if (key == "area_threshold" || key == "score_threshold" ||
               key == "iou" || key == "iv_epsilon" || key == "ov_epsilon" ||
               key == "lf_epsilon") {
      if (!v.is_number()) return bad(key, "a number");
      const double d = v.get<double>();
      if (key == "area_threshold") cfg.overrides.area_threshold = d;
      if (key == "score_threshold") cfg.overrides.score_threshold = d;
      if (key == "iou") cfg.iou_min = d;
      if (key == "iv_epsilon") cfg.iv_epsilon = d;
      if (key == "ov_epsilon") cfg.ov_epsilon = d;
      if (key == "lf_epsilon") cfg.lf_epsilon = d;
    } else if (key == "cache" || key == "per_element_mean") {
      if (!v.is_boolean()) return bad(key, "a boolean");
      (key == "cache" ? cfg.use_cache : cfg.per_element_mean) = v.get<bool>();
    } else {
      return absl::InvalidArgumentError(absl::StrCat("unknown config key '", key, "'"));
    }
  }
  return absl::OkStatus();
}

absl::Status LoadConfigFile(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open config ", path));
  std::stringstream ss;
  ss << in.rdbuf();
  Json j = Json::parse(ss.str(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": not valid JSON"));
  }
  absl::Status st = ApplyConfigJson(j, cfg);
  if (!st.ok()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": ", st.message()));
  }
  return absl::OkStatus();
}

std::string ConfigHash(const RunConfig& cfg, absl::string_view command) {
  auto opt = [](const auto& o) { return o ? Json(*o) : Json(nullptr); };
  Json j{{"command", command},
         {"tool_version", ToolVersion()},
         {"manifest", cfg.manifest},
         {"detector", cfg.detector},
         {"detector_id", cfg.detector_id},
         {"layers", cfg.layers},
         {"generators", cfg.generators},
         {"grid_rows", opt(cfg.overrides.grid_rows)},
         {"grid_cols", opt(cfg.overrides.grid_cols)},
         {"area_threshold", opt(cfg.overrides.area_threshold)},
         {"score_threshold", opt(cfg.overrides.score_threshold)},
         {"iou", cfg.iou_min},
         {"mode", cfg.mode},
         {"seed", cfg.seed},
         {"format", cfg.format == ReportFormat::kJson ? "json" : "csv"},
         {"metric", MetricName(cfg.metric)},
         {"per_element_mean", cfg.per_element_mean},
         {"iv_epsilon", opt(cfg.iv_epsilon)},
         {"ov_epsilon", opt(cfg.ov_epsilon)},
         {"lf_epsilon", opt(cfg.lf_epsilon)}};
  if (command == "calibrate") {
    j["grid"] = cfg.grid;
    j["loss"] = CalibrationLossName(cfg.loss);
    j["search"] = cfg.search;
    j["samples"] = cfg.random_samples;
  }
  return Sha256Hex(j.dump());
}

int RunAssess(const RunConfig& cfg, std::ostream& log) {
  return AssessOrRank(cfg, log, /*rank_only=*/false);
}

int RunRank(const RunConfig& cfg, std::ostream& log) {
  return AssessOrRank(cfg, log, /*rank_only=*/true);
}

int RunCalibrate(const RunConfig& cfg, std::ostream& log) {
  absl::StatusOr<ParamGrid> grid = ParseParamGrid(cfg.grid);
  if (!grid.ok()) return Fail(log, kExitConfigError, grid.status());
  if (cfg.search != "grid" && cfg.search != "random") {
    return Fail(log, kExitConfigError,
                absl::InvalidArgumentError(absl::StrCat(
                    "unknown search '", cfg.search, "' (expected grid or random)")));
  }
  if (cfg.search == "random" && cfg.random_samples < 1) {
    return Fail(log, kExitConfigError,
                absl::InvalidArgumentError("--samples must be >= 1"));
  }
  Setup setup;
  if (int code = Prepare(cfg, log, setup); code != kExitOk) return code;

  CalibrateReport report;
  report.provenance = MakeProvenance(cfg, "calibrate", *setup.detector);
  report.warnings = setup.dataset.warnings;
  std::vector<CalibrationMode> modes;
  if (setup.want_sa) modes.push_back(CalibrationMode::kSafetyAware);
  if (setup.want_ov) modes.push_back(CalibrationMode::kOutputValue);

  if (!setup.dataset.samples.empty()) {
    for (const std::string& gen : setup.generators) {
      for (CalibrationMode mode : modes) {
        CalibrationOptions opts;
        opts.loss = cfg.loss;
        opts.mode = mode;
        opts.iou_min = cfg.iou_min;
        opts.jobs = cfg.jobs;
        absl::StatusOr<CalibrationResult> res =
            cfg.search == "grid"
                ? Calibrate(setup.dataset, gen, *setup.detector, *grid, opts)
                : RandomSearch(setup.dataset, gen, *setup.detector, *grid,
                               cfg.random_samples, cfg.seed, opts);
        if (!res.ok()) {
          report.failure = FailureRecord{setup.detector->id(), gen, "",
                                         std::string(res.status().message())};
          break;
        }
        log << "calibrate: " << gen << " [" << CalibrationModeName(mode)
            << "] " << res->trace.size() << " evaluations, best "
            << TableEntry(res->best, res->best_objective) << ", worst "
            << TableEntry(res->worst, res->worst_objective) << "\n";
        report.records.push_back(CalibrationRecord{setup.detector->id(), gen,
                                                   cfg.loss, mode, cfg.search,
                                                   *std::move(res)});
      }
      if (report.failure) break;
    }
  }
  const std::string bytes = EmitReport(report, cfg.format);
  if (absl::Status st = WriteOutput(cfg.out, bytes); !st.ok()) {
    return Fail(log, kExitConfigError, st);
  }
  if (report.failure) {
    log << "error: generator '" << report.failure->generator
        << "': " << report.failure->message << "\n";
    return setup.detector->failed() ? kExitDetectorFailure : kExitConfigError;
  }
  return kExitOk;
}

int RunTransform(const TransformConfig& cfg, std::ostream& log) {
  if (cfg.in.empty() || cfg.out.empty()) {
    return Fail(log, kExitConfigError,
                absl::InvalidArgumentError("--in and --out are required"));
  }
  if (absl::Status st = cfg.params.Validate(); !st.ok()) {
    return Fail(log, kExitConfigError, st);
  }
  absl::StatusOr<ImageTensor> img = LoadImage(cfg.in);
  if (!img.ok()) return Fail(log, kExitConfigError, img.status());
  absl::StatusOr<ImageTensor> out = ApplyCalibrator(*img, cfg.params);
  if (!out.ok()) return Fail(log, kExitConfigError, out.status());
  if (absl::Status st = SaveImage(*out, cfg.out); !st.ok()) {
    return Fail(log, kExitConfigError, st);
  }
  return kExitOk;
}

}  // namespace safidel
