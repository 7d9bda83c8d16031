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


// safidel: fidelity assessment and calibration of synthetic driving data.
//
//   safidel assess    --manifest m.json --detector mock --out report.json
//   safidel calibrate --manifest m.json --detector cmd:./serve --loss fnr
//   safidel rank      --manifest m.json --format csv
//   safidel transform --in a.png --out b.png --brightness 1.1

#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "safidel/runner.h"

namespace {

using safidel::RunConfig;

// Flags are parsed into these holders first and applied on top of the config
// file afterwards, so that a flag always beats the file.
struct CommonFlags {
  std::string config;
  std::vector<std::function<void(RunConfig&)>> setters;
};

template <typename T, typename Apply>
CLI::Option* AddFlag(CLI::App* app, CommonFlags& flags, const std::string& name,
                     const std::string& help, Apply apply) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = app->add_option(name, *value, help);
  flags.setters.push_back([opt, value, apply](RunConfig& cfg) {
    if (opt->count() > 0) apply(cfg, *value);
  });
  return opt;
}

void AddRunFlags(CLI::App* app, CommonFlags& flags, bool calibrate) {
  app->add_option("--config", flags.config,
                  "JSON config file; command-line flags take precedence");
  AddFlag<std::string>(app, flags, "--manifest", "paired dataset manifest",
                       [](RunConfig& c, const std::string& v) { c.manifest = v; });
  AddFlag<std::string>(app, flags, "--detector",
                       "mock[:min_area=..,lo=..,hi=..,min_rms=..], cmd:<command> "
                       "or http://host:port",
                       [](RunConfig& c, const std::string& v) { c.detector = v; });
  AddFlag<std::string>(app, flags, "--detector-id",
                       "cache namespace and report label for the detector",
                       [](RunConfig& c, const std::string& v) { c.detector_id = v; });
  AddFlag<std::vector<std::string>>(
      app, flags, "--layers", "feature layers to request",
      [](RunConfig& c, const std::vector<std::string>& v) { c.layers = v; });
  AddFlag<std::vector<std::string>>(
      app, flags, "--generator", "generator(s) to evaluate; default all",
      [](RunConfig& c, const std::vector<std::string>& v) { c.generators = v; });
  AddFlag<int>(app, flags, "--grid-rows", "scenario grid rows",
               [](RunConfig& c, int v) { c.overrides.grid_rows = v; });
  AddFlag<int>(app, flags, "--grid-cols", "scenario grid columns",
               [](RunConfig& c, int v) { c.overrides.grid_cols = v; });
  AddFlag<double>(app, flags, "--area-threshold",
                  "bbox area (px^2) at which an object is safety relevant",
                  [](RunConfig& c, double v) { c.overrides.area_threshold = v; });
  AddFlag<double>(app, flags, "--score-threshold",
                  "detections below this score are ignored",
                  [](RunConfig& c, double v) { c.overrides.score_threshold = v; });
  AddFlag<double>(app, flags, "--iou", "IoU needed to match a detection",
                  [](RunConfig& c, double v) { c.iou_min = v; });
  AddFlag<std::string>(app, flags, "--mode", "sa, ov or both",
                       [](RunConfig& c, const std::string& v) { c.mode = v; })
      ->check(CLI::IsMember({"sa", "ov", "both"}));
  AddFlag<int>(app, flags, "--jobs", "worker threads",
               [](RunConfig& c, int v) { c.jobs = v; });
  AddFlag<uint64_t>(app, flags, "--seed", "random seed",
                    [](RunConfig& c, uint64_t v) { c.seed = v; });
  AddFlag<std::string>(app, flags, "--out,-o", "report path; '-' for stdout",
                       [](RunConfig& c, const std::string& v) { c.out = v; });
  AddFlag<std::string>(
      app, flags, "--format", "json or csv",
      [](RunConfig& c, const std::string& v) {
        c.format = *safidel::ParseReportFormat(v);
      })
      ->check(CLI::IsMember({"json", "csv"}));
  AddFlag<std::string>(
      app, flags, "--metric", "l1, l2 or linf for the distance verdicts",
      [](RunConfig& c, const std::string& v) { c.metric = *safidel::ParseMetric(v); })
      ->check(CLI::IsMember({"l1", "l2", "linf"}));
  AddFlag<double>(app, flags, "--iv-epsilon", "report input-value fidelity",
                  [](RunConfig& c, double v) { c.iv_epsilon = v; });
  AddFlag<double>(app, flags, "--ov-epsilon", "report output-value fidelity",
                  [](RunConfig& c, double v) { c.ov_epsilon = v; });
  AddFlag<double>(app, flags, "--lf-epsilon", "report latent-feature fidelity",
                  [](RunConfig& c, double v) { c.lf_epsilon = v; });
  AddFlag<std::string>(app, flags, "--cache-dir",
                       "detection cache (default $SAFIDEL_CACHE_DIR)",
                       [](RunConfig& c, const std::string& v) { c.cache_dir = v; });
  auto no_cache = std::make_shared<bool>(false);
  CLI::Option* no_cache_opt =
      app->add_flag("--no-cache", *no_cache, "disable the detection cache");
  flags.setters.push_back([no_cache, no_cache_opt](RunConfig& c) {
    if (no_cache_opt->count() > 0) c.use_cache = false;
  });
  auto mean = std::make_shared<bool>(false);
  CLI::Option* mean_opt = app->add_flag(
      "--per-element-mean", *mean,
      "divide image distances by the element count (L1) or its root (L2)");
  flags.setters.push_back([mean, mean_opt](RunConfig& c) {
    if (mean_opt->count() > 0) c.per_element_mean = true;
  });
  AddFlag<int>(app, flags, "--timeout-ms", "per-request detector timeout",
               [](RunConfig& c, int v) { c.timeout_ms = v; });
  if (!calibrate) return;
  AddFlag<std::string>(app, flags, "--grid",
                       "axes as name=start:stop:step, comma separated",
                       [](RunConfig& c, const std::string& v) { c.grid = v; });
  AddFlag<std::string>(
      app, flags, "--loss", "neq, l1, fnr or count",
      [](RunConfig& c, const std::string& v) {
        c.loss = *safidel::ParseCalibrationLoss(v);
      })
      ->check(CLI::IsMember({"neq", "l1", "fnr", "count"}));
  AddFlag<std::string>(app, flags, "--search", "grid or random",
                       [](RunConfig& c, const std::string& v) { c.search = v; })
      ->check(CLI::IsMember({"grid", "random"}));
  AddFlag<size_t>(app, flags, "--samples", "candidates drawn by random search",
                  [](RunConfig& c, size_t v) { c.random_samples = v; });
}

int Resolve(const CommonFlags& flags, RunConfig& cfg) {
  if (!flags.config.empty()) {
    if (absl::Status st = safidel::LoadConfigFile(flags.config, cfg); !st.ok()) {
      std::cerr << "error: " << st.message() << "\n";
      return safidel::kExitConfigError;
    }
  }
  for (const auto& set : flags.setters) set(cfg);
  return safidel::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fidelity assessment and calibration of synthetic driving data"};
  app.set_version_flag("--version", safidel::ToolVersion());
  app.require_subcommand(1);

  CommonFlags assess_flags, calibrate_flags, rank_flags;
  CLI::App* assess = app.add_subcommand(
      "assess", "count inconsistent predictions and fidelity verdicts");
  AddRunFlags(assess, assess_flags, /*calibrate=*/false);
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "search calibrator parameters");
  AddRunFlags(calibrate, calibrate_flags, /*calibrate=*/true);
  CLI::App* rank = app.add_subcommand("rank", "rank generators by inconsistencies");
  AddRunFlags(rank, rank_flags, /*calibrate=*/false);

  safidel::TransformConfig tcfg;
  CLI::App* transform =
      app.add_subcommand("transform", "apply the calibrator to one image");
  transform->add_option("--in", tcfg.in, "input PNG")->required();
  transform->add_option("--out,-o", tcfg.out, "output PNG")->required();
  transform->add_option("--contrast", tcfg.params.contrast, "contrast factor");
  transform->add_option("--brightness", tcfg.params.brightness,
                        "brightness factor");
  transform->add_option("--sharpness", tcfg.params.sharpness,
                        "sharpness factor");
  transform->add_option("--blur", tcfg.params.blur_sigma,
                        "Gaussian blur sigma in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : safidel::kExitConfigError;
  }

  if (transform->parsed()) return safidel::RunTransform(tcfg, std::cerr);
  RunConfig cfg;
  if (assess->parsed()) {
    if (int code = Resolve(assess_flags, cfg); code != 0) return code;
    return safidel::RunAssess(cfg, std::cerr);
  }
  if (calibrate->parsed()) {
    if (int code = Resolve(calibrate_flags, cfg); code != 0) return code;
    return safidel::RunCalibrate(cfg, std::cerr);
  }
  if (int code = Resolve(rank_flags, cfg); code != 0) return code;
  return safidel::RunRank(cfg, std::cerr);
}
