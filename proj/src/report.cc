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


#include "safidel/report.h"

#include <algorithm>
#include <map>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "safidel/serialization.h"

namespace safidel {
namespace {

Json ToJson(const Provenance& p) {
  return Json{{"config_hash", p.config_hash},
              {"tool_version", p.tool_version},
              {"detector_id", p.detector_id}};
}

Json ToJson(const FailureRecord& f) {
  return Json{{"detector", f.detector},
              {"generator", f.generator},
              {"sample_id", f.sample_id},
              {"message", f.message}};
}

Json ToJson(const BoxStats& s) {
  return Json{{"n", s.n},       {"min", s.min}, {"q1", s.q1},
              {"median", s.median}, {"q3", s.q3},  {"max", s.max},
              {"mean", s.mean}};
}

Json ToJson(const std::vector<RankedEntry>& ranking) {
  Json out = Json::array();
  for (const RankedEntry& r : ranking) {
    Json j{{"rank", r.rank},
           {"detector", r.entry.detector},
           {"generator", r.entry.generator},
           {"stats", ToJson(r.entry.stats)},
           {"counts", r.entry.counts}};
    j["p_vs_previous"] =
        r.p_vs_previous ? Json(*r.p_vs_previous) : Json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

void AppendProvenanceComments(const Provenance& p,
                              const std::optional<FailureRecord>& failure,
                              std::string& out) {
  if (!p.empty()) {
    absl::StrAppend(&out, "# config_hash=", p.config_hash, "\n",
                    "# tool_version=", p.tool_version, "\n",
                    "# detector_id=", p.detector_id, "\n");
  }
  if (failure) {
    std::string msg = failure->message;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    absl::StrAppend(&out, "# status=failed: ", msg, "\n");
  }
}

std::string Fixed6(double v) {
  std::string s = absl::StrFormat("%.6f", v);
  return s == "-0.000000" ? "0.000000" : s;
}

}  // namespace

absl::StatusOr<ReportFormat> ParseReportFormat(absl::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown report format '", name, "' (expected json or csv)"));
}

std::string CsvField(absl::string_view s) {
  if (s.find_first_of(",\"\r\n") == absl::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

absl::StatusOr<RankEntry> MakeRankEntry(std::string generator,
                                        std::string detector,
                                        std::vector<double> counts) {
  absl::StatusOr<BoxStats> stats = ComputeBoxStats(counts);
  if (!stats.ok()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "generator '", generator, "': ", stats.status().message()));
  }
  return RankEntry{std::move(generator), std::move(detector), std::move(counts),
                   *stats};
}

absl::StatusOr<std::vector<RankedEntry>> RankGenerators(
    std::vector<RankEntry> entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const RankEntry& a, const RankEntry& b) {
                     if (a.detector != b.detector) return a.detector < b.detector;
                     if (a.stats.mean != b.stats.mean) {
                       return a.stats.mean < b.stats.mean;
                     }
                     if (a.stats.median != b.stats.median) {
                       return a.stats.median < b.stats.median;
                     }
                     return a.generator < b.generator;
                   });
  std::vector<RankedEntry> out;
  out.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    RankedEntry r;
    r.entry = std::move(entries[i]);
    if (!out.empty() && out.back().entry.detector == r.entry.detector) {
      r.rank = out.back().rank + 1;
      absl::StatusOr<MannWhitneyResult> test =
          MannWhitneyU(out.back().entry.counts, r.entry.counts);
      if (!test.ok()) return test.status();
      r.p_vs_previous = test->p;
    } else {
      r.rank = 1;
    }
    out.push_back(std::move(r));
  }
  return out;
}

absl::StatusOr<std::vector<RankEntry>> CollectRankEntries(
    const std::vector<SampleResult>& results, CountMode mode) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> counts;
  for (const SampleResult& r : results) {
    auto key = std::make_pair(r.detector, r.generator);
    auto [it, inserted] = counts.try_emplace(key);
    if (inserted) order.push_back(key);
    const InconsistencyCount& c = mode == CountMode::kSafetyRelevant
                                      ? r.safety_relevant
                                      : r.all_objects;
    it->second.push_back(c.total);
  }
  std::vector<RankEntry> out;
  for (const auto& key : order) {
    absl::StatusOr<RankEntry> e =
        MakeRankEntry(key.second, key.first, counts[key]);
    if (!e.ok()) return e.status();
    out.push_back(*std::move(e));
  }
  return out;
}

std::string EmitReport(const AssessReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::string out;
    AppendProvenanceComments(report.provenance, report.failure, out);
    out += "detector,generator,sample_id,mode,fn,fp,total\n";
    for (const SampleResult& r : report.samples) {
      const std::string prefix =
          absl::StrCat(CsvField(r.detector), ",", CsvField(r.generator), ",",
                       CsvField(r.sample_id), ",");
      for (const auto& [mode, c] :
           {std::pair<const char*, const InconsistencyCount&>{
                "sa", r.safety_relevant},
            {"ov", r.all_objects}}) {
        absl::StrAppend(&out, prefix, mode, ",", c.false_negatives, ",",
                        c.false_positives, ",", c.total, "\n");
      }
    }
    if (report.failure) {
      absl::StrAppend(&out, CsvField(report.failure->detector), ",",
                      CsvField(report.failure->generator), ",",
                      CsvField(report.failure->sample_id), ",error,,,\n");
    }
    return out;
  }

  Json root;
  root["provenance"] = ToJson(report.provenance);
  root["status"] = report.failure ? "failed" : "complete";
  if (report.failure) root["error"] = ToJson(*report.failure);
  if (!report.warnings.empty()) root["warnings"] = report.warnings;
  Json samples = Json::array();
  for (const SampleResult& r : report.samples) {
    Json j{{"detector", r.detector},
           {"generator", r.generator},
           {"sample_id", r.sample_id},
           {"safety_relevant", ToJson(r.safety_relevant)},
           {"all_objects", ToJson(r.all_objects)},
           {"fnr_consistency", r.fnr_consistency}};
    if (r.sa) j["sa_fidelity"] = ToJson(*r.sa);
    if (r.ov) j["ov_fidelity"] = ToJson(*r.ov);
    if (r.iv) j["iv_fidelity"] = ToJson(*r.iv);
    if (r.lf) j["lf_fidelity"] = ToJson(*r.lf);
    samples.push_back(std::move(j));
  }
  root["samples"] = std::move(samples);
  root["ranking"] = Json{{"sa", ToJson(report.ranking_sa)},
                         {"ov", ToJson(report.ranking_ov)}};
  return root.dump(2) + "\n";
}

std::string EmitRanking(const AssessReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::string out;
    AppendProvenanceComments(report.provenance, report.failure, out);
    out +=
        "detector,mode,rank,generator,n,mean,min,q1,median,q3,max,"
        "p_vs_previous\n";
    for (const auto& [mode, ranking] :
         {std::pair<const char*, const std::vector<RankedEntry>&>{
              "sa", report.ranking_sa},
          {"ov", report.ranking_ov}}) {
      for (const RankedEntry& r : ranking) {
        const BoxStats& s = r.entry.stats;
        absl::StrAppend(&out, CsvField(r.entry.detector), ",", mode, ",",
                        r.rank, ",", CsvField(r.entry.generator), ",", s.n, ",",
                        Fixed6(s.mean), ",", Fixed6(s.min), ",", Fixed6(s.q1),
                        ",", Fixed6(s.median), ",", Fixed6(s.q3), ",",
                        Fixed6(s.max), ",",
                        r.p_vs_previous ? Fixed6(*r.p_vs_previous) : "", "\n");
      }
    }
    if (report.failure) {
      absl::StrAppend(&out, CsvField(report.failure->detector), ",error,,",
                      CsvField(report.failure->generator), ",,,,,,,,\n");
    }
    return out;
  }
  Json root;
  root["provenance"] = ToJson(report.provenance);
  root["status"] = report.failure ? "failed" : "complete";
  if (report.failure) root["error"] = ToJson(*report.failure);
  if (!report.warnings.empty()) root["warnings"] = report.warnings;
  root["ranking"] = Json{{"sa", ToJson(report.ranking_sa)},
                         {"ov", ToJson(report.ranking_ov)}};
  return root.dump(2) + "\n";
}

std::string EmitReport(const CalibrateReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::string out;
    AppendProvenanceComments(report.provenance, report.failure, out);
    out +=
        "detector,generator,loss,mode,contrast,brightness,sharpness,blur,"
        "objective\n";
    for (const CalibrationRecord& rec : report.records) {
      const std::string prefix = absl::StrCat(
          CsvField(rec.detector), ",", CsvField(rec.generator), ",",
          CalibrationLossName(rec.loss), ",", CalibrationModeName(rec.mode),
          ",");
      for (const TraceEntry& t : rec.result.trace) {
        absl::StrAppend(&out, prefix, Fixed6(t.params.contrast), ",",
                        Fixed6(t.params.brightness), ",",
                        Fixed6(t.params.sharpness), ",",
                        Fixed6(t.params.blur_sigma), ",", Fixed6(t.objective),
                        "\n");
      }
    }
    if (report.failure) {
      absl::StrAppend(&out, CsvField(report.failure->detector), ",",
                      CsvField(report.failure->generator), ",error,,,,,,\n");
    }
    return out;
  }

  Json root;
  root["provenance"] = ToJson(report.provenance);
  root["status"] = report.failure ? "failed" : "complete";
  if (report.failure) root["error"] = ToJson(*report.failure);
  if (!report.warnings.empty()) root["warnings"] = report.warnings;
  Json records = Json::array();
  for (const CalibrationRecord& rec : report.records) {
    const CalibrationResult& res = rec.result;
    Json trace = Json::array();
    for (const TraceEntry& t : res.trace) {
      trace.push_back(
          Json{{"params", ToJson(t.params)}, {"objective", t.objective}});
    }
    records.push_back(Json{
        {"detector", rec.detector},
        {"generator", rec.generator},
        {"loss", CalibrationLossName(rec.loss)},
        {"mode", CalibrationModeName(rec.mode)},
        {"search", rec.search},
        {"evaluations", res.trace.size()},
        {"best", Json{{"params", ToJson(res.best)},
                      {"objective", res.best_objective},
                      {"table", TableEntry(res.best, res.best_objective)}}},
        {"worst", Json{{"params", ToJson(res.worst)},
                       {"objective", res.worst_objective},
                       {"table", TableEntry(res.worst, res.worst_objective)}}},
        {"trace", std::move(trace)}});
  }
  root["results"] = std::move(records);
  return root.dump(2) + "\n";
}

}  // namespace safidel
