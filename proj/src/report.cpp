#include "icc/report.hpp"

#include <cstdio>

namespace icc {

using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json components_json(const IccComponents& c) {
  json j;
  j["leave_one_out"] = json::array();
  for (const auto& d : c.leave_one_out) j["leave_one_out"].push_back(d.scores());
  j["shuffled"] = json::array();
  for (const auto& d : c.shuffled) j["shuffled"].push_back(d.scores());
  return j;
}

}  // namespace

json provenance_json(const RunConfig& cfg, const std::string& backend_mode) {
  json p;
  p["tool_version"] = std::string(kToolVersion);
  p["method"] = to_string(cfg.method);
  p["k"] = cfg.k;
  p["seeds"] = cfg.seeds;
  p["label_mode"] = label_mode_name(cfg.label_mode);
  p["allow_fixed_points"] = cfg.allow_fixed_points;
  p["balanced"] = cfg.balanced;
  p["eval_cap"] = cfg.eval_cap;
  p["epsilon"] = cfg.icc.epsilon;
  if (cfg.method == Method::kIcc) {
    p["icc"] = {{"lambda", cfg.icc.lambda}, {"shuffle_count", cfg.icc.shuffle_count}};
  }
  if (cfg.method == Method::kDcDemo || cfg.method == Method::kDcTest) {
    p["dc"] = {{"m", cfg.dc.m_samples},
               {"source", cfg.method == Method::kDcDemo ? "demo" : "test"},
               {"sample_length_mode", std::string(DcConfig::kSampleLengthMode)},
               {"sampling", "uniform-with-replacement"}};
  }
  if (cfg.method == Method::kCc) p["cc"] = {{"content_free_token", std::string(kContentFreeToken)}};
  json b;
  b["backend"] = to_string(cfg.backend.backend);
  b["mode"] = backend_mode;
  if (cfg.backend.backend == Backend::kHttp) {
    b["endpoint"] = cfg.backend.endpoint_url;
    b["model"] = cfg.backend.model_name;
    b["http_mode"] = to_string(cfg.backend.http_mode);
    b["retry_limit"] = cfg.backend.retry_limit;
    b["timeout_ms"] = cfg.backend.timeout.count();
  }
  if (cfg.backend.backend == Backend::kNgram) {
    b["corpus"] = cfg.backend.corpus_path.empty() ? "train-split" : cfg.backend.corpus_path;
  }
  if (cfg.backend.backend == Backend::kMock) b["mock_table"] = cfg.backend.mock_table_path;
  p["backend"] = b;
  p["conventions"] = {{"argmax_ties", "lowest-index"},
                      {"empty_class_f1", "zero"},
                      {"std", "population"},
                      {"eval_cap", "min(cap, split size)"}};
  return p;
}

json mapping_json(const LabelMapping& m, const LabelSpace& original) {
  json j;
  j["kind"] = to_string(m.kind);
  j["seed"] = m.seed;
  j["pairs"] = json::array();
  for (std::size_t i = 0; i < original.size(); ++i) {
    const std::string shown = m.kind == MappingKind::kPermutation ? original[m.permutation.at(i)]
                                                                  : m.display.at(i);
    j["pairs"].push_back({{"label", original[i]}, {"shown_as", shown}});
  }
  return j;
}

json report_to_json(const EvalReport& report, const LabelSpace& original) {
  json j;
  j["schema"] = kReportSchema;
  j["dataset"] = report.dataset;
  j["variant"] = report.variant;
  j["status"] = report.failed ? "failed" : "ok";
  if (report.failed) {
    j["failed_seed"] = report.failed_seed.value_or(0);
    j["error"] = report.error;
  }
  j["provenance"] = provenance_json(report.config, report.backend_mode);
  j["per_seed"] = json::array();
  for (const auto& s : report.per_seed) {
    json r;
    r["seed"] = s.seed;
    r["macro_f1"] = s.macro_f1;
    r["n_eval"] = s.n_eval;
    r["mapping"] = mapping_json(s.mapping, original);
    r["displayed_labels"] = s.displayed_labels;
    r["demo_indices"] = s.demo_indices;
    r["demo_digest"] = s.demo_digest;
    r["calibration_vector"] = s.calibration_vector.scores();
    r["calibration_vector_digest"] = s.calibration_vector_digest;
    if (s.dc_sample_length > 0) r["dc_sample_length"] = s.dc_sample_length;
    r["predictions"] = s.predictions;
    r["expected"] = s.expected;
    j["per_seed"].push_back(std::move(r));
  }
  j["mean"] = report.mean;
  j["std"] = report.std;
  return j;
}

json compare_to_json(std::span<const EvalReport> reports, const LabelSpace& original) {
  json j;
  j["schema"] = kReportSchema;
  j["command"] = "compare";
  j["dataset"] = reports.empty() ? std::string() : reports.front().dataset;
  j["variants"] = json::array();
  for (const auto& r : reports) j["variants"].push_back(report_to_json(r, original));
  return j;
}

json audit_json(const EvalReport& report) {
  json j;
  j["schema"] = kReportSchema;
  j["variant"] = report.variant;
  j["per_seed"] = json::array();
  for (const auto& s : report.per_seed) {
    json r;
    r["seed"] = s.seed;
    r["calibration_vector"] = s.calibration_vector.scores();
    if (s.components) r["components"] = components_json(*s.components);
    j["per_seed"].push_back(std::move(r));
  }
  return j;
}

json calibration_result_json(const CalibrationResult& r,
                             const std::vector<std::string>& displayed_labels) {
  json j;
  j["labels"] = displayed_labels;
  j["raw"] = r.raw.scores();
  j["calibration_vector"] = r.calibration_vector.scores();
  j["calibrated"] = r.calibrated.scores();
  j["predicted"] = r.predicted;
  j["predicted_label"] = displayed_labels.at(r.predicted);
  if (r.components) j["components"] = components_json(*r.components);
  return j;
}

std::string reports_csv(std::span<const EvalReport> reports) {
  std::string out =
      "dataset,variant,row,seed,macro_f1,std,n_eval,demo_digest,calibration_vector_digest\n";
  for (const auto& r : reports) {
    for (const auto& s : r.per_seed) {
      out += csv_field(r.dataset) + "," + csv_field(r.variant) + ",seed," +
             std::to_string(s.seed) + "," + fmt(s.macro_f1) + ",," + std::to_string(s.n_eval) +
             "," + s.demo_digest + "," + s.calibration_vector_digest + "\n";
    }
    out += csv_field(r.dataset) + "," + csv_field(r.variant) + (r.failed ? ",failed," : ",aggregate,") +
           "," + fmt(r.mean) + "," + fmt(r.std) + ",,,\n";
  }
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace icc
