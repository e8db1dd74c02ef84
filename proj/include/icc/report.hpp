#pragma once

#include <span>
#include <string>

#include <json.hpp>

#include "icc/calibration.hpp"
#include "icc/eval.hpp"

namespace icc {

inline constexpr const char* kReportSchema = "1";

// Effective configuration of a run. Execution knobs (worker count, output
// paths, secrets) are left out so they cannot change report bytes.
nlohmann::json provenance_json(const RunConfig& cfg, const std::string& backend_mode);

nlohmann::json mapping_json(const LabelMapping& m, const LabelSpace& original);

nlohmann::json report_to_json(const EvalReport& report, const LabelSpace& original);

// Combined document for several variants evaluated on the same seeds.
nlohmann::json compare_to_json(std::span<const EvalReport> reports, const LabelSpace& original);

// Per-seed P_i / P_R(i) components (ICC runs only).
nlohmann::json audit_json(const EvalReport& report);

nlohmann::json calibration_result_json(const CalibrationResult& r,
                                       const std::vector<std::string>& displayed_labels);

// One row per (variant, seed) plus one aggregate row per variant.
std::string reports_csv(std::span<const EvalReport> reports);

// Pretty-printed with a trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace icc
