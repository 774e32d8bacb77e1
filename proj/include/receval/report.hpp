#pragma once

#include <string>

#include "json.hpp"

#include "receval/scoring.hpp"

namespace receval {

/// Canonical machine-readable report: sorted keys, stable float
/// rendering, byte-identical for identical inputs.
nlohmann::json report_to_json(const EvaluationReport& report);

/// Fixed-width table with the sub-task columns in benchmark order:
/// Overall | Perception | Normalization | Reasoning | Structure.
std::string report_table(const EvaluationReport& report);

/// One-line sub-task F1 row (same column order).
std::string report_f1_row(const EvaluationReport& report, const std::string& label);

}  // namespace receval
