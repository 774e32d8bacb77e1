#include "receval/report.hpp"

#include <cstdio>

namespace receval {

using nlohmann::json;

namespace {

json metrics_to_json(const FieldMetrics& m) {
    return json{
        {"precision", m.precision},
        {"recall", m.recall},
        {"f1", m.f1},
        {"tp_correct", m.tp_correct},
        {"tp_wrong", m.tp_wrong},
        {"fp", m.fp},
        {"fn", m.fn},
        {"tn_count", m.tn},
        {"vacuous", m.vacuous},
    };
}

std::string metric_row(const EvaluationReport& report, const std::string& label,
                       double FieldMetrics::*member) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %8.4f %12.4f %15.4f %11.4f %11.4f\n",
                  label.c_str(), report.overall.*member,
                  report.per_subtask.at("Perception").*member,
                  report.per_subtask.at("Normalization").*member,
                  report.per_subtask.at("Reasoning").*member,
                  report.per_subtask.at("Structure").*member);
    return line;
}

}  // namespace

json report_to_json(const EvaluationReport& report) {
    json out;
    out["documents"] = report.documents;
    out["overall"] = metrics_to_json(report.overall);
    json subtasks;
    for (const auto& [name, m] : report.per_subtask) subtasks[name] = metrics_to_json(m);
    out["per_subtask"] = std::move(subtasks);
    json fields;
    for (const auto& [name, m] : report.per_field) fields[name] = metrics_to_json(m);
    out["per_field"] = std::move(fields);
    out["error_histogram"] = report.error_histogram;
    out["fp_by_field"] = report.fp_by_field;
    out["options"] = {
        {"tn_mode", report.options.tn_mode == TnMode::Exclude ? "exclude" : "include"},
        {"macro", report.options.macro},
    };
    return out;
}

std::string report_f1_row(const EvaluationReport& report, const std::string& label) {
    return metric_row(report, label, &FieldMetrics::f1);
}

std::string report_table(const EvaluationReport& report) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %8s %12s %15s %11s %11s\n", "",
                  "Overall", "Perception", "Normalization", "Reasoning", "Structure");
    out += line;
    out += metric_row(report, "F1", &FieldMetrics::f1);
    out += metric_row(report, "Precision", &FieldMetrics::precision);
    out += metric_row(report, "Recall", &FieldMetrics::recall);
    out += "\n";

    std::snprintf(line, sizeof(line), "%-20s %9s %9s %9s %7s %7s %7s %7s %7s\n",
                  "field", "precision", "recall", "f1", "tp_ok", "tp_bad", "fp", "fn",
                  "tn");
    out += line;
    for (const auto& spec : field_specs()) {
        const auto& m = report.per_field.at(std::string(spec.name));
        std::snprintf(line, sizeof(line),
                      "%-20s %9.4f %9.4f %9.4f %7.0f %7.0f %7.0f %7.0f %7.0f%s\n",
                      std::string(spec.name).c_str(), m.precision, m.recall, m.f1,
                      m.tp_correct, m.tp_wrong, m.fp, m.fn, m.tn,
                      m.vacuous ? "  (vacuous)" : "");
        out += line;
    }

    out += "\nerrors:";
    for (const auto& [category, count] : report.error_histogram) {
        std::snprintf(line, sizeof(line), " %s=%ld", category.c_str(), count);
        out += line;
    }
    out += "\n";
    return out;
}

}  // namespace receval
