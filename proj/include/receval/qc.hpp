#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "receval/schema.hpp"
#include "receval/scoring.hpp"

namespace receval {

struct EmptyReference : std::runtime_error {
    EmptyReference() : std::runtime_error("reference subset is empty") {}
};

enum class QcRule {
    SchemaViolation,
    DateFormat,
    CurrencyCode,
    CrossFieldSum,
    AmountFormat,
    CountryCityFormat,
};

std::string_view to_string(QcRule r);

struct QcFinding {
    std::string doc_id;
    std::string field;
    QcRule rule;
    std::string detail;
};

/// Logic and format validation for one annotated record: ISO dates for
/// std_* times, 3-letter uppercase currency codes, Country-City shapes,
/// 2-decimal std_total, type within its fixed vocabulary, parseable
/// detail amounts, and the cross-field sum check
/// |sum(detail) - std_total| <= tolerance.
std::vector<QcFinding> check_record(const ExtractionRecord& rec,
                                    double tolerance = 0.05);

struct BatchVerdict {
    std::string batch_id;
    std::map<std::string, double> per_field_accuracy;
    bool accepted = false;
    std::vector<std::string> failing_fields;
    std::size_t reference_size = 0;
};

/// Per-field accuracy of the batch annotations against a verified
/// reference subset (matched by id), accepted iff every field reaches
/// the threshold. Accuracy uses each field's own comparator with the
/// offline judge, so the gate is deterministic.
BatchVerdict batch_accept(std::span<const ExtractionRecord> batch,
                          std::span<const ExtractionRecord> reference,
                          const ScoreContext& ctx, double threshold = 0.97,
                          const std::string& batch_id = "");

/// Deterministic audit document: findings grouped by rule and field with
/// counts and examples, plus the accept/reject banner when a verdict is
/// given.
std::string audit_report(std::span<const QcFinding> findings,
                         const BatchVerdict* verdict);

/// Machine-readable form of the same audit.
std::string audit_report_json(std::span<const QcFinding> findings,
                              const BatchVerdict* verdict);

}  // namespace receval
