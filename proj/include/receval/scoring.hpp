#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "receval/judge.hpp"
#include "receval/matching.hpp"
#include "receval/schema.hpp"
#include "receval/similarity.hpp"

namespace receval {

struct EmptyCorpus : std::runtime_error {
    EmptyCorpus() : std::runtime_error("no outcomes to aggregate") {}
};

enum class ConfusionState { TP, TN, FP, FN };
enum class ErrorCategory { Missing, Hallucination, Perception, Formatting, Reasoning, Structure };

std::string_view to_string(ConfusionState s);
std::string_view to_string(ErrorCategory c);

/// Item-level tallies for list-shaped fields.
struct ItemCounts {
    long matched = 0;
    long fp_items = 0;
    long fn_items = 0;
};

struct FieldOutcome {
    int field = -1;
    ConfusionState state = ConfusionState::TN;
    double score = 0.0;  // alignment score, defined for TP
    ItemCounts items;    // populated for list-shaped fields
    std::optional<ErrorCategory> error;
};

using DocumentOutcomes = std::array<FieldOutcome, kFieldCount>;

/// Everything a comparator needs; the caller owns provider and judge.
struct ScoreContext {
    SimilarityWeights weights;
    EmbeddingProvider* provider = nullptr;
    Judge* judge = nullptr;
    MatchOptions match;
};

/// Score a TP correct/wrong split: graded semantic scores count correct
/// at 0.5, binary comparators at 1.
double correctness_threshold(const FieldSpec& spec);

/// 1 iff normalize_text equal.
double compare_exact(std::string_view gt, std::string_view pred);

/// Numeric protocol: equal-normalized text short-circuits; otherwise both
/// sides parse and compare on the 1e-6 grid with zero == empty. A parse
/// failure on either side scores 0.
double compare_numeric(std::string_view gt, std::string_view pred);

/// Cascading-judge verdict score for a semantic scalar field.
double compare_semantic(const FieldSpec& spec, const std::string& gt,
                        const std::string& pred, Judge& judge);

struct ListScore {
    double score = 0.0;  // item-level F1
    ItemCounts counts;
};

/// Hungarian list comparison; item-level F1 = 2*matched/(|pred|+|gold|).
ListScore compare_list(const FieldSpec& spec, const FieldValue& gt,
                       const FieldValue& pred, const SimilarityWeights& w,
                       EmbeddingProvider* provider, const MatchOptions& opts);

/// Assigns TP/TN/FP/FN by emptiness (with the numeric zero/empty
/// exception) and attaches the comparator score for TP pairs.
FieldOutcome classify_outcome(int field_idx, const FieldValue& gt,
                              const FieldValue& pred, const ScoreContext& ctx);

/// classify_outcome over all 19 fields plus error categorization, which
/// needs the whole document to pair std_*/orig_* fields.
DocumentOutcomes score_document(const ExtractionRecord& gold,
                                const ExtractionRecord& pred,
                                const ScoreContext& ctx);

/// Tags FN as Missing, FP as Hallucination and wrong TPs by sub-task;
/// a wrong normalization field whose orig twin was read correctly is a
/// Formatting error, otherwise Perception.
void assign_error_categories(DocumentOutcomes& outcomes);

enum class TnMode { Exclude, Include };

struct MetricsOptions {
    TnMode tn_mode = TnMode::Exclude;
    bool macro = false;  // subtask/overall as mean of per-field F1
};

struct FieldMetrics {
    double tp_correct = 0;
    double tp_wrong = 0;
    double fp = 0;
    double fn = 0;
    double tn = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    bool vacuous = false;  // no positive evidence either way; F1 pinned 1
};

struct EvaluationReport {
    std::map<std::string, FieldMetrics> per_field;
    std::map<std::string, FieldMetrics> per_subtask;
    FieldMetrics overall;
    std::map<std::string, long> error_histogram;
    std::map<std::string, long> fp_by_field;
    std::size_t documents = 0;
    MetricsOptions options;
};

/// Pools outcomes into per-field, per-subtask and overall metrics. Wrong
/// TPs count against both precision and recall; TNs are excluded from
/// the denominators (default mode) and reported separately.
EvaluationReport aggregate_metrics(std::span<const DocumentOutcomes> docs,
                                   const MetricsOptions& opts = {});

/// Error-category histogram over already-categorized outcomes.
std::map<std::string, long> categorize_errors(std::span<const DocumentOutcomes> docs);

struct FpDeltaRow {
    std::string field;
    long fp_before = 0;
    long fp_after = 0;
    long change = 0;
    std::optional<double> pct;  // empty when 0/0
};

/// Per-field FP movement between two runs, sorted by percentage change.
std::vector<FpDeltaRow> fp_delta_report(const EvaluationReport& baseline,
                                        const EvaluationReport& treated);

std::string format_fp_delta_table(const std::vector<FpDeltaRow>& rows);

}  // namespace receval
