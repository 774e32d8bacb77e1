#include "receval/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace receval {

std::string_view to_string(ConfusionState s) {
    switch (s) {
        case ConfusionState::TP: return "TP";
        case ConfusionState::TN: return "TN";
        case ConfusionState::FP: return "FP";
        case ConfusionState::FN: return "FN";
    }
    return "?";
}

std::string_view to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Missing: return "Missing";
        case ErrorCategory::Hallucination: return "Hallucination";
        case ErrorCategory::Perception: return "Perception";
        case ErrorCategory::Formatting: return "Formatting";
        case ErrorCategory::Reasoning: return "Reasoning";
        case ErrorCategory::Structure: return "Structure";
    }
    return "?";
}

double correctness_threshold(const FieldSpec& spec) {
    if (spec.metric == MetricType::Semantic && spec.shape == ValueShape::Scalar)
        return 0.5;
    return 1.0;
}

double compare_exact(std::string_view gt, std::string_view pred) {
    return normalize_text(gt) == normalize_text(pred) ? 1.0 : 0.0;
}

double compare_numeric(std::string_view gt, std::string_view pred) {
    if (normalize_text(gt) == normalize_text(pred)) return 1.0;
    try {
        Amount a = Amount::parse(gt);
        Amount b = Amount::parse(pred);
        return a.equals(b) ? 1.0 : 0.0;
    } catch (const AmountError&) {
        return 0.0;
    }
}

double compare_semantic(const FieldSpec& spec, const std::string& gt,
                        const std::string& pred, Judge& judge) {
    return judge.judge(spec, gt, pred).score;
}

ListScore compare_list(const FieldSpec& spec, const FieldValue& gt,
                       const FieldValue& pred, const SimilarityWeights& w,
                       EmbeddingProvider* provider, const MatchOptions& opts) {
    MatchResult match;
    std::size_t pred_n = 0, gold_n = 0;
    if (spec.shape == ValueShape::ItemList) {
        const auto& p = std::get<std::vector<DetailItem>>(pred);
        const auto& g = std::get<std::vector<DetailItem>>(gt);
        pred_n = p.size();
        gold_n = g.size();
        match = evaluate_item_list(p, g, w, provider, opts);
    } else {
        const auto& p = std::get<std::vector<std::string>>(pred);
        const auto& g = std::get<std::vector<std::string>>(gt);
        pred_n = p.size();
        gold_n = g.size();
        match = evaluate_text_list(p, g, w, provider, opts);
    }
    ListScore out;
    out.counts.matched = static_cast<long>(match.pairs.size());
    out.counts.fp_items = static_cast<long>(match.unmatched_pred.size());
    out.counts.fn_items = static_cast<long>(match.unmatched_gold.size());
    out.score = (pred_n + gold_n) == 0
                    ? 1.0
                    : 2.0 * static_cast<double>(match.pairs.size()) /
                          static_cast<double>(pred_n + gold_n);
    return out;
}

namespace {

std::size_t list_size(const FieldValue& v) {
    if (const auto* items = std::get_if<std::vector<DetailItem>>(&v)) return items->size();
    if (const auto* texts = std::get_if<std::vector<std::string>>(&v)) return texts->size();
    return 0;
}

// Numeric scalar whose text parses to zero (or is empty).
bool parses_to_zero(const std::string& text) {
    try {
        return Amount::parse(text).micros() == 0;
    } catch (const AmountError&) {
        return false;
    }
}

}  // namespace

FieldOutcome classify_outcome(int field_idx, const FieldValue& gt,
                              const FieldValue& pred, const ScoreContext& ctx) {
    const FieldSpec& spec = field_specs()[static_cast<std::size_t>(field_idx)];
    FieldOutcome outcome;
    outcome.field = field_idx;

    bool gold_empty = field_value_empty(gt);
    bool pred_empty = field_value_empty(pred);

    if (spec.metric == MetricType::Numeric) {
        // Zero and empty are equivalent: a zero on either side against an
        // empty other side is a correct TP, never FN or FP.
        if (gold_empty && pred_empty) {
            outcome.state = ConfusionState::TN;
            return outcome;
        }
        const auto& gs = std::get<std::string>(gt);
        const auto& ps = std::get<std::string>(pred);
        if (gold_empty != pred_empty) {
            const std::string& nonempty = gold_empty ? ps : gs;
            if (parses_to_zero(nonempty)) {
                outcome.state = ConfusionState::TP;
                outcome.score = 1.0;
                return outcome;
            }
            outcome.state = gold_empty ? ConfusionState::FP : ConfusionState::FN;
            return outcome;
        }
        outcome.state = ConfusionState::TP;
        outcome.score = compare_numeric(gs, ps);
        return outcome;
    }

    if (gold_empty && pred_empty) {
        outcome.state = ConfusionState::TN;
        return outcome;
    }
    if (gold_empty) {
        outcome.state = ConfusionState::FP;
        if (spec.shape != ValueShape::Scalar)
            outcome.items.fp_items = static_cast<long>(list_size(pred));
        return outcome;
    }
    if (pred_empty) {
        outcome.state = ConfusionState::FN;
        if (spec.shape != ValueShape::Scalar)
            outcome.items.fn_items = static_cast<long>(list_size(gt));
        return outcome;
    }

    outcome.state = ConfusionState::TP;
    switch (spec.shape) {
        case ValueShape::Scalar: {
            const auto& gs = std::get<std::string>(gt);
            const auto& ps = std::get<std::string>(pred);
            if (spec.metric == MetricType::ExactMatch) {
                outcome.score = compare_exact(gs, ps);
            } else {
                outcome.score = compare_semantic(spec, gs, ps, *ctx.judge);
            }
            break;
        }
        case ValueShape::TextList:
        case ValueShape::ItemList: {
            ListScore ls = compare_list(spec, gt, pred, ctx.weights, ctx.provider,
                                        ctx.match);
            outcome.score = ls.score;
            outcome.items = ls.counts;
            break;
        }
    }
    return outcome;
}

void assign_error_categories(DocumentOutcomes& outcomes) {
    const auto& specs = field_specs();

    auto correct = [&](int idx) {
        const FieldOutcome& o = outcomes[static_cast<std::size_t>(idx)];
        if (o.state == ConfusionState::TN) return true;
        if (o.state != ConfusionState::TP) return false;
        return o.score >= correctness_threshold(specs[static_cast<std::size_t>(idx)]);
    };

    for (int i = 0; i < kFieldCount; ++i) {
        FieldOutcome& o = outcomes[static_cast<std::size_t>(i)];
        const FieldSpec& spec = specs[static_cast<std::size_t>(i)];
        o.error.reset();
        switch (o.state) {
            case ConfusionState::FN:
                o.error = ErrorCategory::Missing;
                break;
            case ConfusionState::FP:
                o.error = ErrorCategory::Hallucination;
                break;
            case ConfusionState::TP: {
                if (o.score >= correctness_threshold(spec)) break;
                switch (spec.category) {
                    case SubTask::Perception:
                        o.error = ErrorCategory::Perception;
                        break;
                    case SubTask::Normalization: {
                        // std_x wrong while orig_x was read correctly means
                        // the model saw the value but normalized it wrong.
                        std::string orig_name =
                            "orig_" + std::string(spec.name.substr(4));
                        int orig_idx = field_index(orig_name);
                        o.error = (orig_idx >= 0 && correct(orig_idx))
                                      ? ErrorCategory::Formatting
                                      : ErrorCategory::Perception;
                        break;
                    }
                    case SubTask::Reasoning:
                        o.error = ErrorCategory::Reasoning;
                        break;
                    case SubTask::Structure:
                        o.error = ErrorCategory::Structure;
                        break;
                }
                break;
            }
            case ConfusionState::TN:
                break;
        }
    }
}

DocumentOutcomes score_document(const ExtractionRecord& gold,
                                const ExtractionRecord& pred,
                                const ScoreContext& ctx) {
    DocumentOutcomes outcomes;
    for (int i = 0; i < kFieldCount; ++i)
        outcomes[static_cast<std::size_t>(i)] =
            classify_outcome(i, gold.values[static_cast<std::size_t>(i)],
                             pred.values[static_cast<std::size_t>(i)], ctx);
    assign_error_categories(outcomes);
    return outcomes;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

struct Tally {
    double tp_correct = 0, tp_wrong = 0, fp = 0, fn = 0, tn = 0;

    void add(const Tally& other) {
        tp_correct += other.tp_correct;
        tp_wrong += other.tp_wrong;
        fp += other.fp;
        fn += other.fn;
        tn += other.tn;
    }
};

FieldMetrics finalize(const Tally& t, TnMode tn_mode) {
    FieldMetrics m;
    m.tp_correct = t.tp_correct;
    m.tp_wrong = t.tp_wrong;
    m.fp = t.fp;
    m.fn = t.fn;
    m.tn = t.tn;

    double hit = t.tp_correct;
    double p_den = t.tp_correct + t.fp + t.tp_wrong;
    double r_den = t.tp_correct + t.fn + t.tp_wrong;
    if (tn_mode == TnMode::Include) {
        hit += t.tn;
        p_den += t.tn;
        r_den += t.tn;
    }

    if (p_den == 0.0 && r_den == 0.0) {
        // Field that is always correctly empty: correct abstention is not
        // a failure, reported as vacuous 1.0.
        m.vacuous = true;
        m.precision = m.recall = m.f1 = 1.0;
        return m;
    }
    m.precision = p_den > 0.0 ? hit / p_den : 0.0;
    m.recall = r_den > 0.0 ? hit / r_den : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

FieldMetrics macro_mean(const std::vector<FieldMetrics>& fields) {
    FieldMetrics m;
    if (fields.empty()) return m;
    for (const auto& f : fields) {
        m.f1 += f.f1;
        m.precision += f.precision;
        m.recall += f.recall;
        m.tp_correct += f.tp_correct;
        m.tp_wrong += f.tp_wrong;
        m.fp += f.fp;
        m.fn += f.fn;
        m.tn += f.tn;
    }
    double n = static_cast<double>(fields.size());
    m.f1 /= n;
    m.precision /= n;
    m.recall /= n;
    return m;
}

}  // namespace

EvaluationReport aggregate_metrics(std::span<const DocumentOutcomes> docs,
                                   const MetricsOptions& opts) {
    if (docs.empty()) throw EmptyCorpus();

    const auto& specs = field_specs();
    std::array<Tally, kFieldCount> tallies;

    for (const auto& doc : docs) {
        for (int i = 0; i < kFieldCount; ++i) {
            const FieldOutcome& o = doc[static_cast<std::size_t>(i)];
            const FieldSpec& spec = specs[static_cast<std::size_t>(i)];
            Tally& t = tallies[static_cast<std::size_t>(i)];
            bool list_field = spec.shape != ValueShape::Scalar;
            switch (o.state) {
                case ConfusionState::TN:
                    t.tn += 1;
                    break;
                case ConfusionState::FP:
                    t.fp += list_field ? o.items.fp_items : 1;
                    break;
                case ConfusionState::FN:
                    t.fn += list_field ? o.items.fn_items : 1;
                    break;
                case ConfusionState::TP:
                    if (list_field) {
                        t.tp_correct += o.items.matched;
                        t.fp += o.items.fp_items;
                        t.fn += o.items.fn_items;
                    } else if (o.score >= correctness_threshold(spec)) {
                        t.tp_correct += 1;
                    } else {
                        t.tp_wrong += 1;
                    }
                    break;
            }
        }
    }

    EvaluationReport report;
    report.documents = docs.size();
    report.options = opts;

    std::map<std::string, Tally> subtask_tallies;
    std::map<std::string, std::vector<FieldMetrics>> subtask_fields;
    Tally overall_tally;
    std::vector<FieldMetrics> all_fields;

    for (int i = 0; i < kFieldCount; ++i) {
        const FieldSpec& spec = specs[static_cast<std::size_t>(i)];
        const Tally& t = tallies[static_cast<std::size_t>(i)];
        FieldMetrics m = finalize(t, opts.tn_mode);
        report.per_field[std::string(spec.name)] = m;
        report.fp_by_field[std::string(spec.name)] = static_cast<long>(t.fp);
        subtask_tallies[std::string(to_string(spec.category))].add(t);
        subtask_fields[std::string(to_string(spec.category))].push_back(m);
        overall_tally.add(t);
        all_fields.push_back(m);
    }

    for (const auto& [name, tally] : subtask_tallies) {
        report.per_subtask[name] = opts.macro ? macro_mean(subtask_fields[name])
                                              : finalize(tally, opts.tn_mode);
    }
    report.overall =
        opts.macro ? macro_mean(all_fields) : finalize(overall_tally, opts.tn_mode);

    report.error_histogram = categorize_errors(docs);
    return report;
}

std::map<std::string, long> categorize_errors(std::span<const DocumentOutcomes> docs) {
    std::map<std::string, long> histogram = {
        {"Missing", 0},      {"Hallucination", 0}, {"Perception", 0},
        {"Formatting", 0},   {"Reasoning", 0},     {"Structure", 0},
    };
    for (const auto& doc : docs)
        for (const auto& o : doc)
            if (o.error) ++histogram[std::string(to_string(*o.error))];
    return histogram;
}

std::vector<FpDeltaRow> fp_delta_report(const EvaluationReport& baseline,
                                        const EvaluationReport& treated) {
    std::vector<FpDeltaRow> rows;
    for (const auto& spec : field_specs()) {
        FpDeltaRow row;
        row.field = std::string(spec.name);
        auto before = baseline.fp_by_field.find(row.field);
        auto after = treated.fp_by_field.find(row.field);
        row.fp_before = before == baseline.fp_by_field.end() ? 0 : before->second;
        row.fp_after = after == treated.fp_by_field.end() ? 0 : after->second;
        row.change = row.fp_after - row.fp_before;
        if (row.fp_before > 0)
            row.pct = 100.0 * static_cast<double>(row.change) /
                      static_cast<double>(row.fp_before);
        else if (row.fp_after > 0)
            row.pct = std::numeric_limits<double>::infinity();
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const FpDeltaRow& a, const FpDeltaRow& b) {
        if (a.pct.has_value() != b.pct.has_value()) return a.pct.has_value();
        if (!a.pct) return false;
        return *a.pct < *b.pct;
    });
    return rows;
}

std::string format_fp_delta_table(const std::vector<FpDeltaRow>& rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %10s %10s %8s %9s\n", "field", "fp_before",
                  "fp_after", "change", "pct");
    out += line;
    for (const auto& row : rows) {
        std::string pct = "—";  // 0/0 has no defined percentage
        if (row.pct && std::isfinite(*row.pct)) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%+.1f%%", *row.pct);
            pct = buf;
        } else if (row.pct) {
            pct = "new";
        }
        std::snprintf(line, sizeof(line), "%-20s %10ld %10ld %+8ld %9s\n",
                      row.field.c_str(), row.fp_before, row.fp_after, row.change,
                      pct.c_str());
        out += line;
    }
    return out;
}

}  // namespace receval
