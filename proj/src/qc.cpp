#include "receval/qc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "json.hpp"

namespace receval {

std::string_view to_string(QcRule r) {
    switch (r) {
        case QcRule::SchemaViolation: return "SchemaViolation";
        case QcRule::DateFormat: return "DateFormat";
        case QcRule::CurrencyCode: return "CurrencyCode";
        case QcRule::CrossFieldSum: return "CrossFieldSum";
        case QcRule::AmountFormat: return "AmountFormat";
        case QcRule::CountryCityFormat: return "CountryCityFormat";
    }
    return "?";
}

namespace {

const char* kTypeVocabulary[] = {"plane", "train", "ship", "bus",
                                 "taxi",  "metro", "hotel", "other"};

bool iso_date_shaped(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    int month = (s[5] - '0') * 10 + (s[6] - '0');
    int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

bool iso_currency_shaped(const std::string& s) {
    if (s.size() != 3) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isupper(c); });
}

// "Country-City" with nonempty halves, or a bare country. Shape only,
// no gazetteer.
bool country_city_shaped(const std::string& s) {
    auto hyphen = s.find('-');
    if (hyphen == std::string::npos) return !s.empty();
    if (s.find('-', hyphen + 1) != std::string::npos) return false;
    return hyphen > 0 && hyphen + 1 < s.size();
}

}  // namespace

std::vector<QcFinding> check_record(const ExtractionRecord& rec, double tolerance) {
    std::vector<QcFinding> findings;
    auto add = [&](std::string_view field, QcRule rule, std::string detail) {
        findings.push_back({rec.id, std::string(field), rule, std::move(detail)});
    };

    for (const auto& key : rec.unknown_keys)
        add(key, QcRule::SchemaViolation, "unknown field in document");

    for (const char* name : {"std_start_time", "std_end_time", "std_invoice_time"}) {
        const std::string& value = rec.scalar(field_index(name));
        if (!value.empty() && !iso_date_shaped(value))
            add(name, QcRule::DateFormat, "not YYYY-MM-DD: '" + value + "'");
    }

    const std::string& curr = rec.scalar(field_index("std_curr"));
    if (!curr.empty() && !iso_currency_shaped(curr))
        add("std_curr", QcRule::CurrencyCode,
            "not a 3-letter uppercase code: '" + curr + "'");

    const std::string& type = rec.scalar(field_index("type"));
    if (!type.empty()) {
        bool known = std::any_of(std::begin(kTypeVocabulary), std::end(kTypeVocabulary),
                                 [&](const char* t) { return type == t; });
        if (!known)
            add("type", QcRule::SchemaViolation, "type not in vocabulary: '" + type + "'");
    }

    for (const char* name : {"place", "departure", "arrival"}) {
        const std::string& value = rec.scalar(field_index(name));
        if (!value.empty() && !country_city_shaped(value))
            add(name, QcRule::CountryCityFormat, "not Country-City: '" + value + "'");
    }
    for (const auto& entry : rec.texts(field_index("seller_address"))) {
        if (!entry.empty() && !country_city_shaped(entry))
            add("seller_address", QcRule::CountryCityFormat,
                "not Country-City: '" + entry + "'");
    }

    const std::string& total_text = rec.scalar(field_index("std_total"));
    Amount total = Amount::absent();
    bool total_ok = false;
    if (!total_text.empty()) {
        try {
            total = Amount::parse(total_text);
            total_ok = true;
            if (!total.two_decimal_exact())
                add("std_total", QcRule::AmountFormat,
                    "not renderable to 2 decimals: '" + total_text + "'");
        } catch (const AmountError&) {
            add("std_total", QcRule::AmountFormat, "unparseable: '" + total_text + "'");
        }
    }

    const auto& items = rec.items(field_index("detail"));
    bool items_ok = true;
    std::int64_t sum_micros = 0;
    for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].malformed) {
            items_ok = false;
            add("detail", QcRule::AmountFormat,
                "item " + std::to_string(i) + " amount unparseable: '" +
                    items[i].amount_text + "'");
            continue;
        }
        sum_micros += items[i].amount.micros();
    }

    if (total_ok && items_ok && !items.empty()) {
        std::int64_t tolerance_micros =
            static_cast<std::int64_t>(std::llround(tolerance * Amount::kScale));
        std::int64_t delta = sum_micros - total.micros();
        if (delta < 0) delta = -delta;
        if (delta > tolerance_micros)
            add("std_total", QcRule::CrossFieldSum,
                "detail sums " + Amount::from_micros(sum_micros).to_string() +
                    " but std_total is " + total.to_string());
    }

    return findings;
}

BatchVerdict batch_accept(std::span<const ExtractionRecord> batch,
                          std::span<const ExtractionRecord> reference,
                          const ScoreContext& ctx, double threshold,
                          const std::string& batch_id) {
    if (reference.empty()) throw EmptyReference();

    std::unordered_map<std::string_view, const ExtractionRecord*> by_id;
    for (const auto& rec : batch) by_id.emplace(rec.id, &rec);

    BatchVerdict verdict;
    verdict.batch_id = batch_id;
    verdict.reference_size = reference.size();

    const auto& specs = field_specs();
    std::array<long, kFieldCount> matches{};
    long counted = 0;
    for (const auto& ref : reference) {
        auto it = by_id.find(ref.id);
        if (it == by_id.end())
            throw std::runtime_error("reference id not present in batch: " + ref.id);
        ++counted;
        for (int i = 0; i < kFieldCount; ++i) {
            FieldOutcome o = classify_outcome(i, ref.values[static_cast<std::size_t>(i)],
                                              it->second->values[static_cast<std::size_t>(i)],
                                              ctx);
            bool match = false;
            if (o.state == ConfusionState::TN)
                match = true;
            else if (o.state == ConfusionState::TP)
                match = o.score >= correctness_threshold(specs[static_cast<std::size_t>(i)]) &&
                        (specs[static_cast<std::size_t>(i)].shape == ValueShape::Scalar
                             ? true
                             : o.items.fp_items == 0 && o.items.fn_items == 0);
            if (match) ++matches[static_cast<std::size_t>(i)];
        }
    }

    verdict.accepted = true;
    for (int i = 0; i < kFieldCount; ++i) {
        double accuracy = static_cast<double>(matches[static_cast<std::size_t>(i)]) /
                          static_cast<double>(counted);
        verdict.per_field_accuracy[std::string(specs[static_cast<std::size_t>(i)].name)] =
            accuracy;
        if (accuracy < threshold) {
            verdict.accepted = false;
            verdict.failing_fields.push_back(std::string(specs[static_cast<std::size_t>(i)].name));
        }
    }
    return verdict;
}

std::string audit_report(std::span<const QcFinding> findings,
                         const BatchVerdict* verdict) {
    std::string out;
    out += "# Annotation audit report\n\n";

    if (verdict) {
        out += verdict->accepted ? "**Batch accepted.**" : "**Batch REJECTED.**";
        if (!verdict->batch_id.empty()) out += " Batch: " + verdict->batch_id + ".";
        out += " Reference size: " + std::to_string(verdict->reference_size) + ".\n\n";
        if (!verdict->failing_fields.empty()) {
            out += "Fields below threshold:\n";
            for (const auto& f : verdict->failing_fields) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), " %.4f", verdict->per_field_accuracy.at(f));
                out += "- " + f + buf + "\n";
            }
            out += "\n";
        }
        out += "## Per-field accuracy\n\n";
        for (const auto& [field, accuracy] : verdict->per_field_accuracy) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "- %s: %.4f\n", field.c_str(), accuracy);
            out += buf;
        }
        out += "\n";
    }

    out += "## Findings (" + std::to_string(findings.size()) + ")\n\n";
    if (findings.empty()) {
        out += "No findings.\n";
        return out;
    }

    // rule -> field -> (count, first example)
    std::map<std::string, std::map<std::string, std::pair<long, std::string>>> grouped;
    for (const auto& f : findings) {
        auto& slot = grouped[std::string(to_string(f.rule))][f.field];
        if (slot.first == 0) {
            slot.second = f.detail;
            if (!f.doc_id.empty()) slot.second += " (doc " + f.doc_id + ")";
        }
        ++slot.first;
    }
    for (const auto& [rule, fields] : grouped) {
        long total = 0;
        for (const auto& [field, slot] : fields) total += slot.first;
        out += "### " + rule + " (" + std::to_string(total) + ")\n\n";
        for (const auto& [field, slot] : fields) {
            out += "- " + field + ": " + std::to_string(slot.first) +
                   ", e.g. " + slot.second + "\n";
        }
        out += "\n";
    }
    return out;
}

std::string audit_report_json(std::span<const QcFinding> findings,
                              const BatchVerdict* verdict) {
    nlohmann::json doc;
    doc["finding_count"] = findings.size();
    nlohmann::json list = nlohmann::json::array();
    std::map<std::string, long> by_rule;
    for (const auto& f : findings) {
        list.push_back({{"doc", f.doc_id},
                        {"field", f.field},
                        {"rule", std::string(to_string(f.rule))},
                        {"detail", f.detail}});
        ++by_rule[std::string(to_string(f.rule))];
    }
    doc["findings"] = std::move(list);
    doc["by_rule"] = by_rule;
    if (verdict) {
        doc["verdict"] = {{"accepted", verdict->accepted},
                          {"batch_id", verdict->batch_id},
                          {"reference_size", verdict->reference_size},
                          {"per_field_accuracy", verdict->per_field_accuracy},
                          {"failing_fields", verdict->failing_fields}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace receval
