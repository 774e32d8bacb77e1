#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "receval/corpus.hpp"
#include "receval/qc.hpp"
#include "support.hpp"

using namespace receval;

namespace {

bool has_rule(const std::vector<QcFinding>& findings, QcRule rule) {
    for (const auto& f : findings)
        if (f.rule == rule) return true;
    return false;
}

ExtractionRecord golden_with(const char* field, FieldValue value) {
    ExtractionRecord rec = testsupport::golden_record();
    rec.values[size_t(field_index(field))] = std::move(value);
    return rec;
}

}  // namespace

TEST_CASE("golden record has zero findings") {
    auto findings = check_record(testsupport::golden_record());
    CHECK(findings.empty());
}

TEST_CASE("date format rule") {
    auto findings = check_record(golden_with("std_invoice_time", std::string("03 Jun 2024")));
    REQUIRE(has_rule(findings, QcRule::DateFormat));

    CHECK(check_record(golden_with("std_invoice_time", std::string("2024-06-03"))).empty());
    CHECK(has_rule(check_record(golden_with("std_start_time", std::string("2024-13-03"))),
                   QcRule::DateFormat));
    CHECK(has_rule(check_record(golden_with("std_end_time", std::string("2024-06-32"))),
                   QcRule::DateFormat));
    // empty std dates are fine
    CHECK(check_record(golden_with("std_end_time", std::string(""))).empty());
}

TEST_CASE("currency and type rules") {
    CHECK(has_rule(check_record(golden_with("std_curr", std::string("aud"))),
                   QcRule::CurrencyCode));
    CHECK(has_rule(check_record(golden_with("std_curr", std::string("AU"))),
                   QcRule::CurrencyCode));
    CHECK(has_rule(check_record(golden_with("type", std::string("flight"))),
                   QcRule::SchemaViolation));
    CHECK(check_record(golden_with("type", std::string("hotel"))).empty());
}

TEST_CASE("country-city shape rule") {
    CHECK(check_record(golden_with("place", std::string("Australia"))).empty());
    CHECK(has_rule(check_record(golden_with("place", std::string("Sydney-"))),
                   QcRule::CountryCityFormat));
    CHECK(has_rule(check_record(golden_with("departure", std::string("-Sydney"))),
                   QcRule::CountryCityFormat));
    CHECK(has_rule(check_record(golden_with("arrival", std::string("A-B-C"))),
                   QcRule::CountryCityFormat));
    CHECK(has_rule(check_record(golden_with(
                       "seller_address", std::vector<std::string>{"Australia-"})),
                   QcRule::CountryCityFormat));
}

TEST_CASE("cross-field sum rule") {
    // golden sums exactly: 45.00 + 5.58 = 50.58
    CHECK(check_record(testsupport::golden_record()).empty());

    auto findings = check_record(golden_with("std_total", std::string("44.00")));
    CHECK(has_rule(findings, QcRule::CrossFieldSum));

    // tolerance boundary: |delta| = 0.05 passes, 0.06 fires
    CHECK(check_record(golden_with("std_total", std::string("50.63"))).empty());
    CHECK(has_rule(check_record(golden_with("std_total", std::string("50.64"))),
                   QcRule::CrossFieldSum));

    // both sides must be present for the rule to fire
    CHECK(check_record(golden_with("detail", std::vector<DetailItem>{})).empty());
    auto no_total = golden_with("std_total", std::string(""));
    CHECK_FALSE(has_rule(check_record(no_total), QcRule::CrossFieldSum));
}

TEST_CASE("amount format rules") {
    CHECK(has_rule(check_record(golden_with("std_total", std::string("50.585"))),
                   QcRule::AmountFormat));
    CHECK(has_rule(check_record(golden_with("std_total", std::string("fifty"))),
                   QcRule::AmountFormat));

    auto rec = testsupport::golden_record();
    auto items = rec.items(field_index("detail"));
    items[0].amount_text = "n/a";
    items[0].malformed = true;
    rec.values[size_t(field_index("detail"))] = items;
    auto findings = check_record(rec);
    CHECK(has_rule(findings, QcRule::AmountFormat));
    // malformed item suppresses the cross-field check
    CHECK_FALSE(has_rule(findings, QcRule::CrossFieldSum));
}

TEST_CASE("unknown keys are schema violations") {
    auto rec = parse_record(R"({"type": "train", "grand_total": "1.00"})");
    CHECK(has_rule(check_record(rec), QcRule::SchemaViolation));
}

TEST_CASE("batch acceptance gate") {
    EvalOptions opts;
    EvalEngine engine(opts);

    const int n = 200;
    std::vector<ExtractionRecord> reference;
    for (int i = 0; i < n; ++i) {
        ExtractionRecord rec = testsupport::golden_record();
        rec.id = "doc-" + std::to_string(i);
        reference.push_back(rec);
    }

    // 7 of 200 wrong -> 96.5% on invoice_number
    auto batch = reference;
    for (int i = 0; i < 7; ++i)
        batch[size_t(i)].values[size_t(field_index("invoice_number"))] =
            std::string("bad-") + std::to_string(i);

    auto verdict = batch_accept(batch, reference, engine.context());
    CHECK_FALSE(verdict.accepted);
    CHECK(verdict.failing_fields == std::vector<std::string>{"invoice_number"});
    CHECK(verdict.per_field_accuracy.at("invoice_number") == doctest::Approx(0.965));

    // corrected to 4 wrong -> 98%, accepted
    for (int i = 4; i < 7; ++i)
        batch[size_t(i)].values[size_t(field_index("invoice_number"))] =
            reference[size_t(i)].values[size_t(field_index("invoice_number"))];
    verdict = batch_accept(batch, reference, engine.context());
    CHECK(verdict.accepted);
    CHECK(verdict.per_field_accuracy.at("invoice_number") == doctest::Approx(0.98));

    // exactly at the threshold is accepted (inclusive)
    for (int i = 0; i < 6; ++i)
        batch[size_t(i)].values[size_t(field_index("invoice_number"))] =
            std::string("bad-") + std::to_string(i);
    verdict = batch_accept(batch, reference, engine.context());
    CHECK(verdict.per_field_accuracy.at("invoice_number") == doctest::Approx(0.97));
    CHECK(verdict.accepted);

    // monotone: fixing one more annotation keeps it accepted
    batch[0].values[size_t(field_index("invoice_number"))] =
        reference[0].values[size_t(field_index("invoice_number"))];
    CHECK(batch_accept(batch, reference, engine.context()).accepted);

    CHECK_THROWS_AS(batch_accept(batch, {}, engine.context()), EmptyReference);
}

TEST_CASE("audit report") {
    std::vector<QcFinding> none;
    std::string empty_report = audit_report(none, nullptr);
    CHECK(empty_report.find("No findings.") != std::string::npos);

    auto rec = testsupport::golden_record();
    rec.id = "doc-9";
    auto bad = golden_with("std_curr", std::string("aud"));
    bad.id = "doc-9";
    auto findings = check_record(bad);
    auto more = check_record(golden_with("type", std::string("flight")));
    findings.insert(findings.end(), more.begin(), more.end());

    std::string report = audit_report(findings, nullptr);
    CHECK(report.find("CurrencyCode") != std::string::npos);
    CHECK(report.find("SchemaViolation") != std::string::npos);
    CHECK(report.find("(" + std::to_string(findings.size()) + ")") != std::string::npos);

    // byte-identical when regenerated
    CHECK(audit_report(findings, nullptr) == report);
}
