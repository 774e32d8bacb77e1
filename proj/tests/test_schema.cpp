#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "receval/schema.hpp"
#include "support.hpp"

using namespace receval;

TEST_CASE("field table has the canonical 19 rows") {
    const auto& specs = field_specs();
    CHECK(specs.size() == 19);

    int perception = 0, normalization = 0, reasoning = 0, structure = 0;
    int structured_list = 0;
    for (const auto& spec : specs) {
        switch (spec.category) {
            case SubTask::Perception: ++perception; break;
            case SubTask::Normalization: ++normalization; break;
            case SubTask::Reasoning: ++reasoning; break;
            case SubTask::Structure: ++structure; break;
        }
        if (spec.metric == MetricType::StructuredList) ++structured_list;
    }
    CHECK(perception == 8);
    CHECK(normalization == 4);
    CHECK(reasoning == 6);
    CHECK(structure == 1);
    CHECK(structured_list == 2);

    auto spec_of = [&](const char* name) { return specs[size_t(field_index(name))]; };
    CHECK(spec_of("invoice_number").category == SubTask::Perception);
    CHECK(spec_of("invoice_number").metric == MetricType::ExactMatch);
    CHECK(spec_of("place").category == SubTask::Reasoning);
    CHECK(spec_of("place").metric == MetricType::Semantic);
    CHECK(spec_of("orig_curr").category == SubTask::Perception);
    CHECK(spec_of("orig_curr").metric == MetricType::StructuredList);
    CHECK(spec_of("detail").category == SubTask::Structure);
    CHECK(spec_of("detail").metric == MetricType::StructuredList);
    CHECK(spec_of("seller_name").shape == ValueShape::TextList);
    CHECK(spec_of("std_total").metric == MetricType::Numeric);

    CHECK(field_index("no_such_field") == -1);
}

TEST_CASE("normalize_text") {
    CHECK(normalize_text("  Hotel  Bill ") == "hotel bill");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text("USD") == "usd");
    CHECK(normalize_text("a\t\nb") == "a b");
    CHECK(normalize_text("a\t b", /*collapse_inner=*/false) == "a\t b");

    std::mt19937 rng(7);
    for (int i = 0; i < 500; ++i) {
        std::string s = testsupport::random_text(rng);
        std::string once = normalize_text(s);
        CHECK(normalize_text(once) == once);
    }
}

TEST_CASE("parse_amount") {
    CHECK(Amount::parse("1,000.00").micros() == 1'000'000'000);
    CHECK(Amount::parse("1000.00").micros() == 1'000'000'000);
    CHECK(Amount::parse("50.58").micros() == 50'580'000);
    CHECK(Amount::parse("$45.00").micros() == 45'000'000);
    CHECK(Amount::parse("-5.5").micros() == -5'500'000);
    CHECK(Amount::parse("€12").micros() == 12'000'000);

    CHECK(Amount::parse("").is_absent());
    CHECK(Amount::parse("  ").is_absent());

    CHECK(Amount::parse("0").equals(Amount::parse("0.00")));
    CHECK(Amount::parse("0.00").equals(Amount::absent()));

    CHECK_THROWS_AS(Amount::parse("1.000,00"), AmountError);
    CHECK_THROWS_AS(Amount::parse("12,34.56"), AmountError);
    CHECK_THROWS_AS(Amount::parse("abc"), AmountError);
    CHECK_THROWS_AS(Amount::parse("$"), AmountError);
    CHECK_THROWS_AS(Amount::parse("1.2.3"), AmountError);

    CHECK(Amount::parse("1000").to_string() == "1000.00");
    CHECK(Amount::parse("50.585").two_decimal_exact() == false);
    CHECK(Amount::parse("50.58").two_decimal_exact());
}

TEST_CASE("golden record parses and round-trips") {
    ExtractionRecord rec = testsupport::golden_record();
    CHECK(rec.scalar(field_index("type")) == "train");
    CHECK(rec.scalar(field_index("std_total")) == "50.58");
    CHECK(rec.texts(field_index("orig_curr")).size() == 2);
    CHECK(rec.items(field_index("detail")).size() == 2);
    CHECK(rec.items(field_index("detail"))[1].if_tax == true);
    CHECK(rec.field_empty(field_index("std_end_time")));
    CHECK(rec.unknown_keys.empty());

    ExtractionRecord again = parse_record(serialize_record(rec));
    CHECK(again == rec);
}

TEST_CASE("multibyte content survives the round trip") {
    ExtractionRecord rec = parse_record(
        R"({"seller_name": ["Café München"], "place": "Deutschland-München"})");
    CHECK(rec.texts(field_index("seller_name"))[0] == "Café München");
    CHECK(parse_record(serialize_record(rec)) == rec);
    // ASCII-only lowercasing leaves multibyte sequences intact
    CHECK(normalize_text("Café München") == "café münchen");
}

TEST_CASE("parse_record edge cases") {
    // missing key materializes as empty
    ExtractionRecord rec = parse_record(R"({"type": "taxi"})");
    CHECK(rec.scalar(field_index("type")) == "taxi");
    CHECK(rec.field_empty(field_index("tax_number")));
    CHECK(rec.items(field_index("detail")).empty());

    CHECK_THROWS_AS(parse_record("not a json {"), ParseError);
    CHECK_THROWS_AS(parse_record("[1,2]"), ParseError);
    // scalar slot given a list is structurally broken
    CHECK_THROWS_AS(parse_record(R"({"type": ["taxi"]})"), ParseError);

    // scalar wrapped into a single-element list
    rec = parse_record(R"({"seller_name": "NSW TrainLink"})");
    CHECK(rec.texts(field_index("seller_name")) ==
          std::vector<std::string>{"NSW TrainLink"});

    // python-literal booleans are tolerated
    rec = parse_record(
        R"({"detail": [{"content": "Fare", "amount": "1.00", "ifTax": True}]})");
    CHECK(rec.items(field_index("detail"))[0].if_tax == true);

    // malformed amount is kept but flagged
    rec = parse_record(
        R"({"detail": [{"content": "Fare", "amount": "n/a", "ifTax": false}]})");
    REQUIRE(rec.items(field_index("detail")).size() == 1);
    CHECK(rec.items(field_index("detail"))[0].malformed);

    // unknown keys are collected, id is reserved
    rec = parse_record(R"({"id": "d1", "typo_field": 1})");
    CHECK(rec.id == "d1");
    CHECK(rec.unknown_keys == std::vector<std::string>{"typo_field"});

    // whitespace-only scalar counts as empty
    rec = parse_record(R"({"place": "  "})");
    CHECK(rec.field_empty(field_index("place")));

    // empty strings never become list items
    rec = parse_record(R"({"orig_curr": ["", "$"], "seller_name": [""]})");
    CHECK(rec.texts(field_index("orig_curr")) == std::vector<std::string>{"$"});
    CHECK(rec.field_empty(field_index("seller_name")));
}
