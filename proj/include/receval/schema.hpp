#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace receval {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& reason) : std::runtime_error(reason) {}
};

struct AmountError : std::runtime_error {
    explicit AmountError(const std::string& reason) : std::runtime_error(reason) {}
};

/// Monetary value held as integer micro-units so the 1e-6 comparison
/// tolerance and 2-decimal rendering are exact. An Amount is either a
/// value or Absent (parsed from empty text); Absent compares equal to
/// zero, the distinction exists only for reporting.
class Amount {
public:
    static constexpr std::int64_t kScale = 1'000'000;

    Amount() = default;

    static Amount absent() { return Amount{}; }
    static Amount from_micros(std::int64_t micros) {
        Amount a;
        a.absent_ = false;
        a.micros_ = micros;
        return a;
    }
    static Amount from_value(double units);

    /// Parses text such as "1,000.00", "50.58", "$12.40", "-3.5".
    /// Commas are accepted only as thousands separators in the integer
    /// part (groups of three); "1.000,00" style input fails.
    /// Empty text yields Absent. Throws AmountError otherwise.
    static Amount parse(std::string_view text);

    bool is_absent() const { return absent_; }
    std::int64_t micros() const { return micros_; }
    double value() const { return static_cast<double>(micros_) / kScale; }

    /// True when |a - b| < 1e-6 on the micro-unit grid; Absent acts as 0.
    bool equals(const Amount& other) const { return micros_ == other.micros_; }

    /// True when the value is exactly representable with 2 decimals.
    bool two_decimal_exact() const { return micros_ % 10'000 == 0; }

    /// Plain rendering with at least 2 decimals, e.g. "1000.00".
    std::string to_string() const;

private:
    bool absent_ = true;
    std::int64_t micros_ = 0;
};

enum class SubTask { Perception, Normalization, Reasoning, Structure };
enum class MetricType { ExactMatch, Numeric, Semantic, StructuredList };
enum class ValueShape { Scalar, TextList, ItemList };

std::string_view to_string(SubTask t);
std::string_view to_string(MetricType m);

struct FieldSpec {
    std::string_view name;
    SubTask category;
    MetricType metric;
    ValueShape shape;
};

inline constexpr int kFieldCount = 19;

/// The 19 field specs in canonical (table) order. The order is the
/// contract for reward averaging and report layout.
const std::array<FieldSpec, kFieldCount>& field_specs();

/// Index of a field name in field_specs(), or -1 if unknown.
int field_index(std::string_view name);

/// One line item of the `detail` field.
struct DetailItem {
    std::string content;
    std::string amount_text;            // raw text as given
    Amount amount;                      // parsed; Absent if text empty
    bool malformed = false;             // amount (or ifTax) unparseable
    bool if_tax = false;

    bool operator==(const DetailItem& other) const {
        return content == other.content && amount_text == other.amount_text &&
               if_tax == other.if_tax;
    }
};

using FieldValue =
    std::variant<std::string, std::vector<std::string>, std::vector<DetailItem>>;

bool field_value_empty(const FieldValue& v);

/// One document's extracted fields, gold or predicted. All 19 slots are
/// always populated; absent input keys materialize as empty values.
struct ExtractionRecord {
    std::string id;                       // pairing key, "" when none
    std::array<FieldValue, kFieldCount> values;
    std::vector<std::string> unknown_keys; // extra input keys, kept for QC

    const std::string& scalar(int idx) const;
    const std::vector<std::string>& texts(int idx) const;
    const std::vector<DetailItem>& items(int idx) const;

    bool field_empty(int idx) const { return field_value_empty(values[idx]); }

    bool operator==(const ExtractionRecord& other) const {
        return id == other.id && values == other.values;
    }
};

/// A record with all 19 fields empty (the all-abstain prediction).
ExtractionRecord empty_record();

/// Parses one document object. Missing keys become empty values and
/// list fields given as scalars are wrapped into single-element lists.
/// Python-literal booleans (True/False) and None are tolerated.
/// Throws ParseError for structurally broken input.
ExtractionRecord parse_record(std::string_view raw_document);

/// Canonical serialization: table-order keys, `id` first when present.
/// parse_record(serialize_record(r)) == r for valid records.
std::string serialize_record(const ExtractionRecord& rec);

/// Lowercases ASCII, trims, and (by default) collapses internal
/// whitespace runs to one space. Idempotent.
std::string normalize_text(std::string_view s, bool collapse_inner = true);

/// parse_amount per the standard format; see Amount::parse.
inline Amount parse_amount(std::string_view text) { return Amount::parse(text); }

}  // namespace receval
