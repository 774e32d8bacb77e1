#include "receval/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "json.hpp"

namespace receval {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Amount

Amount Amount::from_value(double units) {
    Amount a;
    a.absent_ = false;
    a.micros_ = static_cast<std::int64_t>(std::llround(units * kScale));
    return a;
}

namespace {

// Currency symbols stripped before numeric parsing (UTF-8 sequences).
const char* kCurrencySymbols[] = {"$", "£", "€", "¥", "₹",
                                  "₩", "¢"};

bool strip_prefix(std::string& s, std::string_view pre) {
    if (s.size() >= pre.size() && std::string_view(s).substr(0, pre.size()) == pre) {
        s.erase(0, pre.size());
        return true;
    }
    return false;
}

bool strip_suffix(std::string& s, std::string_view suf) {
    if (s.size() >= suf.size() &&
        std::string_view(s).substr(s.size() - suf.size()) == suf) {
        s.erase(s.size() - suf.size());
        return true;
    }
    return false;
}

void trim_ascii(std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    s = s.substr(b, e - b);
}

}  // namespace

Amount Amount::parse(std::string_view text) {
    std::string s(text);
    trim_ascii(s);
    if (s.empty()) return Amount::absent();

    bool stripped = true;
    while (stripped) {
        stripped = false;
        trim_ascii(s);
        for (const char* sym : kCurrencySymbols) {
            stripped |= strip_prefix(s, sym);
            stripped |= strip_suffix(s, sym);
        }
    }
    trim_ascii(s);
    if (s.empty()) throw AmountError("currency symbol without a value");

    bool negative = false;
    if (s[0] == '+' || s[0] == '-') {
        negative = s[0] == '-';
        s.erase(0, 1);
    }
    if (s.empty()) throw AmountError("sign without digits");

    // Split at the decimal point; commas are legal only in the integer
    // part, as groups of three.
    auto dot = s.find('.');
    std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
    std::string frac_part = dot == std::string::npos ? "" : s.substr(dot + 1);
    if (frac_part.find('.') != std::string::npos)
        throw AmountError("multiple decimal points: " + std::string(text));
    if (frac_part.find(',') != std::string::npos)
        throw AmountError("comma in fractional part: " + std::string(text));

    if (int_part.find(',') != std::string::npos) {
        // Validate 1-3 leading digits then strict ,ddd groups.
        size_t group = int_part.find(',');
        if (group == 0 || group > 3) throw AmountError("bad thousands grouping");
        size_t pos = group;
        while (pos < int_part.size()) {
            if (int_part[pos] != ',' || int_part.size() - pos < 4)
                throw AmountError("bad thousands grouping");
            for (size_t k = pos + 1; k < pos + 4; ++k)
                if (!std::isdigit(static_cast<unsigned char>(int_part[k])))
                    throw AmountError("bad thousands grouping");
            pos += 4;
        }
        int_part.erase(std::remove(int_part.begin(), int_part.end(), ','),
                       int_part.end());
    }

    if (int_part.empty() && frac_part.empty())
        throw AmountError("no digits: " + std::string(text));
    for (char c : int_part)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw AmountError("non-numeric residue: " + std::string(text));
    for (char c : frac_part)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw AmountError("non-numeric residue: " + std::string(text));

    std::int64_t whole = 0;
    for (char c : int_part) {
        if (whole > (INT64_MAX - 9) / 10) throw AmountError("amount out of range");
        whole = whole * 10 + (c - '0');
    }

    // Fraction to micro-units, rounding half away from zero at 6 digits.
    std::int64_t frac = 0;
    for (size_t i = 0; i < 6; ++i)
        frac = frac * 10 + (i < frac_part.size() ? frac_part[i] - '0' : 0);
    if (frac_part.size() > 6 && frac_part[6] >= '5') ++frac;

    std::int64_t micros = whole * kScale + frac;
    return Amount::from_micros(negative ? -micros : micros);
}

std::string Amount::to_string() const {
    std::int64_t m = micros_;
    std::string sign = m < 0 ? "-" : "";
    if (m < 0) m = -m;
    std::int64_t whole = m / kScale;
    std::int64_t frac = m % kScale;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(frac));
    std::string digits(buf);
    while (digits.size() > 2 && digits.back() == '0') digits.pop_back();
    return sign + std::to_string(whole) + "." + digits;
}

// ---------------------------------------------------------------------------
// Field table

std::string_view to_string(SubTask t) {
    switch (t) {
        case SubTask::Perception: return "Perception";
        case SubTask::Normalization: return "Normalization";
        case SubTask::Reasoning: return "Reasoning";
        case SubTask::Structure: return "Structure";
    }
    return "?";
}

std::string_view to_string(MetricType m) {
    switch (m) {
        case MetricType::ExactMatch: return "ExactMatch";
        case MetricType::Numeric: return "Numeric";
        case MetricType::Semantic: return "Semantic";
        case MetricType::StructuredList: return "StructuredList";
    }
    return "?";
}

const std::array<FieldSpec, kFieldCount>& field_specs() {
    static const std::array<FieldSpec, kFieldCount> specs = {{
        {"orig_start_time", SubTask::Perception, MetricType::Semantic, ValueShape::Scalar},
        {"orig_end_time", SubTask::Perception, MetricType::Semantic, ValueShape::Scalar},
        {"orig_invoice_time", SubTask::Perception, MetricType::Semantic, ValueShape::Scalar},
        {"orig_total", SubTask::Perception, MetricType::Numeric, ValueShape::Scalar},
        {"orig_curr", SubTask::Perception, MetricType::StructuredList, ValueShape::TextList},
        {"invoice_number", SubTask::Perception, MetricType::ExactMatch, ValueShape::Scalar},
        {"tax_number", SubTask::Perception, MetricType::ExactMatch, ValueShape::Scalar},
        {"seller_name", SubTask::Perception, MetricType::Semantic, ValueShape::TextList},
        {"std_start_time", SubTask::Normalization, MetricType::ExactMatch, ValueShape::Scalar},
        {"std_end_time", SubTask::Normalization, MetricType::ExactMatch, ValueShape::Scalar},
        {"std_invoice_time", SubTask::Normalization, MetricType::ExactMatch, ValueShape::Scalar},
        {"std_total", SubTask::Normalization, MetricType::Numeric, ValueShape::Scalar},
        {"type", SubTask::Reasoning, MetricType::ExactMatch, ValueShape::Scalar},
        {"place", SubTask::Reasoning, MetricType::Semantic, ValueShape::Scalar},
        {"departure", SubTask::Reasoning, MetricType::Semantic, ValueShape::Scalar},
        {"arrival", SubTask::Reasoning, MetricType::Semantic, ValueShape::Scalar},
        {"std_curr", SubTask::Reasoning, MetricType::ExactMatch, ValueShape::Scalar},
        {"seller_address", SubTask::Reasoning, MetricType::Semantic, ValueShape::TextList},
        {"detail", SubTask::Structure, MetricType::StructuredList, ValueShape::ItemList},
    }};
    return specs;
}

int field_index(std::string_view name) {
    static const std::unordered_map<std::string_view, int> index = [] {
        std::unordered_map<std::string_view, int> m;
        const auto& specs = field_specs();
        for (int i = 0; i < kFieldCount; ++i) m.emplace(specs[i].name, i);
        return m;
    }();
    auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
}

// ---------------------------------------------------------------------------
// Records

bool field_value_empty(const FieldValue& v) {
    return std::visit(
        [](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>)
                return normalize_text(x).empty();
            else
                return x.empty();
        },
        v);
}

const std::string& ExtractionRecord::scalar(int idx) const {
    return std::get<std::string>(values[idx]);
}
const std::vector<std::string>& ExtractionRecord::texts(int idx) const {
    return std::get<std::vector<std::string>>(values[idx]);
}
const std::vector<DetailItem>& ExtractionRecord::items(int idx) const {
    return std::get<std::vector<DetailItem>>(values[idx]);
}

ExtractionRecord empty_record() {
    ExtractionRecord rec;
    const auto& specs = field_specs();
    for (int i = 0; i < kFieldCount; ++i) {
        switch (specs[i].shape) {
            case ValueShape::Scalar: rec.values[i] = std::string(); break;
            case ValueShape::TextList: rec.values[i] = std::vector<std::string>(); break;
            case ValueShape::ItemList: rec.values[i] = std::vector<DetailItem>(); break;
        }
    }
    return rec;
}

namespace {

// Rewrites bare Python literals (True/False/None) outside string
// literals so json can parse model output produced by python repr.
std::string repair_python_literals(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool in_string = false;
    for (size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < raw.size()) {
                out.push_back(raw[++i]);
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            out.push_back(c);
            continue;
        }
        auto word_at = [&](std::string_view w) {
            if (raw.compare(i, w.size(), w) != 0) return false;
            bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
            size_t after = i + w.size();
            bool right_ok =
                after >= raw.size() || !std::isalnum(static_cast<unsigned char>(raw[after]));
            return left_ok && right_ok;
        };
        if (word_at("True")) {
            out += "true";
            i += 3;
        } else if (word_at("False")) {
            out += "false";
            i += 4;
        } else if (word_at("None")) {
            out += "null";
            i += 3;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string scalar_from_json(const json& v, std::string_view field) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number() || v.is_boolean()) return v.dump();
    if (v.is_null()) return "";
    throw ParseError("field '" + std::string(field) + "' expects a scalar, got " +
                     std::string(v.type_name()));
}

std::vector<std::string> text_list_from_json(const json& v, std::string_view field) {
    std::vector<std::string> out;
    if (v.is_null()) return out;
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (!s.empty()) out.push_back(std::move(s));
        return out;
    }
    if (v.is_number() || v.is_boolean()) {
        out.push_back(v.dump());
        return out;
    }
    if (v.is_array()) {
        for (const auto& e : v) {
            if (e.is_string()) {
                std::string s = e.get<std::string>();
                if (!s.empty()) out.push_back(std::move(s));  // empty text = absent
            } else if (e.is_number() || e.is_boolean()) {
                out.push_back(e.dump());
            } else if (!e.is_null()) {
                throw ParseError("field '" + std::string(field) +
                                 "' has a non-text list entry");
            }
        }
        return out;
    }
    throw ParseError("field '" + std::string(field) + "' expects a list of text");
}

std::optional<bool> bool_from_json(const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
        std::string s = normalize_text(v.get<std::string>());
        if (s == "true") return true;
        if (s == "false") return false;
    }
    if (v.is_number_integer()) {
        auto n = v.get<std::int64_t>();
        if (n == 0 || n == 1) return n == 1;
    }
    return std::nullopt;
}

DetailItem detail_item_from_json(const json& v) {
    DetailItem item;
    if (!v.is_object()) {
        // Non-object entries are kept as malformed items so structural
        // hallucination still shows up as FP items downstream.
        item.content = v.is_string() ? v.get<std::string>() : v.dump();
        item.malformed = true;
        return item;
    }
    if (auto it = v.find("content"); it != v.end())
        item.content = it->is_string() ? it->get<std::string>() : it->dump();
    if (auto it = v.find("amount"); it != v.end() && !it->is_null()) {
        item.amount_text = it->is_string() ? it->get<std::string>() : it->dump();
        try {
            item.amount = Amount::parse(item.amount_text);
        } catch (const AmountError&) {
            item.malformed = true;
        }
    }
    if (auto it = v.find("ifTax"); it != v.end() && !it->is_null()) {
        auto flag = bool_from_json(*it);
        if (flag)
            item.if_tax = *flag;
        else
            item.malformed = true;
    }
    return item;
}

std::vector<DetailItem> item_list_from_json(const json& v) {
    std::vector<DetailItem> out;
    if (v.is_null()) return out;
    if (v.is_string()) {
        if (v.get<std::string>().empty()) return out;
        out.push_back(detail_item_from_json(v));
        return out;
    }
    if (v.is_object()) {
        out.push_back(detail_item_from_json(v));
        return out;
    }
    if (v.is_array()) {
        for (const auto& e : v) out.push_back(detail_item_from_json(e));
        return out;
    }
    out.push_back(detail_item_from_json(v));
    return out;
}

}  // namespace

ExtractionRecord parse_record(std::string_view raw_document) {
    json doc;
    try {
        doc = json::parse(raw_document);
    } catch (const json::exception&) {
        try {
            doc = json::parse(repair_python_literals(raw_document));
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid document: ") + e.what());
        }
    }
    if (!doc.is_object()) throw ParseError("document is not an object");

    ExtractionRecord rec = empty_record();
    const auto& specs = field_specs();
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& key = it.key();
        if (key == "id") {
            rec.id = it.value().is_string() ? it.value().get<std::string>()
                                            : it.value().dump();
            continue;
        }
        int idx = field_index(key);
        if (idx < 0) {
            rec.unknown_keys.push_back(key);
            continue;
        }
        switch (specs[idx].shape) {
            case ValueShape::Scalar:
                rec.values[idx] = scalar_from_json(it.value(), key);
                break;
            case ValueShape::TextList:
                rec.values[idx] = text_list_from_json(it.value(), key);
                break;
            case ValueShape::ItemList:
                rec.values[idx] = item_list_from_json(it.value());
                break;
        }
    }
    std::sort(rec.unknown_keys.begin(), rec.unknown_keys.end());
    return rec;
}

std::string serialize_record(const ExtractionRecord& rec) {
    ordered_json doc = ordered_json::object();
    if (!rec.id.empty()) doc["id"] = rec.id;
    const auto& specs = field_specs();
    for (int i = 0; i < kFieldCount; ++i) {
        const std::string key(specs[i].name);
        switch (specs[i].shape) {
            case ValueShape::Scalar:
                doc[key] = rec.scalar(i);
                break;
            case ValueShape::TextList:
                doc[key] = rec.texts(i);
                break;
            case ValueShape::ItemList: {
                ordered_json items = ordered_json::array();
                for (const auto& item : rec.items(i)) {
                    ordered_json o = ordered_json::object();
                    o["content"] = item.content;
                    o["amount"] = item.amount_text;
                    o["ifTax"] = item.if_tax;
                    items.push_back(std::move(o));
                }
                doc[key] = std::move(items);
                break;
            }
        }
    }
    return doc.dump();
}

std::string normalize_text(std::string_view s, bool collapse_inner) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;

    std::string out;
    out.reserve(e - b);
    bool in_run = false;
    for (size_t i = b; i < e; ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            if (!collapse_inner) {
                out.push_back(static_cast<char>(c));
            } else {
                in_run = true;
            }
            continue;
        }
        if (in_run) {
            out.push_back(' ');
            in_run = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

}  // namespace receval
