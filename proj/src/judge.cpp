#include "receval/judge.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "receval/http.hpp"

#include "json.hpp"

namespace receval {

using nlohmann::json;

std::string_view to_string(VerdictSource s) {
    switch (s) {
        case VerdictSource::ExactFilter: return "exact";
        case VerdictSource::RemoteJudge: return "remote";
        case VerdictSource::OfflineFallback: return "offline";
        case VerdictSource::Cache: return "cache";
    }
    return "?";
}

namespace {

constexpr std::string_view kPromptTemplate =
    R"(You are an expert data quality analyst. Your task is to determine if the 'Predicted Value' is semantically equivalent to the 'Ground Truth Value' for a specific field extracted from a document.

Context:
- Field Name: <field_name>

Equivalence Criteria:
Consider the values equivalent if they represent the same real-world entity or meaning, even with minor differences like:
- Abbreviations (e.g., "Co." vs. "Company").
- Common synonyms or alternative names.
- Minor typos or spelling errors that do not change the meaning.
- Formatting differences (e.g., "1,234.50" vs. "1234.50").
- Presence or absence of trivial words (e.g., "The Grand Hotel" vs. "Grand Hotel").

Consider the values NOT equivalent if:
- They refer to different entities (e.g., "Pepsi" vs. "Coca-Cola").
- The core information is different (e.g., a different address or name).
- The prediction contains significant missing or extra information that changes the meaning.

Task:
Based on the criteria above, evaluate the following pair:
- Ground Truth Value: "<ground_truth>"
- Predicted Value: "<prediction>"

Output:
Respond ONLY with a valid JSON object containing two keys:
1. "is_equivalent": A boolean value (true or false).
2. "reasoning": A brief explanation for your decision.
)";

std::string escape_value(std::string_view v) {
    std::string out;
    out.reserve(v.size());
    for (char c : v) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

void replace_all(std::string& text, std::string_view needle, std::string_view with) {
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), with);
        pos += with.size();
    }
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string cache_key(std::string_view field, std::string_view gt, std::string_view pred) {
    std::string joined;
    joined.reserve(field.size() + gt.size() + pred.size() + 2);
    joined.append(field);
    joined.push_back('\x1f');
    joined.append(normalize_text(gt));
    joined.push_back('\x1f');
    joined.append(normalize_text(pred));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(joined)));
    return std::string(buf);
}

}  // namespace

std::string_view judge_prompt_template() { return kPromptTemplate; }

std::string render_judge_prompt(const JudgeRequest& req) {
    std::string prompt(kPromptTemplate);
    replace_all(prompt, "<field_name>", escape_value(req.field_name));
    replace_all(prompt, "<ground_truth>", escape_value(req.ground_truth));
    replace_all(prompt, "<prediction>", escape_value(req.prediction));
    return prompt;
}

JudgeVerdict parse_judge_verdict(std::string_view response) {
    // Scan for balanced {...} slices and try each as JSON. Tolerates
    // markdown fences and prose around the object.
    for (size_t start = 0; start < response.size(); ++start) {
        if (response[start] != '{') continue;
        int depth = 0;
        bool in_string = false;
        for (size_t i = start; i < response.size(); ++i) {
            char c = response[i];
            if (in_string) {
                if (c == '\\')
                    ++i;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    json obj;
                    try {
                        obj = json::parse(response.substr(start, i - start + 1));
                    } catch (const json::exception&) {
                        break;  // resume scanning after this '{'
                    }
                    if (!obj.is_object()) break;
                    auto eq = obj.find("is_equivalent");
                    if (eq == obj.end()) break;
                    bool value;
                    if (eq->is_boolean()) {
                        value = eq->get<bool>();
                    } else if (eq->is_string()) {
                        std::string s = normalize_text(eq->get<std::string>());
                        if (s != "true" && s != "false") break;
                        value = s == "true";
                    } else {
                        break;
                    }
                    JudgeVerdict verdict;
                    verdict.is_equivalent = value;
                    verdict.score = value ? 1.0 : 0.0;
                    verdict.source = VerdictSource::RemoteJudge;
                    if (auto r = obj.find("reasoning"); r != obj.end() && r->is_string())
                        verdict.reasoning = r->get<std::string>();
                    if (auto s = obj.find("score"); s != obj.end() && s->is_number()) {
                        double graded = std::clamp(s->get<double>(), 0.0, 1.0);
                        // A graded score is honored only when consistent
                        // with the boolean verdict.
                        if ((graded >= 0.5) == value) verdict.score = graded;
                    }
                    return verdict;
                }
            }
        }
    }
    throw VerdictError("no parseable verdict object in response");
}

JudgeVerdict offline_judge(std::string_view gt, std::string_view pred,
                           const SimilarityWeights& w, EmbeddingProvider* provider) {
    double similarity = composite_similarity(gt, pred, w, provider);
    JudgeVerdict verdict;
    verdict.is_equivalent = similarity >= 0.75;
    verdict.score = verdict.is_equivalent ? 1.0 : 0.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "composite similarity %.4f", similarity);
    verdict.reasoning = buf;
    verdict.source = VerdictSource::OfflineFallback;
    return verdict;
}

JudgeOptions JudgeOptions::from_env() {
    JudgeOptions opts;
    if (const char* e = std::getenv("JUDGE_ENDPOINT")) opts.endpoint = e;
    if (const char* m = std::getenv("JUDGE_MODEL")) opts.model = m;
    if (const char* t = std::getenv("JUDGE_TIMEOUT_MS")) opts.timeout_ms = std::atoi(t);
    return opts;
}

Judge::Judge(JudgeOptions opts, SimilarityWeights offline_weights,
             EmbeddingProvider* offline_provider)
    : opts_(std::move(opts)),
      offline_weights_(offline_weights),
      offline_provider_(offline_provider) {
    if (opts_.cache_path.empty()) return;
    std::ifstream in(opts_.cache_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json entry = json::parse(line);
            JudgeVerdict v;
            v.is_equivalent = entry.at("eq").get<bool>();
            v.score = entry.value("score", v.is_equivalent ? 1.0 : 0.0);
            v.reasoning = entry.value("reasoning", std::string());
            v.source = VerdictSource::RemoteJudge;
            cache_[entry.at("key").get<std::string>()] = v;
        } catch (const json::exception&) {
            // skip corrupt lines, the cache is best-effort
        }
    }
}

std::optional<JudgeVerdict> Judge::cache_lookup(const std::string& key) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) return std::nullopt;
    JudgeVerdict v = it->second;
    v.source = VerdictSource::Cache;
    return v;
}

void Judge::cache_store(const std::string& key, const JudgeVerdict& verdict) {
    std::lock_guard<std::mutex> lock(mutex_);
    cache_[key] = verdict;
    if (opts_.cache_path.empty()) return;
    json entry = {
        {"key", key},
        {"eq", verdict.is_equivalent},
        {"score", verdict.score},
        {"reasoning", verdict.reasoning},
        {"src", std::string(to_string(verdict.source))},
        {"ts", static_cast<std::int64_t>(std::time(nullptr))},
    };
    std::ofstream out(opts_.cache_path, std::ios::app);
    out << entry.dump() << "\n";
}

std::optional<std::string> Judge::remote_ask(const std::string& prompt) {
    json body = {
        {"model", opts_.model},
        {"temperature", 0.0},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
    };
    for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(opts_.backoff_ms << (attempt - 1)));
        try {
            {
                std::lock_guard<std::mutex> lock(mutex_);
                ++remote_calls_;
            }
            std::string response = http_post_json(opts_.endpoint, "/v1/chat/completions",
                                                  body.dump(), opts_.timeout_ms);
            json parsed = json::parse(response);
            return parsed.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const std::exception&) {
            // transport or shape failure; retry then give up
        }
    }
    return std::nullopt;
}

JudgeVerdict Judge::judge(const FieldSpec& field, const std::string& gt,
                          const std::string& pred) {
    if (normalize_text(gt) == normalize_text(pred)) {
        JudgeVerdict v;
        v.is_equivalent = true;
        v.score = 1.0;
        v.reasoning = "normalized exact match";
        v.source = VerdictSource::ExactFilter;
        return v;
    }

    if (!opts_.endpoint.empty()) {
        std::string key = cache_key(field.name, gt, pred);
        if (auto hit = cache_lookup(key)) return *hit;

        JudgeRequest req{std::string(field.name), gt, pred};
        std::string prompt = render_judge_prompt(req);
        if (auto content = remote_ask(prompt)) {
            try {
                JudgeVerdict v = parse_judge_verdict(*content);
                cache_store(key, v);
                return v;
            } catch (const VerdictError&) {
                // one re-ask, then fall through to the offline heuristic
                if (auto retry = remote_ask(prompt)) {
                    try {
                        JudgeVerdict v = parse_judge_verdict(*retry);
                        cache_store(key, v);
                        return v;
                    } catch (const VerdictError&) {
                    }
                }
            }
        }
    }

    return offline_judge(gt, pred, offline_weights_, offline_provider_);
}

}  // namespace receval
