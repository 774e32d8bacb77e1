#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "receval/schema.hpp"
#include "receval/similarity.hpp"

namespace receval {

struct VerdictError : std::runtime_error {
    explicit VerdictError(const std::string& reason) : std::runtime_error(reason) {}
};

enum class VerdictSource { ExactFilter, RemoteJudge, OfflineFallback, Cache };

std::string_view to_string(VerdictSource s);

struct JudgeVerdict {
    bool is_equivalent = false;
    double score = 0.0;  // 1/0 under the boolean mapping unless graded
    std::string reasoning;
    VerdictSource source = VerdictSource::OfflineFallback;
};

struct JudgeRequest {
    std::string field_name;
    std::string ground_truth;
    std::string prediction;
};

/// The equivalence-judgment prompt with <field_name>, <ground_truth> and
/// <prediction> substituted. Byte-exact against the shipped template;
/// double quotes and backslashes in values are escaped.
std::string render_judge_prompt(const JudgeRequest& req);

/// The raw prompt template (placeholders unexpanded).
std::string_view judge_prompt_template();

/// Extracts the first JSON object containing a boolean "is_equivalent"
/// from a possibly prose- or fence-wrapped response. An optional numeric
/// "score" is honored when consistent with the boolean. Throws
/// VerdictError when no verdict can be extracted.
JudgeVerdict parse_judge_verdict(std::string_view response);

/// Deterministic fallback: equivalent iff composite similarity >= 0.75
/// (the complement of the 0.25 match-acceptance cost threshold).
JudgeVerdict offline_judge(std::string_view gt, std::string_view pred,
                           const SimilarityWeights& w, EmbeddingProvider* provider);

struct JudgeOptions {
    std::string endpoint;     // empty -> offline only
    std::string model = "judge";
    int timeout_ms = 20000;
    int max_retries = 2;      // transport retries before falling back
    int backoff_ms = 200;     // doubled per retry
    std::string cache_path;   // empty -> in-memory only

    /// Reads JUDGE_ENDPOINT, JUDGE_MODEL, JUDGE_TIMEOUT_MS.
    static JudgeOptions from_env();
};

/// Cascading judge for Type C fields: normalized exact filter, then the
/// remote judge (with retries and one re-ask on an unparseable verdict),
/// then the offline heuristic. Remote verdicts are cached by
/// (field, normalize(gt), normalize(pred)); offline verdicts are not
/// cached because they depend on the active weight config.
class Judge {
public:
    Judge(JudgeOptions opts, SimilarityWeights offline_weights,
          EmbeddingProvider* offline_provider);

    JudgeVerdict judge(const FieldSpec& field, const std::string& gt,
                       const std::string& pred);

    long remote_calls() const { return remote_calls_; }
    bool remote_configured() const { return !opts_.endpoint.empty(); }

private:
    std::optional<JudgeVerdict> cache_lookup(const std::string& key);
    void cache_store(const std::string& key, const JudgeVerdict& verdict);
    std::optional<std::string> remote_ask(const std::string& prompt);

    JudgeOptions opts_;
    SimilarityWeights offline_weights_;
    EmbeddingProvider* offline_provider_;
    std::mutex mutex_;
    std::unordered_map<std::string, JudgeVerdict> cache_;
    long remote_calls_ = 0;
};

}  // namespace receval
