#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "receval/judge.hpp"
#include "receval/reward.hpp"
#include "receval/schema.hpp"
#include "receval/scoring.hpp"

namespace receval {

struct CorpusError : std::runtime_error {
    explicit CorpusError(const std::string& reason) : std::runtime_error(reason) {}
};

/// One JSONL line: either a parsed record or the parse failure.
struct CorpusDocument {
    std::size_t line_no = 0;
    std::string id;
    std::optional<ExtractionRecord> record;
    std::string parse_error;
};

std::vector<CorpusDocument> load_jsonl(const std::string& path);
std::vector<CorpusDocument> parse_jsonl_text(std::string_view text);

struct EvalOptions {
    SimilarityWeights weights = SimilarityWeights::named_config('A');
    std::string embeddings = "offline";  // "offline" or http base URL
    std::string embed_model;
    int embed_timeout_ms = 20000;
    JudgeOptions judge;
    MatchOptions match;
    MetricsOptions metrics;
    bool broken_as_empty = false;
    int workers = 1;
    std::string dump_costs_dir;
};

/// Owns the provider/judge stack for one evaluation configuration.
class EvalEngine {
public:
    explicit EvalEngine(const EvalOptions& opts);

    const ScoreContext& context() const { return ctx_; }
    Judge& judge() { return *judge_; }
    EmbeddingProvider& provider() { return *active_provider_; }

private:
    std::unique_ptr<EmbeddingProvider> base_provider_;
    std::unique_ptr<CachingProvider> caching_;
    EmbeddingProvider* active_provider_ = nullptr;
    std::unique_ptr<Judge> judge_;
    ScoreContext ctx_;
};

struct DocumentPair {
    std::string id;
    const ExtractionRecord* gold = nullptr;
    ExtractionRecord pred;  // materialized (may be the empty record)
};

/// Pairs gold and prediction documents by `id` when every line carries
/// one, else by line number. Count mismatch or a missing counterpart is
/// a hard error; broken prediction lines become the all-empty record
/// only when broken_as_empty is set.
std::vector<DocumentPair> pair_documents(const std::vector<CorpusDocument>& gold,
                                         const std::vector<CorpusDocument>& pred,
                                         bool broken_as_empty);

struct EvalResult {
    EvaluationReport report;
    std::vector<DocumentOutcomes> outcomes;  // per document, paired order
    std::vector<std::string> doc_ids;
};

/// Scores every pair (optionally across a worker pool; results are
/// deterministic and independent of the pool size) and aggregates.
EvalResult evaluate_pairs(const std::vector<DocumentPair>& pairs, EvalEngine& engine,
                          const EvalOptions& opts);

EvalResult evaluate_corpus(const std::vector<CorpusDocument>& gold,
                           const std::vector<CorpusDocument>& pred,
                           const EvalOptions& opts);

/// Re-scores the corpus under each weight config. Exact and numeric
/// fields are unaffected by construction; only similarity-backed
/// comparators move.
std::map<std::string, EvaluationReport> sensitivity_sweep(
    const std::vector<CorpusDocument>& gold, const std::vector<CorpusDocument>& pred,
    const std::vector<std::pair<std::string, SimilarityWeights>>& configs,
    const EvalOptions& base_opts);

}  // namespace receval
