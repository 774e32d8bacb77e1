#include "receval/corpus.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace receval {

std::vector<CorpusDocument> parse_jsonl_text(std::string_view text) {
    std::vector<CorpusDocument> docs;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        // skip blank lines (trailing newline etc.)
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) {
                blank = false;
                break;
            }
        if (blank) continue;

        CorpusDocument doc;
        doc.line_no = line_no;
        try {
            doc.record = parse_record(line);
            doc.id = doc.record->id;
        } catch (const ParseError& e) {
            doc.parse_error = e.what();
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<CorpusDocument> load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_jsonl_text(buffer.str());
}

EvalEngine::EvalEngine(const EvalOptions& opts) {
    if (opts.embeddings == "offline" || opts.embeddings.empty()) {
        base_provider_ = std::make_unique<TrigramProvider>();
        active_provider_ = base_provider_.get();
    } else {
        base_provider_ = std::make_unique<HttpEmbeddingProvider>(
            opts.embeddings, opts.embed_model, opts.embed_timeout_ms);
        caching_ = std::make_unique<CachingProvider>(*base_provider_);
        active_provider_ = caching_.get();
    }
    judge_ = std::make_unique<Judge>(opts.judge, opts.weights, active_provider_);
    ctx_.weights = opts.weights;
    ctx_.provider = active_provider_;
    ctx_.judge = judge_.get();
    ctx_.match = opts.match;
}

std::vector<DocumentPair> pair_documents(const std::vector<CorpusDocument>& gold,
                                         const std::vector<CorpusDocument>& pred,
                                         bool broken_as_empty) {
    for (const auto& doc : gold)
        if (!doc.record)
            throw CorpusError("gold line " + std::to_string(doc.line_no) +
                              " does not parse: " + doc.parse_error);
    if (gold.size() != pred.size())
        throw CorpusError("document count mismatch: gold " +
                          std::to_string(gold.size()) + " vs pred " +
                          std::to_string(pred.size()));

    auto materialize_pred = [&](const CorpusDocument& doc) -> ExtractionRecord {
        if (doc.record) return *doc.record;
        if (!broken_as_empty)
            throw CorpusError("pred line " + std::to_string(doc.line_no) +
                              " does not parse: " + doc.parse_error +
                              " (use --broken-as-empty to score it as all-empty)");
        return empty_record();
    };

    bool all_ids = !gold.empty();
    for (const auto& doc : gold)
        if (doc.id.empty()) all_ids = false;
    for (const auto& doc : pred)
        if (doc.record && doc.id.empty()) all_ids = false;

    std::vector<DocumentPair> pairs;
    pairs.reserve(gold.size());

    if (all_ids) {
        std::unordered_map<std::string, const CorpusDocument*> pred_by_id;
        for (const auto& doc : pred) {
            std::string key = doc.record ? doc.id : "";
            if (!key.empty() && !pred_by_id.emplace(key, &doc).second)
                throw CorpusError("duplicate prediction id: " + key);
        }
        std::size_t broken_cursor = 0;
        std::vector<const CorpusDocument*> broken;
        for (const auto& doc : pred)
            if (!doc.record) broken.push_back(&doc);

        for (const auto& g : gold) {
            DocumentPair pair;
            pair.id = g.id;
            pair.gold = &*g.record;
            auto it = pred_by_id.find(g.id);
            if (it != pred_by_id.end()) {
                pair.pred = materialize_pred(*it->second);
                pred_by_id.erase(it);
            } else if (broken_cursor < broken.size()) {
                // a broken line has no id; consume them in order
                pair.pred = materialize_pred(*broken[broken_cursor++]);
            } else {
                throw CorpusError("no prediction for document id: " + g.id);
            }
            pairs.push_back(std::move(pair));
        }
    } else {
        for (std::size_t i = 0; i < gold.size(); ++i) {
            DocumentPair pair;
            pair.id = !gold[i].id.empty() ? gold[i].id
                                          : "line-" + std::to_string(gold[i].line_no);
            pair.gold = &*gold[i].record;
            pair.pred = materialize_pred(pred[i]);
            pairs.push_back(std::move(pair));
        }
    }
    return pairs;
}

namespace {

void dump_cost_matrices(const DocumentPair& pair, const ScoreContext& ctx,
                        const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto& specs = field_specs();
    for (int i = 0; i < kFieldCount; ++i) {
        const FieldSpec& spec = specs[static_cast<std::size_t>(i)];
        if (spec.shape == ValueShape::Scalar) continue;
        CostMatrix costs;
        if (spec.shape == ValueShape::ItemList) {
            costs = build_cost_matrix(pair.pred.items(i), pair.gold->items(i),
                                      ctx.weights, ctx.provider, ctx.match);
        } else {
            costs = build_text_cost_matrix(pair.pred.texts(i), pair.gold->texts(i),
                                           ctx.weights, ctx.provider);
        }
        if (costs.rows == 0 || costs.cols == 0) continue;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < costs.rows; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < costs.cols; ++c) row.push_back(costs.at(r, c));
            rows.push_back(std::move(row));
        }
        nlohmann::json doc = {{"doc", pair.id},
                              {"field", std::string(spec.name)},
                              {"rows_pred", costs.rows},
                              {"cols_gold", costs.cols},
                              {"costs", std::move(rows)}};
        std::ofstream out(fs::path(dir) /
                          (pair.id + "_" + std::string(spec.name) + ".json"));
        out << doc.dump(2) << "\n";
    }
}

}  // namespace

EvalResult evaluate_pairs(const std::vector<DocumentPair>& pairs, EvalEngine& engine,
                          const EvalOptions& opts) {
    EvalResult result;
    result.outcomes.resize(pairs.size());
    result.doc_ids.reserve(pairs.size());
    for (const auto& pair : pairs) result.doc_ids.push_back(pair.id);

    const ScoreContext& ctx = engine.context();
    int workers = std::max(1, opts.workers);
    if (workers == 1 || pairs.size() < 2) {
        for (std::size_t i = 0; i < pairs.size(); ++i)
            result.outcomes[i] = score_document(*pairs[i].gold, pairs[i].pred, ctx);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= pairs.size()) return;
                try {
                    result.outcomes[i] =
                        score_document(*pairs[i].gold, pairs[i].pred, ctx);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> threads;
        for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    if (!opts.dump_costs_dir.empty())
        for (const auto& pair : pairs)
            dump_cost_matrices(pair, ctx, opts.dump_costs_dir);

    result.report = aggregate_metrics(result.outcomes, opts.metrics);
    return result;
}

EvalResult evaluate_corpus(const std::vector<CorpusDocument>& gold,
                           const std::vector<CorpusDocument>& pred,
                           const EvalOptions& opts) {
    auto pairs = pair_documents(gold, pred, opts.broken_as_empty);
    EvalEngine engine(opts);
    return evaluate_pairs(pairs, engine, opts);
}

std::map<std::string, EvaluationReport> sensitivity_sweep(
    const std::vector<CorpusDocument>& gold, const std::vector<CorpusDocument>& pred,
    const std::vector<std::pair<std::string, SimilarityWeights>>& configs,
    const EvalOptions& base_opts) {
    if (configs.empty()) throw CorpusError("sensitivity sweep needs at least 1 config");
    std::map<std::string, EvaluationReport> reports;
    for (const auto& [name, weights] : configs) {
        EvalOptions opts = base_opts;
        opts.weights = weights;
        reports[name] = evaluate_corpus(gold, pred, opts).report;
    }
    return reports;
}

}  // namespace receval
