// receval - schema-constrained extraction scorer, reward engine and QC gate.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "receval/corpus.hpp"
#include "receval/qc.hpp"
#include "receval/report.hpp"
#include "receval/reward.hpp"

namespace {

using namespace receval;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRejected = 2;

struct CommonArgs {
    std::string weights_tag;
    std::vector<double> weights_explicit;
    std::string embeddings = "offline";
    std::string embed_model;
    int embed_timeout_ms = 20000;
    std::string judge_endpoint;
    std::string judge_model = "judge";
    int judge_timeout_ms = 20000;
    std::string judge_cache;
    double amount_tolerance = 0.05;
    double accept_threshold = 0.25;
    bool broken_as_empty = false;
    bool macro = false;
    std::string tn_mode = "exclude";
    int workers = 1;
    std::string dump_costs;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->fallthrough();
    cmd->add_option("--weights", args.weights_tag,
                    "weight config tag (A, B, C or D)");
    cmd->add_option("--weights-explicit", args.weights_explicit,
                    "explicit alpha,beta,gamma,delta (conflicts with --weights)")
        ->delimiter(',')
        ->expected(4);
    cmd->add_option("--embeddings", args.embeddings,
                    "'offline' or the base URL of an embeddings endpoint")
        ->envname("RECEVAL_EMBEDDINGS");
    cmd->add_option("--embed-model", args.embed_model, "embeddings model name")
        ->envname("RECEVAL_EMBED_MODEL");
    cmd->add_option("--embed-timeout-ms", args.embed_timeout_ms, "embeddings timeout");
    cmd->add_option("--judge-endpoint", args.judge_endpoint,
                    "chat-completions base URL for the semantic judge")
        ->envname("JUDGE_ENDPOINT");
    cmd->add_option("--judge-model", args.judge_model, "judge model name")
        ->envname("JUDGE_MODEL");
    cmd->add_option("--judge-timeout-ms", args.judge_timeout_ms, "judge timeout")
        ->envname("JUDGE_TIMEOUT_MS");
    cmd->add_option("--judge-cache", args.judge_cache, "judge verdict cache file");
    cmd->add_option("--amount-tolerance", args.amount_tolerance,
                    "hard-constraint tolerance for detail amounts");
    cmd->add_option("--accept-threshold", args.accept_threshold,
                    "cost acceptance threshold for list matches");
    cmd->add_flag("--broken-as-empty", args.broken_as_empty,
                  "score unparseable prediction lines as all-empty records");
    cmd->add_flag("--macro", args.macro, "macro-average sub-task and overall F1");
    cmd->add_option("--tn-mode", args.tn_mode, "'exclude' (default) or 'include'")
        ->check(CLI::IsMember({"exclude", "include"}));
    cmd->add_option("--workers", args.workers, "scoring worker pool size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--dump-costs", args.dump_costs,
                    "directory for per-document cost matrix dumps");
}

EvalOptions make_options(const CommonArgs& args) {
    EvalOptions opts;
    if (!args.weights_tag.empty() && !args.weights_explicit.empty())
        throw CLI::ValidationError("--weights and --weights-explicit conflict");
    if (!args.weights_explicit.empty()) {
        opts.weights = {args.weights_explicit[0], args.weights_explicit[1],
                        args.weights_explicit[2], args.weights_explicit[3]};
    } else if (!args.weights_tag.empty()) {
        opts.weights = SimilarityWeights::named_config(args.weights_tag);
    }
    opts.weights.validate();
    opts.embeddings = args.embeddings;
    opts.embed_model = args.embed_model;
    opts.embed_timeout_ms = args.embed_timeout_ms;
    opts.judge.endpoint = args.judge_endpoint;
    opts.judge.model = args.judge_model;
    opts.judge.timeout_ms = args.judge_timeout_ms;
    opts.judge.cache_path = args.judge_cache;
    opts.match.amount_tolerance = args.amount_tolerance;
    opts.match.accept_threshold = args.accept_threshold;
    opts.broken_as_empty = args.broken_as_empty;
    opts.metrics.macro = args.macro;
    opts.metrics.tn_mode = args.tn_mode == "include" ? TnMode::Include : TnMode::Exclude;
    opts.workers = args.workers;
    opts.dump_costs_dir = args.dump_costs;
    return opts;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorpusError("cannot write file: " + path);
    out << content;
}

int cmd_evaluate(const CommonArgs& common, const std::string& gold_path,
                 const std::string& pred_path, const std::string& out_path,
                 const std::string& table_path) {
    EvalOptions opts = make_options(common);
    auto gold = load_jsonl(gold_path);
    auto pred = load_jsonl(pred_path);
    EvalResult result = evaluate_corpus(gold, pred, opts);

    std::string table = report_table(result.report);
    std::cout << table;
    if (!out_path.empty())
        write_file(out_path, report_to_json(result.report).dump(2) + "\n");
    if (!table_path.empty()) write_file(table_path, table);
    return kExitOk;
}

int cmd_sweep(const CommonArgs& common, const std::string& gold_path,
              const std::vector<std::string>& pred_paths, std::string configs_csv,
              const std::string& out_dir) {
    EvalOptions base = make_options(common);
    auto gold = load_jsonl(gold_path);

    std::vector<std::pair<std::string, SimilarityWeights>> configs;
    std::stringstream ss(configs_csv);
    std::string tag;
    while (std::getline(ss, tag, ',')) {
        if (tag.empty()) continue;
        configs.emplace_back(tag, SimilarityWeights::named_config(tag));
    }
    if (configs.empty()) throw CorpusError("no weight configs given");

    // grid: prediction sets x configs
    std::map<std::string, std::map<std::string, double>> grid;
    json all = json::object();
    for (const auto& pred_path : pred_paths) {
        auto pred = load_jsonl(pred_path);
        auto reports = sensitivity_sweep(gold, pred, configs, base);
        for (const auto& [config_name, report] : reports) {
            grid[pred_path][config_name] = report.overall.f1;
            all[pred_path][config_name] = report_to_json(report);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::string stem =
                    std::filesystem::path(pred_path).stem().string();
                write_file(out_dir + "/" + stem + "_config" + config_name + ".json",
                           report_to_json(report).dump(2) + "\n");
            }
        }
    }

    std::cout << "overall F1 by prediction set and config\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-40s", "prediction set");
    std::cout << line;
    for (const auto& [name, _] : configs) {
        std::snprintf(line, sizeof(line), " %9s", ("cfg " + name).c_str());
        std::cout << line;
    }
    std::cout << "\n";
    for (const auto& [pred_path, row] : grid) {
        std::snprintf(line, sizeof(line), "%-40s", pred_path.c_str());
        std::cout << line;
        for (const auto& [name, _] : configs) {
            std::snprintf(line, sizeof(line), " %9.4f", row.at(name));
            std::cout << line;
        }
        std::cout << "\n";
    }

    // per-config ranking of prediction sets, best first
    std::cout << "\nranking per config\n";
    for (const auto& [name, _] : configs) {
        std::vector<std::pair<double, std::string>> order;
        for (const auto& [pred_path, row] : grid)
            order.emplace_back(-row.at(name), pred_path);
        std::stable_sort(order.begin(), order.end());
        std::cout << "cfg " << name << ":";
        for (const auto& [negf1, pred_path] : order)
            std::cout << " " << pred_path << " (" << -negf1 << ")";
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_errors(const CommonArgs& common, const std::string& gold_path,
               const std::string& pred_path, const std::string& baseline_path,
               int top_k, const std::string& out_path) {
    EvalOptions opts = make_options(common);
    auto gold = load_jsonl(gold_path);
    auto pred = load_jsonl(pred_path);
    EvalResult treated = evaluate_corpus(gold, pred, opts);

    if (!baseline_path.empty()) {
        auto baseline_docs = load_jsonl(baseline_path);
        EvalResult baseline = evaluate_corpus(gold, baseline_docs, opts);
        auto rows = fp_delta_report(baseline.report, treated.report);
        std::string table = format_fp_delta_table(rows);
        std::cout << table;
        if (!out_path.empty()) write_file(out_path, table);
        return kExitOk;
    }

    std::cout << "error histogram\n";
    for (const auto& [category, count] : treated.report.error_histogram)
        std::cout << "  " << category << ": " << count << "\n";

    // rank fields by total errors (wrong TP + FP + FN)
    std::vector<std::pair<double, std::string>> ranking;
    for (const auto& [field, m] : treated.report.per_field)
        ranking.emplace_back(-(m.tp_wrong + m.fp + m.fn), field);
    std::stable_sort(ranking.begin(), ranking.end());
    if (top_k > static_cast<int>(ranking.size()) || top_k <= 0)
        top_k = static_cast<int>(ranking.size());

    std::cout << "\ntop " << top_k << " error-prone fields\n";
    for (int i = 0; i < top_k; ++i)
        std::cout << "  " << ranking[static_cast<std::size_t>(i)].second << ": "
                  << -ranking[static_cast<std::size_t>(i)].first << "\n";

    if (!out_path.empty()) {
        json doc = {{"error_histogram", treated.report.error_histogram},
                    {"fp_by_field", treated.report.fp_by_field}};
        write_file(out_path, doc.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_qc(const CommonArgs& common, const std::string& batch_path,
           const std::string& reference_path, const std::string& out_path,
           const std::string& out_json_path, double tolerance, double threshold) {
    auto batch_docs = load_jsonl(batch_path);
    std::vector<ExtractionRecord> batch;
    std::vector<QcFinding> findings;
    for (const auto& doc : batch_docs) {
        if (!doc.record)
            throw CorpusError("batch line " + std::to_string(doc.line_no) +
                              " does not parse: " + doc.parse_error);
        batch.push_back(*doc.record);
        auto record_findings = check_record(*doc.record, tolerance);
        findings.insert(findings.end(), record_findings.begin(), record_findings.end());
    }

    std::optional<BatchVerdict> verdict;
    if (!reference_path.empty()) {
        auto reference_docs = load_jsonl(reference_path);
        std::vector<ExtractionRecord> reference;
        for (const auto& doc : reference_docs) {
            if (!doc.record)
                throw CorpusError("reference line " + std::to_string(doc.line_no) +
                                  " does not parse: " + doc.parse_error);
            reference.push_back(*doc.record);
        }
        EvalOptions opts = make_options(common);
        opts.judge.endpoint.clear();  // QC stays deterministic
        EvalEngine engine(opts);
        verdict = batch_accept(batch, reference, engine.context(), threshold);
    }

    std::string report = audit_report(findings, verdict ? &*verdict : nullptr);
    std::cout << report;
    if (!out_path.empty()) write_file(out_path, report);
    if (!out_json_path.empty())
        write_file(out_json_path, audit_report_json(findings, verdict ? &*verdict : nullptr));
    if (verdict && !verdict->accepted) return kExitRejected;
    return kExitOk;
}

int cmd_validate(const std::string& in_path) {
    auto docs = load_jsonl(in_path);
    long broken = 0;
    for (const auto& doc : docs) {
        if (!doc.record) {
            ++broken;
            std::cout << "line " << doc.line_no << ": " << doc.parse_error << "\n";
        }
    }
    std::cout << docs.size() << " documents, " << broken << " unparseable\n";
    return broken == 0 ? kExitOk : kExitError;
}

int cmd_reward_serve(const CommonArgs& common, double lambda_tn, double lambda_fp,
                     double lambda_fn, const std::string& list_mode,
                     std::optional<double> malformed_penalty) {
    EvalOptions opts = make_options(common);
    EvalEngine engine(opts);

    RewardConfig cfg;
    cfg.lambda_tn = lambda_tn;
    cfg.lambda_fp = lambda_fp;
    cfg.lambda_fn = lambda_fn;
    cfg.weights = opts.weights;
    cfg.list_score_mode =
        list_mode == "binary" ? ListScoreMode::Binary : ListScoreMode::ItemF1;
    cfg.malformed_penalty = malformed_penalty;

    const auto& specs = field_specs();
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        json response;
        json request_id = nullptr;
        try {
            json request = json::parse(line);
            if (request.is_object() && request.contains("id")) request_id = request["id"];
            response["id"] = request_id;
            auto record_of = [&](const char* key) -> ExtractionRecord {
                const json& value = request.at(key);
                if (value.is_string()) return parse_record(value.get<std::string>());
                return parse_record(value.dump());
            };
            ExtractionRecord gold = record_of("gold");
            ExtractionRecord pred;
            bool malformed = false;
            try {
                pred = record_of("pred");
            } catch (const ParseError&) {
                malformed = true;  // scored as all-empty unless a penalty is set
                pred = empty_record();
            }
            RecordReward reward = record_reward(gold, pred, cfg, engine.context());
            if (malformed && cfg.malformed_penalty)
                reward.reward = *cfg.malformed_penalty;
            if (malformed) response["malformed"] = true;
            response["reward"] = reward.reward;
            json fields = json::array();
            for (int i = 0; i < kFieldCount; ++i) {
                const auto& outcome = reward.outcomes[static_cast<std::size_t>(i)];
                fields.push_back({
                    {"field", std::string(specs[static_cast<std::size_t>(i)].name)},
                    {"state", std::string(to_string(outcome.state))},
                    {"score", outcome.score},
                    {"reward", reward.field_rewards[static_cast<std::size_t>(i)]},
                });
            }
            response["fields"] = std::move(fields);
        } catch (const std::exception& e) {
            response = {{"id", request_id}, {"error", e.what()}};
        }
        std::cout << response.dump() << "\n" << std::flush;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"schema-constrained extraction scorer and reward engine"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML config file");

    CommonArgs common;

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
    std::string gold_path, pred_path, out_path, table_path;
    evaluate->add_option("--gold", gold_path, "gold JSONL")->required();
    evaluate->add_option("--pred", pred_path, "prediction JSONL")->required();
    evaluate->add_option("--out", out_path, "report JSON output path");
    evaluate->add_option("--table", table_path, "report table output path");
    add_common_options(evaluate, common);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "re-score under weight configs A-D");
    std::string sweep_gold, sweep_configs = "A,B,C,D", sweep_out_dir;
    std::vector<std::string> sweep_preds;
    sweep->add_option("--gold", sweep_gold, "gold JSONL")->required();
    sweep->add_option("--pred", sweep_preds, "prediction JSONL (repeatable)")
        ->required();
    sweep->add_option("--configs", sweep_configs, "comma-separated config tags");
    sweep->add_option("--out-dir", sweep_out_dir, "directory for per-config reports");
    add_common_options(sweep, common);

    // errors
    auto* errors = app.add_subcommand("errors", "error histogram and FP deltas");
    std::string err_gold, err_pred, err_baseline, err_out;
    int top_k = 10;
    errors->add_option("--gold", err_gold, "gold JSONL")->required();
    errors->add_option("--pred", err_pred, "prediction JSONL")->required();
    errors->add_option("--baseline", err_baseline,
                       "baseline prediction JSONL (enables FP-delta mode)");
    errors->add_option("--top", top_k, "how many error-prone fields to list");
    errors->add_option("--out", err_out, "output path");
    add_common_options(errors, common);

    // qc
    auto* qc = app.add_subcommand("qc", "annotation quality control");
    std::string qc_batch, qc_reference, qc_out, qc_out_json;
    double qc_tolerance = 0.05, qc_threshold = 0.97;
    qc->add_option("--batch", qc_batch, "batch JSONL")->required();
    qc->add_option("--reference", qc_reference, "verified reference JSONL");
    qc->add_option("--out", qc_out, "audit report output path");
    qc->add_option("--out-json", qc_out_json, "machine-readable audit output path");
    qc->add_option("--tolerance", qc_tolerance, "cross-field sum tolerance");
    qc->add_option("--threshold", qc_threshold, "per-field acceptance threshold");
    add_common_options(qc, common);

    // validate
    auto* validate = app.add_subcommand("validate", "check a JSONL file parses");
    std::string validate_in;
    validate->fallthrough();
    validate->add_option("--in", validate_in, "JSONL file")->required();

    // reward-serve
    auto* serve = app.add_subcommand(
        "reward-serve", "line protocol: {id,gold,pred} in, {id,reward,fields} out");
    serve->alias("reward");  // also the [reward] config-file section
    double lambda_tn = 0.3, lambda_fp = -0.5, lambda_fn = 0.0;
    std::string list_mode = "item_f1";
    std::optional<double> malformed_penalty;
    serve->add_option("--lambda-tn", lambda_tn, "true-negative reward");
    serve->add_option("--lambda-fp", lambda_fp, "false-positive reward");
    serve->add_option("--lambda-fn", lambda_fn, "false-negative reward");
    serve->add_option("--list-score-mode", list_mode, "'item_f1' or 'binary'")
        ->check(CLI::IsMember({"item_f1", "binary"}));
    serve->add_option("--malformed-penalty", malformed_penalty,
                      "flat reward for unparseable completions (default: score "
                      "them as all-empty)");
    add_common_options(serve, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    try {
        if (evaluate->parsed())
            return cmd_evaluate(common, gold_path, pred_path, out_path, table_path);
        if (sweep->parsed())
            return cmd_sweep(common, sweep_gold, sweep_preds, sweep_configs,
                             sweep_out_dir);
        if (errors->parsed())
            return cmd_errors(common, err_gold, err_pred, err_baseline, top_k, err_out);
        if (qc->parsed())
            return cmd_qc(common, qc_batch, qc_reference, qc_out, qc_out_json,
                          qc_tolerance, qc_threshold);
        if (validate->parsed()) return cmd_validate(validate_in);
        if (serve->parsed())
            return cmd_reward_serve(common, lambda_tn, lambda_fp, lambda_fn, list_mode,
                                    malformed_penalty);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
