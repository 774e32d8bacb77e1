// Python bindings for the scoring, matching and reward surfaces. Records
// cross the boundary as JSON text or dicts; reports come back as dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "receval/corpus.hpp"
#include "receval/qc.hpp"
#include "receval/report.hpp"
#include "receval/reward.hpp"

namespace py = pybind11;
using namespace receval;
using nlohmann::json;

namespace {

// Shared offline stack; the bindings are evaluation-only and deterministic.
struct OfflineStack {
    SimilarityWeights weights;
    TrigramProvider provider;
    Judge judge;
    ScoreContext ctx;

    explicit OfflineStack(const SimilarityWeights& w)
        : weights(w), judge(JudgeOptions{}, w, &provider) {
        ctx.weights = weights;
        ctx.provider = &provider;
        ctx.judge = &judge;
    }
};

SimilarityWeights weights_from(py::object spec) {
    if (py::isinstance<py::str>(spec))
        return SimilarityWeights::named_config(spec.cast<std::string>());
    auto tuple = spec.cast<std::vector<double>>();
    if (tuple.size() != 4)
        throw py::value_error("weights must be a config tag or 4 numbers");
    SimilarityWeights w{tuple[0], tuple[1], tuple[2], tuple[3]};
    w.validate();
    return w;
}

std::string record_text(py::object doc) {
    if (py::isinstance<py::str>(doc)) return doc.cast<std::string>();
    py::module_ json_mod = py::module_::import("json");
    return json_mod.attr("dumps")(doc).cast<std::string>();
}

py::object json_to_py(const json& j) {
    py::module_ json_mod = py::module_::import("json");
    return json_mod.attr("loads")(j.dump());
}

py::dict outcome_to_dict(const FieldOutcome& o) {
    py::dict d;
    d["field"] = std::string(field_specs()[size_t(o.field)].name);
    d["state"] = std::string(to_string(o.state));
    d["score"] = o.score;
    if (o.error) d["error"] = std::string(to_string(*o.error));
    py::dict items;
    items["matched"] = o.items.matched;
    items["fp_items"] = o.items.fp_items;
    items["fn_items"] = o.items.fn_items;
    d["items"] = items;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Schema-constrained extraction scoring and reward shaping";

    py::register_exception<ParseError>(m, "RecordParseError", PyExc_ValueError);
    py::register_exception<AmountError>(m, "AmountParseError", PyExc_ValueError);

    m.def("normalize_text", &normalize_text, py::arg("text"),
          py::arg("collapse_inner") = true);

    m.def(
        "parse_amount",
        [](const std::string& text) -> py::object {
            Amount a = Amount::parse(text);
            if (a.is_absent()) return py::none();
            return py::float_(a.value());
        },
        py::arg("text"), "Parse a monetary string; None for empty input.");

    m.def("levenshtein_ratio", &levenshtein_ratio);
    m.def("token_sort_similarity", &token_sort_similarity);
    m.def("lcs_ratio", &lcs_ratio);

    m.def(
        "composite_similarity",
        [](const std::string& a, const std::string& b, py::object weights) {
            SimilarityWeights w = weights_from(weights);
            TrigramProvider provider;
            return composite_similarity(a, b, w, &provider);
        },
        py::arg("a"), py::arg("b"), py::arg("weights") = "A",
        "Weighted similarity with the offline embedding provider.");

    m.def(
        "named_config",
        [](const std::string& tag) {
            auto w = SimilarityWeights::named_config(tag);
            return py::make_tuple(w.alpha, w.beta, w.gamma, w.delta);
        },
        py::arg("tag"));

    m.def("field_specs", [] {
        py::list out;
        for (const auto& spec : field_specs()) {
            py::dict d;
            d["name"] = std::string(spec.name);
            d["category"] = std::string(to_string(spec.category));
            d["metric"] = std::string(to_string(spec.metric));
            out.append(d);
        }
        return out;
    });

    m.def(
        "parse_record",
        [](py::object doc) { return serialize_record(parse_record(record_text(doc))); },
        py::arg("document"),
        "Parse one document (text or dict); returns the canonical JSON form.");

    m.def(
        "check_record",
        [](py::object doc, double tolerance) {
            auto findings = check_record(parse_record(record_text(doc)), tolerance);
            py::list out;
            for (const auto& f : findings) {
                py::dict d;
                d["field"] = f.field;
                d["rule"] = std::string(to_string(f.rule));
                d["detail"] = f.detail;
                out.append(d);
            }
            return out;
        },
        py::arg("document"), py::arg("tolerance") = 0.05);

    m.def(
        "match_text_lists",
        [](const std::vector<std::string>& pred, const std::vector<std::string>& gold,
           py::object weights) {
            TrigramProvider provider;
            auto result = evaluate_text_list(pred, gold, weights_from(weights), &provider);
            py::list pairs;
            for (const auto& p : result.pairs)
                pairs.append(py::make_tuple(p.pred, p.gold, p.cost));
            py::dict out;
            out["pairs"] = pairs;
            out["unmatched_pred"] = result.unmatched_pred;
            out["unmatched_gold"] = result.unmatched_gold;
            return out;
        },
        py::arg("pred"), py::arg("gold"), py::arg("weights") = "A");

    m.def(
        "record_reward",
        [](py::object gold, py::object pred, double lambda_tn, double lambda_fp,
           double lambda_fn, py::object weights, bool broken_as_empty,
           std::optional<double> malformed_penalty) {
            RewardConfig cfg;
            cfg.lambda_tn = lambda_tn;
            cfg.lambda_fp = lambda_fp;
            cfg.lambda_fn = lambda_fn;
            cfg.weights = weights_from(weights);
            cfg.malformed_penalty = malformed_penalty;
            OfflineStack stack(cfg.weights);

            ExtractionRecord gold_rec = parse_record(record_text(gold));
            ExtractionRecord pred_rec;
            bool malformed = false;
            try {
                pred_rec = parse_record(record_text(pred));
            } catch (const ParseError&) {
                if (!broken_as_empty && !malformed_penalty) throw;
                malformed = true;
                pred_rec = empty_record();
            }
            auto result = record_reward(gold_rec, pred_rec, cfg, stack.ctx);
            if (malformed && cfg.malformed_penalty)
                result.reward = *cfg.malformed_penalty;
            py::dict out;
            out["reward"] = result.reward;
            out["malformed"] = malformed;
            py::list fields;
            for (int i = 0; i < kFieldCount; ++i) {
                py::dict f = outcome_to_dict(result.outcomes[size_t(i)]);
                f["reward"] = result.field_rewards[size_t(i)];
                fields.append(f);
            }
            out["fields"] = fields;
            return out;
        },
        py::arg("gold"), py::arg("pred"), py::arg("lambda_tn") = 0.3,
        py::arg("lambda_fp") = -0.5, py::arg("lambda_fn") = 0.0,
        py::arg("weights") = "A", py::arg("broken_as_empty") = true,
        py::arg("malformed_penalty") = py::none(),
        "Confusion-shaped reward for one (gold, prediction) pair.");

    m.def(
        "group_advantages",
        [](const std::vector<double>& rewards, bool scale_by_std) {
            return group_advantages(rewards, scale_by_std);
        },
        py::arg("rewards"), py::arg("scale_by_std") = true);

    m.def(
        "score_pair",
        [](py::object gold, py::object pred, py::object weights) {
            OfflineStack stack(weights_from(weights));
            auto outcomes = score_document(parse_record(record_text(gold)),
                                           parse_record(record_text(pred)), stack.ctx);
            py::list out;
            for (const auto& o : outcomes) out.append(outcome_to_dict(o));
            return out;
        },
        py::arg("gold"), py::arg("pred"), py::arg("weights") = "A",
        "Per-field confusion states and scores for one pair.");

    m.def(
        "evaluate_files",
        [](const std::string& gold_path, const std::string& pred_path,
           py::object weights, int workers, bool broken_as_empty) {
            EvalOptions opts;
            opts.weights = weights_from(weights);
            opts.workers = workers;
            opts.broken_as_empty = broken_as_empty;
            auto result =
                evaluate_corpus(load_jsonl(gold_path), load_jsonl(pred_path), opts);
            return json_to_py(report_to_json(result.report));
        },
        py::arg("gold_path"), py::arg("pred_path"), py::arg("weights") = "A",
        py::arg("workers") = 1, py::arg("broken_as_empty") = false,
        "Evaluate two JSONL files with offline providers; returns the report.");

    m.attr("__version__") = "0.1.0";
}
