#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin() {
    const char* b = std::getenv("RECEVAL_BIN");
    REQUIRE(b != nullptr);
    return b;
}

fs::path workdir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "receval_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args, const std::string& stdin_text = "") {
    fs::path out_path = workdir() / "stdout.txt";
    fs::path err_path = workdir() / "stderr.txt";
    std::string command = bin() + " " + args;
    if (!stdin_text.empty()) {
        fs::path in_path = workdir() / "stdin.txt";
        std::ofstream(in_path) << stdin_text;
        command += " < " + in_path.string();
    }
    command += " > " + out_path.string() + " 2> " + err_path.string();
    int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WEXITSTATUS(status);
    result.out = testsupport::read_file(out_path.string());
    result.err = testsupport::read_file(err_path.string());
    return result;
}

std::string fixture_path(const std::string& name) {
    return testsupport::fixtures_dir() + "/" + name;
}

}  // namespace

TEST_CASE("evaluate produces the pinned fixture score") {
    fs::path report_path = workdir() / "report.json";
    fs::path costs_dir = workdir() / "costs";
    auto result = run("evaluate --gold " + fixture_path("gold_small.jsonl") +
                      " --pred " + fixture_path("pred_small.jsonl") +
                      " --out " + report_path.string() +
                      " --dump-costs " + costs_dir.string());
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("Overall") != std::string::npos);
    CHECK(result.out.find("Structure") != std::string::npos);
    CHECK(fs::exists(costs_dir / "doc-1_detail.json"));

    json report = json::parse(testsupport::read_file(report_path.string()));
    // hand-derived: pooled TPc=73, TPw=2, FP=2, FN=1 -> F1 = 146/153
    CHECK(report["overall"]["f1"].get<double>() == doctest::Approx(146.0 / 153.0));
    CHECK(report["overall"]["precision"].get<double>() == doctest::Approx(73.0 / 77.0));
    CHECK(report["overall"]["recall"].get<double>() == doctest::Approx(73.0 / 76.0));
    CHECK(report["overall"]["tn_count"].get<double>() == 7.0);
    CHECK(report["per_subtask"]["Normalization"]["f1"].get<double>() ==
          doctest::Approx(11.0 / 12.0));
    CHECK(report["error_histogram"]["Missing"] == 1);
    CHECK(report["error_histogram"]["Hallucination"] == 1);
    CHECK(report["error_histogram"]["Perception"] == 1);
    CHECK(report["error_histogram"]["Formatting"] == 1);
    CHECK(report["error_histogram"]["Structure"] == 1);
    CHECK(report["error_histogram"]["Reasoning"] == 0);
}

TEST_CASE("self-evaluation scores 1.0") {
    fs::path report_path = workdir() / "self.json";
    fs::path table_path = workdir() / "self_table.txt";
    auto result = run("evaluate --gold " + fixture_path("gold_small.jsonl") +
                      " --pred " + fixture_path("gold_small.jsonl") +
                      " --out " + report_path.string() +
                      " --table " + table_path.string());
    CHECK(result.exit_code == 0);
    json report = json::parse(testsupport::read_file(report_path.string()));
    CHECK(report["overall"]["f1"].get<double>() == 1.0);
    // the table file mirrors stdout
    CHECK(testsupport::read_file(table_path.string()) == result.out);
}

TEST_CASE("missing prediction file fails with the path in the message") {
    auto result = run("evaluate --gold " + fixture_path("gold_small.jsonl") +
                      " --pred /nonexistent/pred.jsonl");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("/nonexistent/pred.jsonl") != std::string::npos);
}

TEST_CASE("document count mismatch is a hard error") {
    fs::path truncated = workdir() / "truncated.jsonl";
    {
        std::string all = testsupport::fixture("pred_small.jsonl");
        size_t third = all.find('\n');
        third = all.find('\n', third + 1);
        third = all.find('\n', third + 1);
        std::ofstream(truncated) << all.substr(0, third + 1);  // 3 of 4 lines
    }
    auto result = run("evaluate --gold " + fixture_path("gold_small.jsonl") +
                      " --pred " + truncated.string());
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("mismatch") != std::string::npos);
}

TEST_CASE("malformed-penalty flag overrides the all-empty scoring") {
    std::string golden = testsupport::fixture("golden_record.json");
    json gold = json::parse(golden);
    json request = {{"id", 3}, {"gold", gold}, {"pred", "garbage {"}};
    auto result = run("reward-serve --malformed-penalty -1.0", request.dump() + "\n");
    CHECK(result.exit_code == 0);
    json response = json::parse(result.out);
    CHECK(response["reward"].get<double>() == -1.0);
    CHECK(response["malformed"] == true);
}

TEST_CASE("conflicting weight tag and explicit weights is a config error") {
    auto result = run("evaluate --gold " + fixture_path("gold_small.jsonl") +
                      " --pred " + fixture_path("pred_small.jsonl") +
                      " --weights A --weights-explicit 0.25,0.25,0.25,0.25");
    CHECK(result.exit_code == 1);
}

TEST_CASE("determinism across runs and worker pools") {
    fs::path a = workdir() / "det_a.json";
    fs::path b = workdir() / "det_b.json";
    fs::path c = workdir() / "det_c.json";
    std::string base = "evaluate --gold " + fixture_path("gold_small.jsonl") +
                       " --pred " + fixture_path("pred_small.jsonl");
    CHECK(run(base + " --workers 1 --out " + a.string()).exit_code == 0);
    CHECK(run(base + " --workers 1 --out " + b.string()).exit_code == 0);
    CHECK(run(base + " --workers 4 --out " + c.string()).exit_code == 0);
    auto bytes_a = testsupport::read_file(a.string());
    CHECK(bytes_a == testsupport::read_file(b.string()));
    CHECK(bytes_a == testsupport::read_file(c.string()));
}

TEST_CASE("validate") {
    CHECK(run("validate --in " + fixture_path("gold_small.jsonl")).exit_code == 0);

    fs::path broken = workdir() / "broken.jsonl";
    std::ofstream(broken) << "{\"type\": \"train\"}\nnot a json {\n";
    auto result = run("validate --in " + broken.string());
    CHECK(result.exit_code == 1);
    CHECK(result.out.find("line 2") != std::string::npos);
}

TEST_CASE("broken prediction lines honored per flag") {
    fs::path broken = workdir() / "broken_pred.jsonl";
    {
        std::ofstream out(broken);
        // four lines to match the gold fixture; line 2 is garbage
        out << testsupport::fixture("pred_small.jsonl").substr(
            0, testsupport::fixture("pred_small.jsonl").find('\n') + 1);
        out << "garbage {\n";
        std::string rest = testsupport::fixture("pred_small.jsonl");
        size_t pos = rest.find('\n') + 1;
        pos = rest.find('\n', pos) + 1;  // skip original line 2
        out << rest.substr(pos);
    }
    std::string base = "evaluate --gold " + fixture_path("gold_small.jsonl") +
                       " --pred " + broken.string();
    CHECK(run(base).exit_code == 1);
    auto tolerated = run(base + " --broken-as-empty --out " +
                         (workdir() / "broken.json").string());
    CHECK(tolerated.exit_code == 0);
    json report = json::parse(
        testsupport::read_file((workdir() / "broken.json").string()));
    // the all-empty substitute turns doc-2's nonempty gold fields into FNs
    CHECK(report["overall"]["f1"].get<double>() < 146.0 / 153.0);
}

TEST_CASE("qc accepts the golden batch and rejects a broken one") {
    fs::path batch = workdir() / "batch.jsonl";
    {
        std::ofstream out(batch);
        json rec = json::parse(testsupport::fixture("golden_record.json"));
        rec["id"] = "doc-1";
        out << rec.dump() << "\n";
    }
    auto accepted = run("qc --batch " + batch.string() + " --reference " +
                        batch.string() + " --out " + (workdir() / "audit.md").string());
    CHECK(accepted.exit_code == 0);
    CHECK(accepted.out.find("Batch accepted.") != std::string::npos);

    fs::path bad_batch = workdir() / "bad_batch.jsonl";
    {
        std::ofstream out(bad_batch);
        json rec = json::parse(testsupport::fixture("golden_record.json"));
        rec["id"] = "doc-1";
        rec["invoice_number"] = "wrong";
        rec["std_invoice_time"] = "03 Jun 2024";
        out << rec.dump() << "\n";
    }
    auto rejected = run("qc --batch " + bad_batch.string() + " --reference " +
                        batch.string());
    CHECK(rejected.exit_code == 2);
    CHECK(rejected.out.find("REJECTED") != std::string::npos);
    CHECK(rejected.out.find("invoice_number") != std::string::npos);
    CHECK(rejected.out.find("DateFormat") != std::string::npos);

    // findings-only mode exits 0
    CHECK(run("qc --batch " + bad_batch.string()).exit_code == 0);
}

TEST_CASE("errors histogram and FP-delta modes") {
    auto result = run("errors --gold " + fixture_path("gold_small.jsonl") +
                      " --pred " + fixture_path("pred_small.jsonl") + " --top 3");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("error histogram") != std::string::npos);
    CHECK(result.out.find("top 3 error-prone fields") != std::string::npos);

    // top-K larger than the field count lists everything
    result = run("errors --gold " + fixture_path("gold_small.jsonl") + " --pred " +
                 fixture_path("pred_small.jsonl") + " --top 99");
    CHECK(result.out.find("top 19 error-prone fields") != std::string::npos);

    // identical sets in delta mode -> all-zero changes
    result = run("errors --gold " + fixture_path("gold_small.jsonl") + " --pred " +
                 fixture_path("pred_small.jsonl") + " --baseline " +
                 fixture_path("pred_small.jsonl"));
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("+0") != std::string::npos);
    CHECK(result.out.find("fp_before") != std::string::npos);

    // histogram written to --out
    fs::path err_json = workdir() / "errors.json";
    result = run("errors --gold " + fixture_path("gold_small.jsonl") + " --pred " +
                 fixture_path("pred_small.jsonl") + " --out " + err_json.string());
    CHECK(result.exit_code == 0);
    json histogram = json::parse(testsupport::read_file(err_json.string()));
    CHECK(histogram["error_histogram"]["Missing"] == 1);
}

TEST_CASE("macro averaging is exposed and flagged in the report") {
    fs::path report_path = workdir() / "macro.json";
    auto result = run("evaluate --gold " + fixture_path("gold_small.jsonl") +
                      " --pred " + fixture_path("pred_small.jsonl") +
                      " --macro --out " + report_path.string());
    CHECK(result.exit_code == 0);
    json report = json::parse(testsupport::read_file(report_path.string()));
    CHECK(report["options"]["macro"] == true);
    // macro overall is the mean of the 19 per-field F1 values
    double mean = 0.0;
    for (const auto& [name, m] : report["per_field"].items())
        mean += m["f1"].get<double>();
    mean /= 19.0;
    CHECK(report["overall"]["f1"].get<double>() == doctest::Approx(mean));
}

TEST_CASE("sweep grid over configs") {
    fs::path out_dir = workdir() / "sweep";
    auto result = run("sweep --gold " + fixture_path("gold_small.jsonl") +
                      " --pred " + fixture_path("gold_small.jsonl") +
                      " --pred " + fixture_path("pred_small.jsonl") +
                      " --configs A,B,C,D --out-dir " + out_dir.string());
    CHECK(result.exit_code == 0);
    size_t reports = 0;
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        (void)entry;
        ++reports;
    }
    CHECK(reports == 8);  // 2 prediction sets x 4 configs
    CHECK(result.out.find("ranking per config") != std::string::npos);
    // the self-prediction dominates in every config
    size_t pos = 0;
    int dominant = 0;
    while ((pos = result.out.find("cfg ", pos)) != std::string::npos) {
        size_t line_end = result.out.find('\n', pos);
        std::string line = result.out.substr(pos, line_end - pos);
        size_t gold_at = line.find("gold_small");
        size_t pred_at = line.find("pred_small");
        if (gold_at != std::string::npos && pred_at != std::string::npos) {
            CHECK(gold_at < pred_at);
            ++dominant;
        }
        pos = line_end;
    }
    CHECK(dominant == 4);
}

TEST_CASE("reward-serve line protocol") {
    std::string golden = testsupport::fixture("golden_record.json");
    json gold = json::parse(golden);
    json perfect_request = {{"id", 1}, {"gold", gold}, {"pred", gold}};
    json empty_request = {{"id", "r2"},
                          {"gold", json::object()},
                          {"pred", json::object()}};
    json bad_gold_request = {{"id", 7}, {"gold", "garbage {"}, {"pred", json::object()}};
    std::string input = perfect_request.dump() + "\n" + empty_request.dump() +
                        "\nmalformed line\n" + bad_gold_request.dump() + "\n";
    auto result = run("reward-serve", input);
    CHECK(result.exit_code == 0);

    std::vector<json> responses;
    std::stringstream ss(result.out);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) responses.push_back(json::parse(line));
    REQUIRE(responses.size() == 4);

    CHECK(responses[0]["id"] == 1);
    // golden record has two legitimately-empty fields, rewarded at 0.3
    CHECK(responses[0]["reward"].get<double>() ==
          doctest::Approx((17.0 + 2 * 0.3) / 19.0));
    CHECK(responses[0]["fields"].size() == 19);

    CHECK(responses[1]["id"] == "r2");
    CHECK(responses[1]["reward"].get<double>() == doctest::Approx(0.3));

    CHECK(responses[2]["id"].is_null());
    CHECK(responses[2].contains("error"));

    // unparseable gold in a well-formed request keeps the request id
    CHECK(responses[3]["id"] == 7);
    CHECK(responses[3].contains("error"));
}
