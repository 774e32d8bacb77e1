#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "receval/corpus.hpp"
#include "receval/reward.hpp"
#include "support.hpp"

using namespace receval;

namespace {

struct Fixture {
    EvalOptions opts;
    EvalEngine engine{opts};
    const ScoreContext& ctx = engine.context();
};

FieldOutcome outcome_of(ConfusionState state, double score = 0.0) {
    FieldOutcome o;
    o.field = 0;
    o.state = state;
    o.score = score;
    return o;
}

ExtractionRecord fully_populated() {
    ExtractionRecord rec = testsupport::golden_record();
    rec.values[size_t(field_index("std_end_time"))] = std::string("2024-07-06");
    rec.values[size_t(field_index("orig_end_time"))] = std::string("06 Jul 2024");
    return rec;
}

}  // namespace

TEST_CASE("field_reward case table") {
    RewardConfig cfg;
    CHECK(field_reward(outcome_of(ConfusionState::TN), cfg) == 0.3);
    CHECK(field_reward(outcome_of(ConfusionState::FP), cfg) == -0.5);
    CHECK(field_reward(outcome_of(ConfusionState::FN), cfg) == 0.0);
    CHECK(field_reward(outcome_of(ConfusionState::TP, 1.0), cfg) == 1.0);
    CHECK(field_reward(outcome_of(ConfusionState::TP, 0.37), cfg) == 0.37);

    // arbitrary lambdas pass straight through
    RewardConfig custom;
    custom.lambda_tn = 0.9;
    custom.lambda_fp = -2.0;
    custom.lambda_fn = -0.25;
    CHECK(field_reward(outcome_of(ConfusionState::TN), custom) == 0.9);
    CHECK(field_reward(outcome_of(ConfusionState::FP), custom) == -2.0);
    CHECK(field_reward(outcome_of(ConfusionState::FN), custom) == -0.25);
}

TEST_CASE("record_reward") {
    Fixture f;
    RewardConfig cfg;

    // all 19 fields empty on both sides -> mean of lambda_tn
    auto all_tn = record_reward(empty_record(), empty_record(), cfg, f.ctx);
    CHECK(all_tn.reward == doctest::Approx(0.3).epsilon(1e-12));

    // perfect prediction of a fully-populated record -> 1.0
    ExtractionRecord full = fully_populated();
    auto perfect = record_reward(full, full, cfg, f.ctx);
    CHECK(perfect.reward == doctest::Approx(1.0).epsilon(1e-12));

    // 18 TN + 1 FP
    ExtractionRecord pred = empty_record();
    pred.values[size_t(field_index("invoice_number"))] = std::string("X123");
    auto one_fp = record_reward(empty_record(), pred, cfg, f.ctx);
    double expected = (18.0 * 0.3 - 0.5) / 19.0;
    CHECK(one_fp.reward == doctest::Approx(expected).epsilon(1e-12));

    // reward/evaluation consistency: TP scores match the scoring module
    auto outcomes = score_document(full, full, f.ctx);
    for (int i = 0; i < kFieldCount; ++i)
        CHECK(perfect.outcomes[size_t(i)].score == outcomes[size_t(i)].score);
}

TEST_CASE("record_reward bounds and monotonicity") {
    Fixture f;
    RewardConfig cfg;
    std::mt19937 rng(51);

    ExtractionRecord gold = empty_record();
    // half the scalar fields populated
    for (int i = 0; i < kFieldCount; i += 2)
        if (field_specs()[size_t(i)].shape == ValueShape::Scalar)
            gold.values[size_t(i)] = testsupport::random_token(rng);

    double lower = std::min({cfg.lambda_fp, cfg.lambda_fn, cfg.lambda_tn, 0.0});
    for (int trial = 0; trial < 50; ++trial) {
        ExtractionRecord pred = empty_record();
        for (int i = 0; i < kFieldCount; ++i)
            if (field_specs()[size_t(i)].shape == ValueShape::Scalar && rng() % 2)
                pred.values[size_t(i)] = testsupport::random_token(rng);
        double r = record_reward(gold, pred, cfg, f.ctx).reward;
        CHECK(r >= lower - 1e-12);
        CHECK(r <= 1.0 + 1e-12);
    }

    // swapping one FP for a TN strictly increases the reward
    ExtractionRecord with_fp = empty_record();
    with_fp.values[size_t(field_index("place"))] = std::string("nowhere");
    double noisy = record_reward(empty_record(), with_fp, cfg, f.ctx).reward;
    double silent = record_reward(empty_record(), empty_record(), cfg, f.ctx).reward;
    CHECK(silent > noisy);
}

TEST_CASE("group_advantages") {
    auto adv = group_advantages(std::vector<double>{1.0, 0.0});
    // sample std of {1,0} is sqrt(0.5)
    double expected = 0.5 / (std::sqrt(0.5) + 1e-8);
    CHECK(adv[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(-expected).epsilon(1e-12));

    auto zeros = group_advantages(std::vector<double>{0.3, 0.3, 0.3});
    CHECK(zeros == std::vector<double>{0.0, 0.0, 0.0});

    CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), GroupTooSmall);

    std::mt19937 rng(61);
    std::uniform_real_distribution<double> r(-0.5, 1.0);
    std::vector<double> rewards;
    for (int i = 0; i < 16; ++i) rewards.push_back(r(rng));
    auto advantages = group_advantages(rewards);
    double mean = 0.0;
    for (double a : advantages) mean += a;
    CHECK(std::abs(mean / 16.0) < 1e-9);

    // permuting inputs permutes outputs (up to summation-order ulps)
    std::vector<double> reversed(rewards.rbegin(), rewards.rend());
    auto reversed_adv = group_advantages(reversed);
    for (size_t i = 0; i < rewards.size(); ++i)
        CHECK(reversed_adv[i] ==
              doctest::Approx(advantages[rewards.size() - 1 - i]).epsilon(1e-12));

    // mean-only baseline
    auto centered = group_advantages(std::vector<double>{1.0, 0.0}, false);
    CHECK(centered[0] == doctest::Approx(0.5));
    CHECK(centered[1] == doctest::Approx(-0.5));
}

TEST_CASE("expected_policy_reward closed forms") {
    RewardConfig cfg;  // defaults
    CorpusStats stats;
    stats.documents = 1;
    for (auto& e : stats.empty_rate) e = 0.5;  // 50% empty corpus

    PolicyProfile always_empty{"empty", 1.0, 0.0, 1.0};
    CHECK(expected_policy_reward(cfg, always_empty, stats) ==
          doctest::Approx(0.5 * 0.3 + 0.5 * 0.0).epsilon(1e-12));

    // zero lambdas leave only the TP term
    RewardConfig zeros;
    zeros.lambda_tn = zeros.lambda_fp = zeros.lambda_fn = 0.0;
    PolicyProfile truthful{"truthful", 0.0, 0.0, 0.7};
    CHECK(expected_policy_reward(zeros, truthful, stats) ==
          doctest::Approx(0.5 * 0.7).epsilon(1e-12));
}

TEST_CASE("reward_profile_scan emits the full grid") {
    CorpusStats stats;
    stats.documents = 1;
    for (auto& e : stats.empty_rate) e = 0.8;

    std::vector<std::pair<std::string, RewardConfig>> configs(2);
    configs[0].first = "default";
    configs[1].first = "tn=1.0";
    configs[1].second.lambda_tn = 1.0;

    std::vector<PolicyProfile> policies = {{"empty", 1.0, 0.0, 1.0},
                                           {"truthful", 0.0, 0.15, 0.7}};
    auto cells = reward_profile_scan(configs, policies, stats);
    CHECK(cells.size() == 4);

    auto cell = [&](const std::string& c, const std::string& p) {
        for (const auto& x : cells)
            if (x.config_name == c && x.policy_name == p) return x.expected_reward;
        throw std::runtime_error("missing cell");
    };
    // with the default abstention reward the truthful policy wins; with
    // lambda_tn = 1.0 the always-empty policy overtakes it
    CHECK(cell("default", "truthful") > cell("default", "empty"));
    CHECK(cell("tn=1.0", "empty") > cell("tn=1.0", "truthful"));
}

TEST_CASE("binary list score mode") {
    Fixture f;
    RewardConfig cfg;
    cfg.list_score_mode = ListScoreMode::Binary;

    ExtractionRecord gold = testsupport::golden_record();
    ExtractionRecord pred = gold;
    auto items = pred.items(field_index("detail"));
    DetailItem extra;
    extra.content = "Service Fee";
    extra.amount_text = "2.00";
    extra.amount = Amount::parse("2.00");
    items.push_back(extra);
    pred.values[size_t(field_index("detail"))] = items;

    auto graded = record_reward(gold, pred, RewardConfig{}, f.ctx);
    auto binary = record_reward(gold, pred, cfg, f.ctx);
    int detail = field_index("detail");
    CHECK(graded.field_rewards[size_t(detail)] == doctest::Approx(0.8));
    CHECK(binary.field_rewards[size_t(detail)] == 0.0);
}
