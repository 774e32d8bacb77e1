#include "receval/reward.hpp"

#include <cmath>

namespace receval {

double field_reward(const FieldOutcome& outcome, const RewardConfig& cfg) {
    switch (outcome.state) {
        case ConfusionState::TP: {
            double s = outcome.score;
            if (cfg.list_score_mode == ListScoreMode::Binary &&
                field_specs()[static_cast<std::size_t>(outcome.field)].shape !=
                    ValueShape::Scalar)
                s = s >= 1.0 ? 1.0 : 0.0;
            return s;
        }
        case ConfusionState::TN: return cfg.lambda_tn;
        case ConfusionState::FP: return cfg.lambda_fp;
        case ConfusionState::FN: return cfg.lambda_fn;
    }
    return 0.0;
}

RecordReward record_reward(const ExtractionRecord& gold, const ExtractionRecord& pred,
                           const RewardConfig& cfg, const ScoreContext& ctx) {
    RecordReward out;
    out.outcomes = score_document(gold, pred, ctx);
    double sum = 0.0;
    for (int i = 0; i < kFieldCount; ++i) {
        double r = field_reward(out.outcomes[static_cast<std::size_t>(i)], cfg);
        out.field_rewards[static_cast<std::size_t>(i)] = r;
        sum += r;
    }
    out.reward = sum / kFieldCount;
    return out;
}

std::vector<double> group_advantages(std::span<const double> rewards,
                                     bool scale_by_std) {
    if (rewards.size() < 2) throw GroupTooSmall();
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size() - 1);  // sample variance
    double std_dev = std::sqrt(var);

    std::vector<double> advantages;
    advantages.reserve(rewards.size());
    if (scale_by_std && std_dev == 0.0) {
        advantages.assign(rewards.size(), 0.0);
        return advantages;
    }
    for (double r : rewards) {
        double centered = r - mean;
        advantages.push_back(scale_by_std ? centered / (std_dev + 1e-8) : centered);
    }
    return advantages;
}

CorpusStats corpus_stats(std::span<const ExtractionRecord> gold) {
    CorpusStats stats;
    stats.documents = gold.size();
    if (gold.empty()) return stats;
    for (const auto& rec : gold)
        for (int i = 0; i < kFieldCount; ++i)
            if (rec.field_empty(i)) stats.empty_rate[static_cast<std::size_t>(i)] += 1.0;
    for (auto& rate : stats.empty_rate) rate /= static_cast<double>(gold.size());
    return stats;
}

double expected_policy_reward(const RewardConfig& cfg, const PolicyProfile& policy,
                              const CorpusStats& stats) {
    // Linearity of expectation per field slot:
    //   gold empty:    hallucinate -> lambda_fp, else lambda_tn
    //   gold nonempty: abstain -> lambda_fn, else S in {1, 0} by accuracy
    double total = 0.0;
    for (int i = 0; i < kFieldCount; ++i) {
        double e = stats.empty_rate[static_cast<std::size_t>(i)];
        double when_empty = policy.hallucinate_rate * cfg.lambda_fp +
                            (1.0 - policy.hallucinate_rate) * cfg.lambda_tn;
        double when_present =
            policy.abstain_rate * cfg.lambda_fn +
            (1.0 - policy.abstain_rate) * policy.accuracy * 1.0;
        total += e * when_empty + (1.0 - e) * when_present;
    }
    return total / kFieldCount;
}

std::vector<RewardScanCell> reward_profile_scan(
    std::span<const std::pair<std::string, RewardConfig>> configs,
    std::span<const PolicyProfile> policies, const CorpusStats& stats) {
    std::vector<RewardScanCell> cells;
    for (const auto& [name, cfg] : configs) {
        for (const auto& policy : policies) {
            RewardScanCell cell;
            cell.config_name = name;
            cell.policy_name = policy.name;
            cell.expected_reward = expected_policy_reward(cfg, policy, stats);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace receval
