#pragma once

#include <span>
#include <string>
#include <vector>

#include "receval/schema.hpp"
#include "receval/scoring.hpp"

namespace receval {

struct GroupTooSmall : std::runtime_error {
    GroupTooSmall() : std::runtime_error("advantage group needs at least 2 samples") {}
};

enum class ListScoreMode { ItemF1, Binary };

/// Reward-shaping constants. Defaults follow the confusion-state table:
/// hallucination is penalized hardest, silence gets nothing, correct
/// abstention gets a modest positive reward below a perfect hit.
struct RewardConfig {
    double lambda_tn = 0.3;
    double lambda_fp = -0.5;
    double lambda_fn = 0.0;
    SimilarityWeights weights = SimilarityWeights::named_config('A');
    ListScoreMode list_score_mode = ListScoreMode::ItemF1;
    // When set, an unparseable completion earns this flat reward instead
    // of being scored as the all-empty record.
    std::optional<double> malformed_penalty;
};

/// Per-field reward: TP -> alignment score S, TN/FP/FN -> the lambdas.
double field_reward(const FieldOutcome& outcome, const RewardConfig& cfg);

struct RecordReward {
    double reward = 0.0;
    DocumentOutcomes outcomes;
    std::array<double, kFieldCount> field_rewards{};
};

/// Mean of the 19 field rewards plus the per-field breakdown. The S used
/// for TP fields is the scoring module's comparator output, unchanged.
RecordReward record_reward(const ExtractionRecord& gold, const ExtractionRecord& pred,
                           const RewardConfig& cfg, const ScoreContext& ctx);

/// Group-relative advantages: (r - mean) / (sample std + 1e-8); a
/// zero-variance group maps to all zeros. Throws GroupTooSmall for
/// groups under 2. With scale_by_std off this is the mean-only baseline
/// (r - mean).
std::vector<double> group_advantages(std::span<const double> rewards,
                                     bool scale_by_std = true);

/// Synthetic policy over a gold corpus: abstains on nonempty-gold fields
/// at abstain_rate, hallucinates on empty-gold fields at
/// hallucinate_rate, and answers correctly with probability accuracy.
struct PolicyProfile {
    std::string name;
    double abstain_rate = 0.0;
    double hallucinate_rate = 0.0;
    double accuracy = 1.0;
};

struct CorpusStats {
    std::array<double, kFieldCount> empty_rate{};  // fraction of empty golds
    std::size_t documents = 0;
};

CorpusStats corpus_stats(std::span<const ExtractionRecord> gold);

struct RewardScanCell {
    std::string config_name;
    std::string policy_name;
    double expected_reward = 0.0;
};

/// Closed-form expected record reward for each (config, policy) pair;
/// shows where an over-generous abstention reward lets the always-empty
/// policy win.
std::vector<RewardScanCell> reward_profile_scan(
    std::span<const std::pair<std::string, RewardConfig>> configs,
    std::span<const PolicyProfile> policies, const CorpusStats& stats);

double expected_policy_reward(const RewardConfig& cfg, const PolicyProfile& policy,
                              const CorpusStats& stats);

}  // namespace receval
