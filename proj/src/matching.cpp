#include "receval/matching.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace receval {

CostMatrix pad_square(const CostMatrix& c, double pad_value) {
    std::size_t n = std::max(c.rows, c.cols);
    CostMatrix out(n, n, pad_value);
    for (std::size_t i = 0; i < c.rows; ++i)
        for (std::size_t j = 0; j < c.cols; ++j) out.at(i, j) = c.at(i, j);
    return out;
}

namespace {

std::int64_t amount_micros(const DetailItem& item) {
    // Absent amounts act as zero, mirroring the numeric comparator.
    return item.amount.micros();
}

}  // namespace

CostMatrix build_cost_matrix(const std::vector<DetailItem>& pred,
                             const std::vector<DetailItem>& gold,
                             const SimilarityWeights& w, EmbeddingProvider* provider,
                             const MatchOptions& opts) {
    CostMatrix c(pred.size(), gold.size());
    const std::int64_t tolerance_micros =
        static_cast<std::int64_t>(std::llround(opts.amount_tolerance * Amount::kScale));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < gold.size(); ++j) {
            if (pred[i].malformed || gold[j].malformed) {
                c.at(i, j) = kInfiniteCost;
                continue;
            }
            std::int64_t delta = amount_micros(pred[i]) - amount_micros(gold[j]);
            if (delta < 0) delta = -delta;
            if (delta > tolerance_micros) {
                c.at(i, j) = kInfiniteCost;
                continue;
            }
            c.at(i, j) = 1.0 - composite_similarity(pred[i].content, gold[j].content,
                                                    w, provider);
        }
    }
    return c;
}

CostMatrix build_text_cost_matrix(const std::vector<std::string>& pred,
                                  const std::vector<std::string>& gold,
                                  const SimilarityWeights& w,
                                  EmbeddingProvider* provider) {
    CostMatrix c(pred.size(), gold.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = 0; j < gold.size(); ++j)
            c.at(i, j) = 1.0 - composite_similarity(pred[i], gold[j], w, provider);
    return c;
}

std::vector<int> hungarian_assign(const CostMatrix& square) {
    if (square.rows != square.cols)
        throw std::invalid_argument("hungarian_assign expects a square matrix");
    const int n = static_cast<int>(square.rows);
    if (n == 0) return {};

    const double inf = std::numeric_limits<double>::infinity();
    // Potentials-based shortest augmenting path; 1-indexed with column 0
    // as the virtual start.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = match[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = square.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

namespace {

template <typename AcceptFn>
MatchResult run_matching(const CostMatrix& costs, std::size_t pred_count,
                         std::size_t gold_count, AcceptFn accept) {
    MatchResult result;
    if (pred_count == 0 || gold_count == 0) {
        for (std::size_t i = 0; i < pred_count; ++i)
            result.unmatched_pred.push_back(static_cast<int>(i));
        for (std::size_t j = 0; j < gold_count; ++j)
            result.unmatched_gold.push_back(static_cast<int>(j));
        return result;
    }

    auto assignment = hungarian_assign(pad_square(costs));
    std::vector<char> gold_taken(gold_count, 0);
    for (std::size_t i = 0; i < pred_count; ++i) {
        int j = assignment[i];
        bool kept = false;
        if (j >= 0 && static_cast<std::size_t>(j) < gold_count) {
            double cost = costs.at(i, static_cast<std::size_t>(j));
            if (accept(static_cast<int>(i), j, cost)) {
                result.pairs.push_back({static_cast<int>(i), j, cost});
                gold_taken[static_cast<std::size_t>(j)] = 1;
                kept = true;
            }
        }
        if (!kept) result.unmatched_pred.push_back(static_cast<int>(i));
    }
    for (std::size_t j = 0; j < gold_count; ++j)
        if (!gold_taken[j]) result.unmatched_gold.push_back(static_cast<int>(j));
    return result;
}

}  // namespace

MatchResult evaluate_item_list(const std::vector<DetailItem>& pred,
                               const std::vector<DetailItem>& gold,
                               const SimilarityWeights& w, EmbeddingProvider* provider,
                               const MatchOptions& opts) {
    CostMatrix costs = build_cost_matrix(pred, gold, w, provider, opts);
    return run_matching(costs, pred.size(), gold.size(),
                        [&](int i, int j, double cost) {
                            return cost <= opts.accept_threshold &&
                                   pred[static_cast<std::size_t>(i)].if_tax ==
                                       gold[static_cast<std::size_t>(j)].if_tax;
                        });
}

MatchResult evaluate_text_list(const std::vector<std::string>& pred,
                               const std::vector<std::string>& gold,
                               const SimilarityWeights& w, EmbeddingProvider* provider,
                               const MatchOptions& opts) {
    CostMatrix costs = build_text_cost_matrix(pred, gold, w, provider);
    return run_matching(costs, pred.size(), gold.size(),
                        [&](int, int, double cost) {
                            return cost <= opts.accept_threshold;
                        });
}

}  // namespace receval
