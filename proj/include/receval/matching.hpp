#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "receval/schema.hpp"
#include "receval/similarity.hpp"

namespace receval {

/// Sentinel for cells excluded by a hard constraint. Large enough that
/// any assignment using one loses to any all-finite assignment at the
/// list sizes this tool handles, so the solver can stay purely numeric.
inline constexpr double kInfiniteCost = 1e6;

struct MatchOptions {
    double accept_threshold = 0.25;  // pairs kept iff cost <= this
    double amount_tolerance = 0.05;  // hard constraint: |delta| > tol -> infinite
};

/// Dissimilarity matrix, rows = predicted items, cols = gold items.
struct CostMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> cells;  // row-major

    CostMatrix() = default;
    CostMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), cells(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return cells[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return cells[i * cols + j]; }
};

/// Pads a rectangular matrix to square with dummy rows/cols of cost 1.0.
/// Dummy assignments are never accepted as matches downstream.
CostMatrix pad_square(const CostMatrix& c, double pad_value = 1.0);

/// cell(i,j) = 1 - composite_similarity(content_i, content_j), or
/// infinite when |amount_i - amount_j| > tolerance or either amount is
/// malformed.
CostMatrix build_cost_matrix(const std::vector<DetailItem>& pred,
                             const std::vector<DetailItem>& gold,
                             const SimilarityWeights& w, EmbeddingProvider* provider,
                             const MatchOptions& opts = {});

/// Text-list variant: cost is dissimilarity only, no hard constraints.
CostMatrix build_text_cost_matrix(const std::vector<std::string>& pred,
                                  const std::vector<std::string>& gold,
                                  const SimilarityWeights& w,
                                  EmbeddingProvider* provider);

/// Minimum-cost perfect assignment on a square matrix (shortest
/// augmenting path, O(n^3)). Returns row -> col. Deterministic: ties
/// resolve toward lower indices via the fixed scan order.
std::vector<int> hungarian_assign(const CostMatrix& square);

struct MatchResult {
    struct Pair {
        int pred;
        int gold;
        double cost;
    };
    std::vector<Pair> pairs;          // accepted matches, by pred index
    std::vector<int> unmatched_pred;  // FP items
    std::vector<int> unmatched_gold;  // FN items
};

/// Full detail-field pipeline: cost matrix, Hungarian assignment, then
/// acceptance (cost <= threshold and ifTax flags equal).
MatchResult evaluate_item_list(const std::vector<DetailItem>& pred,
                               const std::vector<DetailItem>& gold,
                               const SimilarityWeights& w, EmbeddingProvider* provider,
                               const MatchOptions& opts = {});

/// Same pipeline for plain text lists; acceptance is cost alone.
MatchResult evaluate_text_list(const std::vector<std::string>& pred,
                               const std::vector<std::string>& gold,
                               const SimilarityWeights& w, EmbeddingProvider* provider,
                               const MatchOptions& opts = {});

}  // namespace receval
