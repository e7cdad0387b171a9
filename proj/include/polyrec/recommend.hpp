#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "polyrec/dense.hpp"
#include "polyrec/filters.hpp"
#include "polyrec/graph.hpp"
#include "polyrec/interactions.hpp"

namespace polyrec {

struct RankedList {
    std::int32_t user = 0;
    std::vector<std::int32_t> items;  // score descending, ties by ascending index
};

struct ScoreOptions {
    bool fp32 = false;  // accumulate in 32-bit floats (excluded from acceptance runs)
};

// s_u = r_u * sum_k a_k P^k by Horner recurrence on vector-matrix products;
// powers of P are never materialized. Returns users.size() x n_items scores.
Matrix score_users(const InteractionMatrix& train, const SimilarityGraph& graph,
                   const FilterSpec& filter, std::span<const std::int32_t> users,
                   const ScoreOptions& options = {});

// F = sum_k a_k P^k materialized; small instances only, for cross-checking.
Matrix materialize_filter_matrix(const SimilarityGraph& graph, const FilterSpec& filter);

// Highest-K unseen items, ties broken by ascending item index. Returns all
// unseen items when fewer than K remain. NaN scores are rejected.
RankedList top_k(std::int32_t user, const Eigen::Ref<const Eigen::RowVectorXd>& scores,
                 std::span<const std::int32_t> seen, std::int64_t k);

// One line per user: user_ext_id<TAB>item_ext_id:score,...
void write_recommendations(const std::vector<RankedList>& lists, const Matrix& scores,
                           std::span<const std::int32_t> users,
                           const InteractionMatrix& train, std::ostream& out);

}  // namespace polyrec
