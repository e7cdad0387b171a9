#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polyrec/interactions.hpp"
#include "polyrec/recommend.hpp"

#include "json.hpp"

namespace polyrec {

struct StageTimings {
    double parse = 0.0;
    double graph = 0.0;
    double filter = 0.0;
    double score = 0.0;
    double rank = 0.0;
    double metric = 0.0;

    double total() const { return parse + graph + filter + score + rank + metric; }
};

struct EvalReport {
    std::int64_t k = 0;
    double recall = 0.0;
    double ndcg = 0.0;
    std::int64_t n_evaluated_users = 0;
    StageTimings stage_timings;

    // Metric conventions, stated in the report header: recall denominator is
    // the full relevant-set size; NDCG uses binary gains with IDCG truncated
    // at min(k, |relevant|); users are macro-averaged.
    nlohmann::ordered_json to_json(bool include_timings = true) const;
    std::string to_table() const;
};

// |ranked[1..k] ∩ relevant| / |relevant|. `relevant` must be sorted ascending
// and non-empty.
double recall_at_k(std::span<const std::int32_t> ranked, std::span<const std::int32_t> relevant,
                   std::int64_t k);

// Binary-gain DCG/IDCG with 1/log2(pos+1) discounts.
double ndcg_at_k(std::span<const std::int32_t> ranked, std::span<const std::int32_t> relevant,
                 std::int64_t k);

// Macro-average over users with non-empty held-out sets; throws DataError
// when no user is evaluable. Per-user values are aggregated with pairwise
// summation in user order, so parallel and serial runs agree.
EvalReport evaluate(const std::vector<RankedList>& ranked_lists,
                    const InteractionMatrix& heldout, std::int64_t k);

}  // namespace polyrec
