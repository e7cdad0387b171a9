#include "polyrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "polyrec/util.hpp"

namespace polyrec {

double recall_at_k(std::span<const std::int32_t> ranked, std::span<const std::int32_t> relevant,
                   std::int64_t k) {
    if (relevant.empty()) {
        throw DataError("recall_at_k: empty relevant set");
    }
    const auto depth = std::min<std::int64_t>(k, static_cast<std::int64_t>(ranked.size()));
    std::int64_t hits = 0;
    for (std::int64_t p = 0; p < depth; ++p) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::int32_t> ranked, std::span<const std::int32_t> relevant,
                 std::int64_t k) {
    if (relevant.empty()) {
        throw DataError("ndcg_at_k: empty relevant set");
    }
    const auto depth = std::min<std::int64_t>(k, static_cast<std::int64_t>(ranked.size()));
    double dcg = 0.0;
    for (std::int64_t p = 0; p < depth; ++p) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) {
            dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
        }
    }
    const auto ideal = std::min<std::int64_t>(k, static_cast<std::int64_t>(relevant.size()));
    double idcg = 0.0;
    for (std::int64_t p = 0; p < ideal; ++p) {
        idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
    return dcg / idcg;
}

EvalReport evaluate(const std::vector<RankedList>& ranked_lists,
                    const InteractionMatrix& heldout, std::int64_t k) {
    std::vector<double> recalls, ndcgs;
    recalls.reserve(ranked_lists.size());
    ndcgs.reserve(ranked_lists.size());
    for (const auto& list : ranked_lists) {
        if (list.user < 0 || list.user >= heldout.n_users) {
            throw DataError("ranked list user out of range: " + std::to_string(list.user));
        }
        const auto relevant = heldout.items_of(list.user);
        if (relevant.empty()) continue;  // excluded from numerator and denominator
        recalls.push_back(recall_at_k(list.items, relevant, k));
        ndcgs.push_back(ndcg_at_k(list.items, relevant, k));
    }
    if (recalls.empty()) {
        throw DataError("empty evaluation: no user has held-out interactions");
    }
    EvalReport report;
    report.k = k;
    report.n_evaluated_users = static_cast<std::int64_t>(recalls.size());
    report.recall = pairwise_sum(recalls) / static_cast<double>(recalls.size());
    report.ndcg = pairwise_sum(ndcgs) / static_cast<double>(ndcgs.size());
    return report;
}

nlohmann::ordered_json EvalReport::to_json(bool include_timings) const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["conventions"] = "recall denominator |relevant|; binary NDCG, IDCG truncated at "
                       "min(k,|relevant|); macro-averaged over users";
    j["k"] = k;
    j["recall"] = recall;
    j["ndcg"] = ndcg;
    j["n_evaluated_users"] = n_evaluated_users;
    if (include_timings) {
        j["stage_timings"] = {{"parse", stage_timings.parse},   {"graph", stage_timings.graph},
                              {"filter", stage_timings.filter}, {"score", stage_timings.score},
                              {"rank", stage_timings.rank},     {"metric", stage_timings.metric},
                              {"total", stage_timings.total()}};
    }
    return j;
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << "# recall: |top-k intersect relevant| / |relevant|; ndcg: binary gains, "
           "idcg truncated at min(k,|relevant|); macro-averaged over users\n"
        << "metric              value\n"
        << "------------------  ----------\n";
    const auto row = [&out](const std::string& name, const std::string& value) {
        out << name;
        for (std::size_t p = name.size(); p < 20; ++p) out << ' ';
        out << value << '\n';
    };
    row("recall@" + std::to_string(k), format_double(recall));
    row("ndcg@" + std::to_string(k), format_double(ndcg));
    row("evaluated_users", std::to_string(n_evaluated_users));
    row("parse_s", format_double(stage_timings.parse));
    row("graph_s", format_double(stage_timings.graph));
    row("filter_s", format_double(stage_timings.filter));
    row("score_s", format_double(stage_timings.score));
    row("rank_s", format_double(stage_timings.rank));
    row("metric_s", format_double(stage_timings.metric));
    row("total_s", format_double(stage_timings.total()));
    return out.str();
}

}  // namespace polyrec
