#include "polyrec/recommend.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "polyrec/util.hpp"

namespace polyrec {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out.row(b) += scale * stripe rows of the user's interacted items that fall
// inside [r0, r0+rows). Items are sorted, so the window is a binary search.
template <typename T, typename StripeT>
void scatter_users(Mat<T>& out, const InteractionMatrix& train,
                   std::span<const std::int32_t> users, const StripeT& stripe,
                   std::int64_t r0, T scale) {
    const auto rows = stripe.rows();
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(users.size()); ++b) {
        const auto row = train.items_of(users[b]);
        auto it = std::lower_bound(row.begin(), row.end(), static_cast<std::int32_t>(r0));
        for (; it != row.end() && *it < r0 + rows; ++it) {
            out.row(b) += scale * stripe.row(*it - r0);
        }
    }
}

// acc += scale * r_u for every batch row (binary ratings).
template <typename T>
void add_signal(Mat<T>& acc, const InteractionMatrix& train,
                std::span<const std::int32_t> users, T scale) {
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(users.size()); ++b) {
        for (const auto i : train.items_of(users[b])) {
            acc(b, i) += scale;
        }
    }
}

template <typename T>
Mat<T> score_impl(const InteractionMatrix& train, const SimilarityGraph& graph,
                  std::span<const std::int32_t> users, std::span<const double> coeffs) {
    const auto batch = static_cast<std::int64_t>(users.size());
    const auto n = graph.n_items();
    const auto order = static_cast<int>(coeffs.size());

    Mat<T> acc = Mat<T>::Zero(batch, n);

    // First multiplication exploits the sparsity of the raw signal r_u.
    graph.for_each_row_block(0, [&](std::int64_t r0, Eigen::Ref<const Matrix> stripe) {
        if constexpr (std::is_same_v<T, double>) {
            scatter_users(acc, train, users, stripe, r0, static_cast<T>(coeffs[order - 1]));
        } else {
            const Mat<T> cast = stripe.cast<T>();
            scatter_users(acc, train, users, cast, r0, static_cast<T>(coeffs[order - 1]));
        }
    });

    // Horner: t <- t*P + a_k*r, finishing with the k=1 multiplication.
    Mat<T> next;
    for (int k = order - 1; k >= 1; --k) {
        add_signal(acc, train, users, static_cast<T>(coeffs[k - 1]));
        next = Mat<T>::Zero(batch, n);
        graph.for_each_row_block(0, [&](std::int64_t r0, Eigen::Ref<const Matrix> stripe) {
            if constexpr (std::is_same_v<T, double>) {
                next.noalias() += acc.middleCols(r0, stripe.rows()) * stripe;
            } else {
                const Mat<T> cast = stripe.cast<T>();
                next.noalias() += acc.middleCols(r0, stripe.rows()) * cast;
            }
        });
        acc.swap(next);
    }
    return acc;
}

}  // namespace

Matrix score_users(const InteractionMatrix& train, const SimilarityGraph& graph,
                   const FilterSpec& filter, std::span<const std::int32_t> users,
                   const ScoreOptions& options) {
    if (graph.n_items() != train.n_items) {
        throw DataError("shape mismatch: graph has " + std::to_string(graph.n_items()) +
                        " items, train matrix has " + std::to_string(train.n_items));
    }
    for (const auto u : users) {
        if (u < 0 || u >= train.n_users) {
            throw DataError("user index out of range: " + std::to_string(u));
        }
    }
    filter.validate();
    const auto coeffs = filter.effective_coeffs();
    if (options.fp32) {
        return score_impl<float>(train, graph, users, coeffs).cast<double>();
    }
    return score_impl<double>(train, graph, users, coeffs);
}

Matrix materialize_filter_matrix(const SimilarityGraph& graph, const FilterSpec& filter) {
    const auto& p = graph.dense();
    const auto coeffs = filter.effective_coeffs();
    Matrix power = p;
    Matrix f = coeffs[0] * p;
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        power = (power * p).eval();
        f += coeffs[k] * power;
    }
    return f;
}

RankedList top_k(std::int32_t user, const Eigen::Ref<const Eigen::RowVectorXd>& scores,
                 std::span<const std::int32_t> seen, std::int64_t k) {
    if (k < 1) {
        throw ConfigError("top_k requires k >= 1");
    }
    const auto n = scores.size();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isnan(scores(j))) {
            throw DataError("NaN score for user " + std::to_string(user));
        }
    }

    std::vector<std::int32_t> candidates;
    candidates.reserve(n - static_cast<Eigen::Index>(seen.size()));
    std::size_t s = 0;
    for (std::int32_t j = 0; j < n; ++j) {
        if (s < seen.size() && seen[s] == j) {
            ++s;
            continue;
        }
        candidates.push_back(j);
    }

    const auto take = std::min<std::int64_t>(k, static_cast<std::int64_t>(candidates.size()));
    const auto by_score = [&](std::int32_t a, std::int32_t b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), by_score);
    candidates.resize(take);

    RankedList list;
    list.user = user;
    list.items = std::move(candidates);
    return list;
}

void write_recommendations(const std::vector<RankedList>& lists, const Matrix& scores,
                           std::span<const std::int32_t> users,
                           const InteractionMatrix& train, std::ostream& out) {
    for (std::size_t b = 0; b < lists.size(); ++b) {
        out << train.user_ids[users[b]] << '\t';
        const auto& items = lists[b].items;
        for (std::size_t r = 0; r < items.size(); ++r) {
            if (r > 0) out << ',';
            out << train.item_ids[items[r]] << ':'
                << format_double(scores(static_cast<Eigen::Index>(b), items[r]));
        }
        out << '\n';
    }
}

}  // namespace polyrec
