#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "polyrec/dense.hpp"
#include "polyrec/errors.hpp"
#include "polyrec/interactions.hpp"

namespace polyrec {

// R~ = D_U^-alpha R D_I^(alpha-1), same sparsity pattern as R. Zero-degree
// rows/columns follow the pseudo-inverse convention 0^x := 0.
struct NormalizedRatings {
    std::int64_t n_users = 0;
    std::int64_t n_items = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;
    double alpha = 0.5;
};

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> degree_vectors(
    const InteractionMatrix& matrix);

NormalizedRatings normalize_asymmetric(const InteractionMatrix& matrix, double alpha);

// P~ = R~^T R~ accumulated row by row into dense storage. Throws
// CapacityError when n_items^2 doubles would exceed the budget.
Matrix item_similarity(const NormalizedRatings& normalized,
                       std::optional<std::int64_t> mem_budget_bytes = std::nullopt);

enum class GraphStorage { dense, blocked };

// Adjusted item-item similarity graph P = P~ ^ (Hadamard s). Dense storage
// keeps the full matrix in memory; blocked storage keeps row stripes in the
// binary cache file and streams them on demand.
class SimilarityGraph {
public:
    std::int64_t n_items() const { return n_items_; }
    double alpha() const { return alpha_; }
    double hadamard_s() const { return s_; }
    GraphStorage storage() const { return storage_; }
    std::int64_t block_rows() const { return block_rows_; }
    const std::filesystem::path& cache_path() const { return cache_path_; }

    const Matrix& dense() const;  // throws ConfigError for blocked storage

    // Visits consecutive row stripes [row0, row0+rows) x n_items in order.
    // Dense storage yields views; blocked storage reads from the cache file.
    void for_each_row_block(
        std::int64_t max_rows,
        const std::function<void(std::int64_t row0, Eigen::Ref<const Matrix>)>& fn) const;

    static SimilarityGraph from_dense(Matrix values, double alpha, double s);

    // Streams the build one stripe at a time directly into `cache_path`.
    static SimilarityGraph build_blocked(const InteractionMatrix& matrix, double alpha,
                                         double s, std::int64_t block_rows,
                                         const std::filesystem::path& cache_path);

    void save(const std::filesystem::path& path) const;
    static SimilarityGraph load(const std::filesystem::path& path, GraphStorage storage);

    // Drops entries below eps (in place; dense only). Off by default everywhere.
    void sparsify(double eps);

    // Power-iteration estimate of the spectral norm; divides the graph by it
    // when rescale is requested. Dense only.
    double rescale_spectrum(int iterations = 100);

private:
    SimilarityGraph() = default;

    GraphStorage storage_ = GraphStorage::dense;
    std::int64_t n_items_ = 0;
    double alpha_ = 0.5;
    double s_ = 1.0;
    Matrix values_;                     // dense storage
    std::filesystem::path cache_path_;  // blocked storage
    std::int64_t block_rows_ = 0;
};

// Entrywise power with 0^s := 0; rejects negative entries.
SimilarityGraph hadamard_power(Matrix values, double s, double alpha);

// Largest |entry| of P - P^T, for symmetry checks.
double max_asymmetry(const Matrix& values);

}  // namespace polyrec
