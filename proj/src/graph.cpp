#include "polyrec/graph.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "polyrec/util.hpp"

namespace polyrec {

static_assert(std::endian::native == std::endian::little,
              "graph cache files are little-endian");

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> degree_vectors(
    const InteractionMatrix& matrix) {
    std::vector<std::int64_t> d_user(matrix.n_users, 0), d_item(matrix.n_items, 0);
    for (std::int64_t u = 0; u < matrix.n_users; ++u) {
        d_user[u] = matrix.row_ptr[u + 1] - matrix.row_ptr[u];
    }
    for (const auto i : matrix.items) d_item[i]++;
    return {std::move(d_user), std::move(d_item)};
}

NormalizedRatings normalize_asymmetric(const InteractionMatrix& matrix, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0,1]");
    }
    const auto [d_user, d_item] = degree_vectors(matrix);

    std::vector<double> user_scale(matrix.n_users), item_scale(matrix.n_items);
    for (std::int64_t u = 0; u < matrix.n_users; ++u) {
        user_scale[u] = d_user[u] > 0 ? std::pow(static_cast<double>(d_user[u]), -alpha) : 0.0;
    }
    for (std::int64_t i = 0; i < matrix.n_items; ++i) {
        item_scale[i] = d_item[i] > 0 ? std::pow(static_cast<double>(d_item[i]), alpha - 1.0) : 0.0;
    }

    NormalizedRatings out;
    out.n_users = matrix.n_users;
    out.n_items = matrix.n_items;
    out.alpha = alpha;
    out.row_ptr = matrix.row_ptr;
    out.col = matrix.items;
    out.val.resize(matrix.items.size());
    for (std::int64_t u = 0; u < matrix.n_users; ++u) {
        for (auto p = matrix.row_ptr[u]; p < matrix.row_ptr[u + 1]; ++p) {
            out.val[p] = user_scale[u] * item_scale[matrix.items[p]];
        }
    }
    return out;
}

namespace {

// Column-major copy of R~ so rows of P~ can be accumulated independently.
struct Csc {
    std::vector<std::int64_t> col_ptr;
    std::vector<std::int32_t> row;
    std::vector<double> val;
};

Csc transpose(const NormalizedRatings& r) {
    Csc t;
    t.col_ptr.assign(r.n_items + 1, 0);
    for (const auto i : r.col) t.col_ptr[i + 1]++;
    for (std::int64_t i = 0; i < r.n_items; ++i) t.col_ptr[i + 1] += t.col_ptr[i];
    t.row.resize(r.col.size());
    t.val.resize(r.col.size());
    auto cursor = t.col_ptr;
    for (std::int64_t u = 0; u < r.n_users; ++u) {
        for (auto p = r.row_ptr[u]; p < r.row_ptr[u + 1]; ++p) {
            const auto i = r.col[p];
            const auto q = cursor[i]++;
            t.row[q] = static_cast<std::int32_t>(u);
            t.val[q] = r.val[p];
        }
    }
    return t;
}

// One row of P~ = R~^T R~: sum over users of item `i`, scattering the user's
// normalized row. Accumulation order is fixed by the CSC/CSR layouts, so the
// result does not depend on threading or block size.
inline void accumulate_row(const NormalizedRatings& r, const Csc& t, std::int64_t i,
                           double* row) {
    for (auto q = t.col_ptr[i]; q < t.col_ptr[i + 1]; ++q) {
        const auto u = t.row[q];
        const double w_ui = t.val[q];
        for (auto p = r.row_ptr[u]; p < r.row_ptr[u + 1]; ++p) {
            row[r.col[p]] += w_ui * r.val[p];
        }
    }
}

void hadamard_in_place(double* data, std::int64_t count, double s) {
    if (s == 1.0) return;
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < count; ++p) {
        data[p] = data[p] > 0.0 ? std::pow(data[p], s) : 0.0;
    }
}

}  // namespace

Matrix item_similarity(const NormalizedRatings& normalized,
                       std::optional<std::int64_t> mem_budget_bytes) {
    const auto n = normalized.n_items;
    const auto needed = static_cast<std::int64_t>(n) * n * static_cast<std::int64_t>(sizeof(double));
    if (mem_budget_bytes && needed > *mem_budget_bytes) {
        throw CapacityError("dense similarity graph needs " + std::to_string(needed) +
                            " bytes, over the configured budget of " +
                            std::to_string(*mem_budget_bytes) +
                            " bytes; switch to blocked storage (--storage blocked)");
    }
    const Csc t = transpose(normalized);
    Matrix p = Matrix::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
        accumulate_row(normalized, t, i, p.data() + i * n);
    }
    return p;
}

SimilarityGraph hadamard_power(Matrix values, double s, double alpha) {
    if (!(s > 0.0)) {
        throw ConfigError("hadamard exponent s must be positive");
    }
    const auto count = static_cast<std::int64_t>(values.size());
    const double* data = values.data();
    for (std::int64_t p = 0; p < count; ++p) {
        if (data[p] < 0.0) {
            throw DataError("negative similarity entry reached hadamard_power");
        }
    }
    hadamard_in_place(values.data(), count, s);
    return SimilarityGraph::from_dense(std::move(values), alpha, s);
}

double max_asymmetry(const Matrix& values) {
    const auto n = values.rows();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            worst = std::max(worst, std::abs(values(i, j) - values(j, i)));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Cache file: magic, version, storage, n_items, alpha, s, block_rows,
// payload crc32; then n_items^2 row-major little-endian doubles.

namespace {

constexpr char kMagic[8] = {'P', 'R', 'G', 'R', 'A', 'P', 'H', '1'};
constexpr std::uint32_t kVersion = 1;

struct CacheHeader {
    char magic[8];
    std::uint32_t version;
    std::uint8_t storage;
    std::uint8_t pad[3];
    std::int64_t n_items;
    double alpha;
    double s;
    std::int64_t block_rows;
    std::uint32_t payload_crc32;
    std::uint32_t reserved;
};
static_assert(sizeof(CacheHeader) == 56);

constexpr auto kCrcOffset = offsetof(CacheHeader, payload_crc32);

CacheHeader read_header(std::istream& in, const std::filesystem::path& path) {
    CacheHeader h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in || std::memcmp(h.magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError("not a graph cache file: " + path.string());
    }
    if (h.version != kVersion) {
        throw DataError("unsupported graph cache version in " + path.string());
    }
    return h;
}

}  // namespace

const Matrix& SimilarityGraph::dense() const {
    if (storage_ != GraphStorage::dense) {
        throw ConfigError("graph uses blocked storage; dense() is unavailable");
    }
    return values_;
}

SimilarityGraph SimilarityGraph::from_dense(Matrix values, double alpha, double s) {
    if (values.rows() != values.cols()) {
        throw DataError("similarity graph must be square");
    }
    SimilarityGraph g;
    g.storage_ = GraphStorage::dense;
    g.n_items_ = values.rows();
    g.alpha_ = alpha;
    g.s_ = s;
    g.values_ = std::move(values);
    return g;
}

void SimilarityGraph::for_each_row_block(
    std::int64_t max_rows,
    const std::function<void(std::int64_t, Eigen::Ref<const Matrix>)>& fn) const {
    const auto stripe = max_rows > 0 ? max_rows
                        : storage_ == GraphStorage::blocked ? block_rows_
                                                            : n_items_;
    if (storage_ == GraphStorage::dense) {
        for (std::int64_t r0 = 0; r0 < n_items_; r0 += stripe) {
            const auto rows = std::min(stripe, n_items_ - r0);
            fn(r0, values_.middleRows(r0, rows));
        }
        return;
    }
    std::ifstream in(cache_path_, std::ios::binary);
    if (!in) {
        throw DataError("cannot open graph cache: " + cache_path_.string());
    }
    in.seekg(sizeof(CacheHeader));
    Matrix buffer;
    for (std::int64_t r0 = 0; r0 < n_items_; r0 += stripe) {
        const auto rows = std::min(stripe, n_items_ - r0);
        buffer.resize(rows, n_items_);
        in.read(reinterpret_cast<char*>(buffer.data()),
                static_cast<std::streamsize>(rows * n_items_ * sizeof(double)));
        if (!in) {
            throw DataError("truncated graph cache: " + cache_path_.string());
        }
        fn(r0, buffer);
    }
}

SimilarityGraph SimilarityGraph::build_blocked(const InteractionMatrix& matrix, double alpha,
                                               double s, std::int64_t block_rows,
                                               const std::filesystem::path& cache_path) {
    if (block_rows <= 0) {
        throw ConfigError("block_rows must be positive");
    }
    if (!(s > 0.0)) {
        throw ConfigError("hadamard exponent s must be positive");
    }
    const NormalizedRatings r = normalize_asymmetric(matrix, alpha);
    const Csc t = transpose(r);
    const auto n = r.n_items;

    std::fstream out(cache_path,
                     std::ios::binary | std::ios::in | std::ios::out | std::ios::trunc);
    if (!out) {
        throw DataError("cannot create graph cache: " + cache_path.string());
    }
    CacheHeader h{};
    std::memcpy(h.magic, kMagic, sizeof(kMagic));
    h.version = kVersion;
    h.storage = 1;
    h.n_items = n;
    h.alpha = alpha;
    h.s = s;
    h.block_rows = block_rows;
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));

    Matrix stripe;
    std::uint32_t crc = 0;
    for (std::int64_t r0 = 0; r0 < n; r0 += block_rows) {
        const auto rows = std::min(block_rows, n - r0);
        stripe.setZero(rows, n);
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < rows; ++i) {
            accumulate_row(r, t, r0 + i, stripe.data() + i * n);
        }
        hadamard_in_place(stripe.data(), rows * n, s);
        const auto bytes = static_cast<std::size_t>(rows * n * sizeof(double));
        crc = crc32_bytes({reinterpret_cast<const std::byte*>(stripe.data()), bytes}, crc);
        out.write(reinterpret_cast<const char*>(stripe.data()),
                  static_cast<std::streamsize>(bytes));
    }
    out.seekp(kCrcOffset);
    out.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    out.flush();
    if (!out) {
        throw DataError("failed writing graph cache: " + cache_path.string());
    }

    SimilarityGraph g;
    g.storage_ = GraphStorage::blocked;
    g.n_items_ = n;
    g.alpha_ = alpha;
    g.s_ = s;
    g.cache_path_ = cache_path;
    g.block_rows_ = block_rows;
    return g;
}

void SimilarityGraph::save(const std::filesystem::path& path) const {
    if (storage_ == GraphStorage::blocked) {
        if (std::filesystem::absolute(path) != std::filesystem::absolute(cache_path_)) {
            std::filesystem::copy_file(cache_path_, path,
                                       std::filesystem::copy_options::overwrite_existing);
        }
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write graph cache: " + path.string());
    }
    CacheHeader h{};
    std::memcpy(h.magic, kMagic, sizeof(kMagic));
    h.version = kVersion;
    h.storage = 0;
    h.n_items = n_items_;
    h.alpha = alpha_;
    h.s = s_;
    h.block_rows = 0;
    const auto bytes = static_cast<std::size_t>(values_.size()) * sizeof(double);
    h.payload_crc32 =
        crc32_bytes({reinterpret_cast<const std::byte*>(values_.data()), bytes});
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(bytes));
    if (!out) {
        throw DataError("failed writing graph cache: " + path.string());
    }
}

SimilarityGraph SimilarityGraph::load(const std::filesystem::path& path, GraphStorage storage) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open graph cache: " + path.string());
    }
    const CacheHeader h = read_header(in, path);
    const auto n = h.n_items;

    SimilarityGraph g;
    g.n_items_ = n;
    g.alpha_ = h.alpha;
    g.s_ = h.s;

    if (storage == GraphStorage::dense) {
        g.storage_ = GraphStorage::dense;
        g.values_.resize(n, n);
        in.read(reinterpret_cast<char*>(g.values_.data()),
                static_cast<std::streamsize>(n * n * sizeof(double)));
        if (!in) {
            throw DataError("truncated graph cache: " + path.string());
        }
        const auto bytes = static_cast<std::size_t>(n) * n * sizeof(double);
        const auto crc =
            crc32_bytes({reinterpret_cast<const std::byte*>(g.values_.data()), bytes});
        if (crc != h.payload_crc32) {
            throw DataError("graph cache checksum mismatch: " + path.string());
        }
        return g;
    }

    // Blocked: verify the checksum with one streaming pass, keep the handle.
    g.storage_ = GraphStorage::blocked;
    g.cache_path_ = path;
    g.block_rows_ = h.block_rows > 0 ? h.block_rows : 4096;
    std::vector<char> buf(1 << 20);
    std::uint32_t crc = 0;
    std::int64_t remaining = n * n * static_cast<std::int64_t>(sizeof(double));
    while (remaining > 0) {
        const auto chunk = std::min<std::int64_t>(remaining, static_cast<std::int64_t>(buf.size()));
        in.read(buf.data(), chunk);
        if (!in) {
            throw DataError("truncated graph cache: " + path.string());
        }
        crc = crc32_bytes({reinterpret_cast<const std::byte*>(buf.data()),
                           static_cast<std::size_t>(chunk)},
                          crc);
        remaining -= chunk;
    }
    if (crc != h.payload_crc32) {
        throw DataError("graph cache checksum mismatch: " + path.string());
    }
    return g;
}

void SimilarityGraph::sparsify(double eps) {
    if (storage_ != GraphStorage::dense) {
        throw ConfigError("sparsify requires dense storage");
    }
    if (eps <= 0.0) return;
    values_ = (values_.array() < eps).select(0.0, values_);
}

double SimilarityGraph::rescale_spectrum(int iterations) {
    if (storage_ != GraphStorage::dense) {
        throw ConfigError("spectral rescaling requires dense storage");
    }
    if (n_items_ == 0) return 0.0;
    std::mt19937_64 rng(0x5CA1EULL);
    std::normal_distribution<double> gauss;
    Vector v(n_items_);
    for (auto& x : v) x = gauss(rng);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = values_ * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;  // zero graph: nothing to rescale
        estimate = norm;
        v = w / norm;
    }
    values_ /= estimate;
    return estimate;
}

}  // namespace polyrec
