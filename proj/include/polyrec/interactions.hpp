#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "polyrec/errors.hpp"

namespace polyrec {

enum class InputFormat { adjacency, triplet };

InputFormat parse_format_name(const std::string& name);
std::string format_name(InputFormat format);

// Sparse binary user x item implicit-feedback matrix. Entries are stored as
// CSR with item indices sorted ascending inside each user row. External ids
// are kept verbatim; internal indices are assigned in first-appearance order.
struct InteractionMatrix {
    std::int64_t n_users = 0;
    std::int64_t n_items = 0;
    std::vector<std::int64_t> row_ptr;  // size n_users + 1
    std::vector<std::int32_t> items;    // size nnz, sorted per row

    std::vector<std::string> user_ids;  // index -> external id
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, std::int32_t> user_index;
    std::unordered_map<std::string, std::int32_t> item_index;

    std::int64_t nnz() const { return static_cast<std::int64_t>(items.size()); }

    std::span<const std::int32_t> items_of(std::int64_t user) const {
        return {items.data() + row_ptr[user],
                static_cast<std::size_t>(row_ptr[user + 1] - row_ptr[user])};
    }

    bool contains(std::int64_t user, std::int32_t item) const;

    bool operator==(const InteractionMatrix& other) const {
        return n_users == other.n_users && n_items == other.n_items &&
               row_ptr == other.row_ptr && items == other.items &&
               user_ids == other.user_ids && item_ids == other.item_ids;
    }
};

struct DatasetStats {
    std::int64_t n_users = 0;
    std::int64_t n_items = 0;
    std::int64_t n_interactions = 0;
    double density = 0.0;
};

struct SplitSpec {
    double train_frac = 0.7;
    double test_frac = 0.2;
    double val_frac = 0.1;
    std::uint64_t seed = 42;

    void validate() const;  // nonnegative fractions summing to 1 within 1e-12
};

struct Split {
    InteractionMatrix train;
    InteractionMatrix test;
    InteractionMatrix val;
};

InteractionMatrix parse_interactions(std::istream& in, InputFormat format);
InteractionMatrix parse_interactions_file(const std::filesystem::path& path, InputFormat format);

// Parses several files into one shared id space so the returned matrices have
// identical dimensions and id maps. Empty paths yield empty matrices.
std::vector<InteractionMatrix> parse_aligned_files(
    const std::vector<std::filesystem::path>& paths, InputFormat format);

DatasetStats dataset_stats(const InteractionMatrix& matrix);

// Per-user seeded shuffle + floor partition; remainder goes to train. The
// three outputs share the input's dimensions and id maps.
Split split_holdout(const InteractionMatrix& matrix, const SplitSpec& spec);

// One line per user: external user id followed by item external ids in
// ascending internal-index order; parse(serialize(m)) == m.
void serialize_adjacency(const InteractionMatrix& matrix, std::ostream& out);
void write_adjacency_file(const InteractionMatrix& matrix, const std::filesystem::path& path);

// Name of the shuffle generator recorded in split manifests.
extern const char* const kSplitGeneratorName;

void write_split_manifest(const std::filesystem::path& path, const SplitSpec& spec,
                          const Split& split, std::uint32_t input_checksum);

}  // namespace polyrec
