#include "polyrec/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "polyrec/util.hpp"

namespace polyrec {

const char* const kSplitGeneratorName = "mt19937_64-fisher-yates";

InputFormat parse_format_name(const std::string& name) {
    if (name == "adjacency") return InputFormat::adjacency;
    if (name == "triplet") return InputFormat::triplet;
    throw ConfigError("unknown interaction format: " + name);
}

std::string format_name(InputFormat format) {
    return format == InputFormat::adjacency ? "adjacency" : "triplet";
}

bool InteractionMatrix::contains(std::int64_t user, std::int32_t item) const {
    const auto row = items_of(user);
    return std::binary_search(row.begin(), row.end(), item);
}

void SplitSpec::validate() const {
    if (train_frac < 0.0 || test_frac < 0.0 || val_frac < 0.0) {
        throw ConfigError("split fractions must be nonnegative");
    }
    if (std::abs(train_frac + test_frac + val_frac - 1.0) > 1e-12) {
        throw ConfigError("split fractions must sum to 1");
    }
}

namespace {

// Assigns internal indices in first-appearance order across all parsed files.
struct IdSpace {
    std::vector<std::string> user_ids, item_ids;
    std::unordered_map<std::string, std::int32_t> user_index, item_index;

    std::int32_t user(const std::string& ext) {
        auto [it, inserted] = user_index.try_emplace(ext, static_cast<std::int32_t>(user_ids.size()));
        if (inserted) user_ids.push_back(ext);
        return it->second;
    }
    std::int32_t item(const std::string& ext) {
        auto [it, inserted] = item_index.try_emplace(ext, static_cast<std::int32_t>(item_ids.size()));
        if (inserted) item_ids.push_back(ext);
        return it->second;
    }
};

bool is_integer_token(const std::string& token) {
    if (token.empty()) return false;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool skip_line(const std::string& line) {
    const auto first = line.find_first_not_of(" \t");
    return first == std::string::npos || line[first] == '#';
}

using Entry = std::pair<std::int32_t, std::int32_t>;

void parse_into(std::istream& in, InputFormat format, IdSpace& ids, std::vector<Entry>& entries) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (skip_line(line)) continue;

        if (format == InputFormat::adjacency) {
            std::istringstream tokens(line);
            std::string token;
            if (!(tokens >> token)) continue;
            if (!is_integer_token(token)) {
                throw ParseError("adjacency user id is not an integer: '" + token + "'", line_no);
            }
            const std::int32_t u = ids.user(token);
            while (tokens >> token) {
                if (!is_integer_token(token)) {
                    throw ParseError("adjacency item id is not an integer: '" + token + "'",
                                     line_no);
                }
                entries.emplace_back(u, ids.item(token));
            }
        } else {
            const auto tab1 = line.find('\t');
            if (tab1 == std::string::npos || tab1 == 0) {
                throw ParseError("triplet line needs user<TAB>item", line_no);
            }
            const auto tab2 = line.find('\t', tab1 + 1);
            const auto item_len = (tab2 == std::string::npos ? line.size() : tab2) - (tab1 + 1);
            if (item_len == 0) {
                throw ParseError("triplet line has an empty item id", line_no);
            }
            const std::int32_t u = ids.user(line.substr(0, tab1));
            entries.emplace_back(u, ids.item(line.substr(tab1 + 1, item_len)));
        }
    }
}

InteractionMatrix finalize(IdSpace ids, std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

    InteractionMatrix m;
    m.n_users = static_cast<std::int64_t>(ids.user_ids.size());
    m.n_items = static_cast<std::int64_t>(ids.item_ids.size());
    m.user_ids = std::move(ids.user_ids);
    m.item_ids = std::move(ids.item_ids);
    m.user_index = std::move(ids.user_index);
    m.item_index = std::move(ids.item_index);

    m.row_ptr.assign(m.n_users + 1, 0);
    for (const auto& [u, i] : entries) m.row_ptr[u + 1]++;
    for (std::int64_t u = 0; u < m.n_users; ++u) m.row_ptr[u + 1] += m.row_ptr[u];
    m.items.reserve(entries.size());
    for (const auto& [u, i] : entries) m.items.push_back(i);
    return m;
}

InteractionMatrix with_space_of(const InteractionMatrix& base, std::vector<Entry> entries) {
    IdSpace ids;
    ids.user_ids = base.user_ids;
    ids.item_ids = base.item_ids;
    ids.user_index = base.user_index;
    ids.item_index = base.item_index;
    return finalize(std::move(ids), std::move(entries));
}

}  // namespace

InteractionMatrix parse_interactions(std::istream& in, InputFormat format) {
    IdSpace ids;
    std::vector<Entry> entries;
    parse_into(in, format, ids, entries);
    return finalize(std::move(ids), std::move(entries));
}

InteractionMatrix parse_interactions_file(const std::filesystem::path& path, InputFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open interaction file: " + path.string());
    }
    return parse_interactions(in, format);
}

std::vector<InteractionMatrix> parse_aligned_files(const std::vector<std::filesystem::path>& paths,
                                                   InputFormat format) {
    IdSpace ids;
    std::vector<std::vector<Entry>> per_file(paths.size());
    for (std::size_t f = 0; f < paths.size(); ++f) {
        if (paths[f].empty()) continue;
        std::ifstream in(paths[f]);
        if (!in) {
            throw DataError("cannot open interaction file: " + paths[f].string());
        }
        parse_into(in, format, ids, per_file[f]);
    }
    std::vector<InteractionMatrix> out;
    out.reserve(paths.size());
    InteractionMatrix space;  // holds the final shared id maps
    space.user_ids = ids.user_ids;
    space.item_ids = ids.item_ids;
    space.user_index = ids.user_index;
    space.item_index = ids.item_index;
    for (auto& entries : per_file) {
        out.push_back(with_space_of(space, std::move(entries)));
    }
    return out;
}

DatasetStats dataset_stats(const InteractionMatrix& matrix) {
    if (matrix.nnz() == 0) {
        throw DataError("empty dataset: no interactions");
    }
    DatasetStats stats;
    stats.n_users = matrix.n_users;
    stats.n_items = matrix.n_items;
    stats.n_interactions = matrix.nnz();
    stats.density = static_cast<double>(stats.n_interactions) /
                    (static_cast<double>(stats.n_users) * static_cast<double>(stats.n_items));
    return stats;
}

namespace {

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

void fisher_yates(std::vector<std::int32_t>& values, std::mt19937_64& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(bounded_draw(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace

Split split_holdout(const InteractionMatrix& matrix, const SplitSpec& spec) {
    spec.validate();

    std::vector<Entry> train_e, test_e, val_e;
    train_e.reserve(matrix.items.size());
    std::vector<std::int32_t> shuffled;
    for (std::int64_t u = 0; u < matrix.n_users; ++u) {
        const auto row = matrix.items_of(u);
        shuffled.assign(row.begin(), row.end());
        std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(u) + 1)));
        fisher_yates(shuffled, rng);

        const auto n = static_cast<std::int64_t>(shuffled.size());
        const auto n_test = static_cast<std::int64_t>(std::floor(spec.test_frac * n));
        const auto n_val = static_cast<std::int64_t>(std::floor(spec.val_frac * n));
        const auto n_train = n - n_test - n_val;

        const auto uu = static_cast<std::int32_t>(u);
        for (std::int64_t p = 0; p < n; ++p) {
            auto& dst = p < n_train ? train_e : (p < n_train + n_test ? test_e : val_e);
            dst.emplace_back(uu, shuffled[p]);
        }
    }

    Split split;
    split.train = with_space_of(matrix, std::move(train_e));
    split.test = with_space_of(matrix, std::move(test_e));
    split.val = with_space_of(matrix, std::move(val_e));
    return split;
}

void serialize_adjacency(const InteractionMatrix& matrix, std::ostream& out) {
    for (std::int64_t u = 0; u < matrix.n_users; ++u) {
        out << matrix.user_ids[u];
        for (const auto i : matrix.items_of(u)) {
            out << ' ' << matrix.item_ids[i];
        }
        out << '\n';
    }
}

void write_adjacency_file(const InteractionMatrix& matrix, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: keep '\n' on all platforms
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    serialize_adjacency(matrix, out);
}

void write_split_manifest(const std::filesystem::path& path, const SplitSpec& spec,
                          const Split& split, std::uint32_t input_checksum) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write manifest: " + path.string());
    }
    out << "schema_version " << 1 << '\n'
        << "generator " << kSplitGeneratorName << '\n'
        << "seed " << spec.seed << '\n'
        << "train_frac " << format_double(spec.train_frac) << '\n'
        << "test_frac " << format_double(spec.test_frac) << '\n'
        << "val_frac " << format_double(spec.val_frac) << '\n'
        << "input_crc32 " << input_checksum << '\n'
        << "n_users " << split.train.n_users << '\n'
        << "n_items " << split.train.n_items << '\n'
        << "n_train " << split.train.nnz() << '\n'
        << "n_test " << split.test.nnz() << '\n'
        << "n_val " << split.val.nnz() << '\n';
}

}  // namespace polyrec
