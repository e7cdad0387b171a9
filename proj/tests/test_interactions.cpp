#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "polyrec/interactions.hpp"
#include "polyrec/util.hpp"

using namespace polyrec;

namespace {

InteractionMatrix from_text(const std::string& text, InputFormat format = InputFormat::adjacency) {
    std::istringstream in(text);
    return parse_interactions(in, format);
}

InteractionMatrix random_matrix(std::mt19937_64& rng, int max_users = 120, int max_items = 80) {
    std::uniform_int_distribution<int> users_dist(1, max_users);
    std::uniform_int_distribution<int> items_dist(1, max_items);
    const int n_users = users_dist(rng);
    const int n_items = items_dist(rng);
    std::ostringstream text;
    for (int u = 0; u < n_users; ++u) {
        text << u;
        std::uniform_int_distribution<int> deg_dist(0, std::min(n_items, 30));
        const int deg = deg_dist(rng);
        std::set<int> row;
        std::uniform_int_distribution<int> item_dist(0, n_items - 1);
        while (static_cast<int>(row.size()) < deg) row.insert(item_dist(rng));
        for (const int i : row) text << ' ' << i;
        text << '\n';
    }
    return from_text(text.str());
}

}  // namespace

TEST_CASE("adjacency line maps user to its items") {
    const auto m = from_text("0 5 7\n");
    CHECK(m.n_users == 1);
    CHECK(m.n_items == 2);
    CHECK(m.nnz() == 2);
    CHECK(m.user_ids[0] == "0");
    // first-appearance index order
    CHECK(m.item_ids[0] == "5");
    CHECK(m.item_ids[1] == "7");
    CHECK(m.contains(0, 0));
    CHECK(m.contains(0, 1));
}

TEST_CASE("adjacency skips comments and blank lines, allows itemless users") {
    const auto m = from_text("# comment\n\n0 3\n1\n");
    CHECK(m.n_users == 2);
    CHECK(m.n_items == 1);
    CHECK(m.items_of(1).empty());
}

TEST_CASE("adjacency rejects non-integer tokens with the line number") {
    CHECK_THROWS_AS(from_text("0 1\nx 2\n"), ParseError);
    try {
        from_text("0 1\nx 2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(from_text("0 1 oops\n"), ParseError);
}

TEST_CASE("triplet duplicates collapse to one entry") {
    const auto m = from_text("u1\ti3\nu1\ti3\n", InputFormat::triplet);
    CHECK(m.n_users == 1);
    CHECK(m.n_items == 1);
    CHECK(m.nnz() == 1);
    CHECK(m.user_ids[0] == "u1");
    CHECK(m.item_ids[0] == "i3");
}

TEST_CASE("triplet ignores trailing columns and rejects malformed lines") {
    const auto m = from_text("u1\ti3\t4.5\textra\n", InputFormat::triplet);
    CHECK(m.nnz() == 1);
    CHECK_THROWS_AS(from_text("lonely\n", InputFormat::triplet), ParseError);
    CHECK_THROWS_AS(from_text("u1\t\n", InputFormat::triplet), ParseError);
}

TEST_CASE("format names") {
    CHECK(parse_format_name("adjacency") == InputFormat::adjacency);
    CHECK(parse_format_name("triplet") == InputFormat::triplet);
    CHECK_THROWS_AS(parse_format_name("csv"), ConfigError);
}

TEST_CASE("dataset_stats density") {
    const auto one = from_text("0 0\n");
    CHECK(dataset_stats(one).density == 1.0);

    // 2 users x 2 items with a single interaction
    InteractionMatrix m;
    m.n_users = 2;
    m.n_items = 2;
    m.row_ptr = {0, 1, 1};
    m.items = {0};
    CHECK(dataset_stats(m).density == doctest::Approx(0.25).epsilon(1e-15));

    InteractionMatrix empty;
    empty.n_users = 0;
    empty.n_items = 0;
    empty.row_ptr = {0};
    CHECK_THROWS_AS(dataset_stats(empty), DataError);
}

TEST_CASE("split fraction validation") {
    SplitSpec bad{0.5, 0.5, 0.5, 1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    SplitSpec negative{1.2, -0.1, -0.1, 1};
    CHECK_THROWS_AS(negative.validate(), ConfigError);
    SplitSpec ok{0.7, 0.2, 0.1, 1};
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("floor split counts: 10 interactions at 70/20/10") {
    std::ostringstream text;
    text << 0;
    for (int i = 0; i < 10; ++i) text << ' ' << i;
    text << '\n';
    const auto m = from_text(text.str());
    const auto split = split_holdout(m, SplitSpec{0.7, 0.2, 0.1, 99});
    CHECK(split.train.items_of(0).size() == 7);
    CHECK(split.test.items_of(0).size() == 2);
    CHECK(split.val.items_of(0).size() == 1);
}

TEST_CASE("single interaction goes to train") {
    const auto m = from_text("0 42\n");
    const auto split = split_holdout(m, SplitSpec{0.7, 0.2, 0.1, 5});
    CHECK(split.train.nnz() == 1);
    CHECK(split.test.nnz() == 0);
    CHECK(split.val.nnz() == 0);
}

TEST_CASE("splits keep the full index space") {
    const auto m = from_text("0 1 2 3\n1 4\n");
    const auto split = split_holdout(m, SplitSpec{0.7, 0.2, 0.1, 1});
    for (const auto* part : {&split.train, &split.test, &split.val}) {
        CHECK(part->n_users == m.n_users);
        CHECK(part->n_items == m.n_items);
        CHECK(part->user_ids == m.user_ids);
        CHECK(part->item_ids == m.item_ids);
    }
}

TEST_CASE("partition property on random matrices") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_matrix(rng);
        const SplitSpec spec{0.7, 0.2, 0.1, rng()};
        const auto split = split_holdout(m, spec);
        for (std::int64_t u = 0; u < m.n_users; ++u) {
            const auto row = m.items_of(u);
            const std::set<std::int32_t> all(row.begin(), row.end());
            const auto tr = split.train.items_of(u);
            const auto te = split.test.items_of(u);
            const auto va = split.val.items_of(u);

            const auto n = static_cast<std::int64_t>(all.size());
            CHECK(static_cast<std::int64_t>(te.size()) ==
                  static_cast<std::int64_t>(std::floor(spec.test_frac * static_cast<double>(n))));
            CHECK(static_cast<std::int64_t>(va.size()) ==
                  static_cast<std::int64_t>(std::floor(spec.val_frac * static_cast<double>(n))));
            CHECK(tr.size() + te.size() + va.size() == all.size());

            std::set<std::int32_t> merged;
            merged.insert(tr.begin(), tr.end());
            merged.insert(te.begin(), te.end());
            merged.insert(va.begin(), va.end());
            CHECK(merged == all);  // disjoint union (sizes already matched)
        }
    }
}

TEST_CASE("same seed gives byte-identical splits, different seed does not") {
    std::mt19937_64 rng(7);
    const auto m = random_matrix(rng, 120, 80);
    const SplitSpec spec{0.7, 0.2, 0.1, 123456};
    const auto a = split_holdout(m, spec);
    const auto b = split_holdout(m, spec);
    std::ostringstream sa, sb, ta, tb;
    serialize_adjacency(a.train, sa);
    serialize_adjacency(b.train, sb);
    serialize_adjacency(a.test, ta);
    serialize_adjacency(b.test, tb);
    CHECK(sa.str() == sb.str());
    CHECK(ta.str() == tb.str());

    const auto c = split_holdout(m, SplitSpec{0.7, 0.2, 0.1, 654321});
    std::ostringstream sc;
    serialize_adjacency(c.train, sc);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("parse of serialize is the identity") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 25; ++trial) {
        const auto m = random_matrix(rng);
        std::ostringstream out;
        serialize_adjacency(m, out);
        const auto back = from_text(out.str());
        CHECK(back == m);
    }
}

TEST_CASE("aligned parsing shares one id space") {
    const auto tmp = std::filesystem::temp_directory_path() / "polyrec_test_aligned";
    std::filesystem::create_directories(tmp);
    {
        std::ofstream train(tmp / "train.txt");
        train << "0 10 11\n1 12\n";
        std::ofstream test(tmp / "test.txt");
        test << "0 13\n1 10\n";
    }
    const auto parts = parse_aligned_files({tmp / "train.txt", tmp / "test.txt", {}},
                                           InputFormat::adjacency);
    REQUIRE(parts.size() == 3);
    CHECK(parts[0].n_users == 2);
    CHECK(parts[0].n_items == 4);  // 10,11,12,13 across both files
    CHECK(parts[1].n_users == 2);
    CHECK(parts[1].n_items == 4);
    CHECK(parts[2].n_users == 2);
    CHECK(parts[2].nnz() == 0);
    CHECK(parts[0].item_ids == parts[1].item_ids);
    // "13" first appears in the test file, after all train items
    CHECK(parts[1].contains(0, 3));
    std::filesystem::remove_all(tmp);
}

TEST_CASE("split manifest records generator, seed, and checksum") {
    const auto tmp = std::filesystem::temp_directory_path() / "polyrec_test_manifest";
    std::filesystem::create_directories(tmp);
    const auto data = tmp / "data.txt";
    {
        std::ofstream out(data);
        out << "0 1 2 3 4 5\n";
    }
    const auto m = parse_interactions_file(data, InputFormat::adjacency);
    const SplitSpec spec{0.7, 0.2, 0.1, 77};
    const auto split = split_holdout(m, spec);
    write_split_manifest(tmp / "manifest.txt", spec, split, crc32_file(data));

    std::ifstream in(tmp / "manifest.txt");
    const std::string text((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    CHECK(text.find("generator mt19937_64-fisher-yates") != std::string::npos);
    CHECK(text.find("seed 77") != std::string::npos);
    CHECK(text.find("input_crc32 ") != std::string::npos);
    CHECK(text.find("n_train 4\n") != std::string::npos);  // 5 - floor(1.0) - floor(0.5)
    std::filesystem::remove_all(tmp);
}

TEST_CASE("missing file raises a data error") {
    CHECK_THROWS_AS(parse_interactions_file("/nonexistent/nope.txt", InputFormat::adjacency),
                    DataError);
}
