#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "polyrec/pipeline.hpp"
#include "polyrec/util.hpp"

using namespace polyrec;

namespace {

// Clustered synthetic dataset: users mostly stay inside one item cluster.
std::string synth_dataset(int n_users, int n_items, int n_clusters, int degree,
                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const int cluster_size = n_items / n_clusters;
    std::ostringstream text;
    for (int u = 0; u < n_users; ++u) {
        const int c = static_cast<int>(rng() % n_clusters);
        std::set<int> items;
        while (static_cast<int>(items.size()) < degree) {
            if (coin(rng) < 0.9) {
                items.insert(c * cluster_size + static_cast<int>(rng() % cluster_size));
            } else {
                items.insert(static_cast<int>(rng() % n_items));
            }
        }
        text << u;
        for (const int i : items) text << ' ' << i;
        text << '\n';
    }
    return text.str();
}

std::filesystem::path write_temp_dataset(const std::string& name, const std::string& content) {
    const auto dir = std::filesystem::temp_directory_path() / "polyrec_test_pipeline";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

RunConfig base_config(const std::filesystem::path& dataset) {
    RunConfig config;
    config.dataset = dataset;
    config.split.seed = 11;
    config.seed = 11;
    config.threads = 2;
    config.out_dir = std::filesystem::temp_directory_path() / "polyrec_test_pipeline" / "out";
    return config;
}

std::string file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("end-to-end run beats chance on clustered data and is deterministic") {
    const auto dataset = write_temp_dataset("clusters.txt", synth_dataset(300, 400, 8, 12, 5));
    auto config = base_config(dataset);
    config.alpha = 0.6;
    config.hadamard_s = 0.8;

    const auto first = run_pipeline(config);
    CHECK(first.report.recall > 0.2);
    CHECK(first.report.ndcg > 0.05);
    CHECK(first.report.n_evaluated_users > 0);

    const auto second = run_pipeline(config);
    CHECK(first.report.recall == second.report.recall);
    CHECK(first.report.ndcg == second.report.ndcg);
    CHECK(first.report.to_json(false).dump() == second.report.to_json(false).dump());
}

TEST_CASE("ideal_approx with beta 0 equals the linear filter") {
    const auto dataset = write_temp_dataset("degenerate.txt", synth_dataset(120, 150, 5, 10, 9));
    auto linear_cfg = base_config(dataset);
    linear_cfg.kind = FilterKind::linear;
    auto blend_cfg = base_config(dataset);
    blend_cfg.kind = FilterKind::ideal_approx;
    blend_cfg.tau = 0.1;
    blend_cfg.beta = 0.0;

    const auto a = run_pipeline(linear_cfg);
    const auto b = run_pipeline(blend_cfg);
    CHECK(std::abs(a.report.recall - b.report.recall) <= 1e-12);
    CHECK(std::abs(a.report.ndcg - b.report.ndcg) <= 1e-12);
}

TEST_CASE("blocked storage reproduces the dense run") {
    const auto dataset = write_temp_dataset("blocked.txt", synth_dataset(100, 120, 4, 9, 13));
    auto dense_cfg = base_config(dataset);
    auto blocked_cfg = base_config(dataset);
    blocked_cfg.storage = GraphStorage::blocked;
    blocked_cfg.block_rows = 17;

    const auto a = run_pipeline(dense_cfg);
    const auto b = run_pipeline(blocked_cfg);
    CHECK(std::abs(a.report.recall - b.report.recall) <= 1e-12);
    CHECK(std::abs(a.report.ndcg - b.report.ndcg) <= 1e-12);
}

TEST_CASE("pre-split files reproduce the in-process split") {
    const auto dataset = write_temp_dataset("presplit.txt", synth_dataset(90, 100, 4, 8, 21));
    auto config = base_config(dataset);

    // write the split to files, then run from them
    const auto matrix = parse_interactions_file(dataset, InputFormat::adjacency);
    const auto split = split_holdout(matrix, config.split);
    const auto dir = std::filesystem::temp_directory_path() / "polyrec_test_pipeline";
    write_adjacency_file(split.train, dir / "pre_train.txt");
    write_adjacency_file(split.test, dir / "pre_test.txt");
    write_adjacency_file(split.val, dir / "pre_val.txt");

    RunConfig file_cfg = config;
    file_cfg.dataset.clear();
    file_cfg.train_file = dir / "pre_train.txt";
    file_cfg.test_file = dir / "pre_test.txt";
    file_cfg.val_file = dir / "pre_val.txt";

    const auto a = run_pipeline(config);
    const auto b = run_pipeline(file_cfg);
    CHECK(std::abs(a.report.recall - b.report.recall) <= 1e-12);
    CHECK(a.report.n_evaluated_users == b.report.n_evaluated_users);
}

TEST_CASE("capacity budget surfaces as a capacity error") {
    // 600 items need ~2.9 MB of dense graph
    const auto dataset = write_temp_dataset("capacity.txt", synth_dataset(400, 600, 4, 8, 31));
    auto config = base_config(dataset);
    config.mem_budget_mb = 0;  // unlimited
    CHECK_NOTHROW(run_pipeline(config));
    config.mem_budget_mb = 1;
    CHECK_THROWS_AS(run_pipeline(config), CapacityError);
    // blocked storage sidesteps the budget
    config.storage = GraphStorage::blocked;
    config.block_rows = 128;
    CHECK_NOTHROW(run_pipeline(config));
}

TEST_CASE("giving both a dataset and pre-split files is ambiguous") {
    const auto dataset = write_temp_dataset("ambig.txt", synth_dataset(30, 40, 2, 6, 37));
    auto config = base_config(dataset);
    config.train_file = dataset;
    CHECK_THROWS_AS(run_pipeline(config), ConfigError);
}

TEST_CASE("empty test split fails with a data error") {
    const auto dataset = write_temp_dataset("notest.txt", synth_dataset(40, 60, 3, 6, 41));
    auto config = base_config(dataset);
    config.split.train_frac = 1.0;
    config.split.test_frac = 0.0;
    config.split.val_frac = 0.0;
    CHECK_THROWS_AS(run_pipeline(config), DataError);
}

TEST_CASE("sweep picks the best validation point and reports a test row") {
    const auto dataset = write_temp_dataset("sweep.txt", synth_dataset(150, 180, 6, 10, 51));
    auto config = base_config(dataset);

    SweepGrid grid;
    grid.alphas = {0.3, 0.6};
    grid.hadamard_ss = {0.7, 1.0};
    grid.kinds = {FilterKind::linear};

    const auto result = run_sweep(config, grid);
    CHECK(result.entries.size() == 4);
    for (const auto& e : result.entries) {
        CHECK(e.split == "val");
        CHECK(e.recall <= result.best_val.recall);
    }
    CHECK(result.best_on_test.split == "test");
    CHECK(result.best_on_test.recall > 0.0);

    // deterministic: rerun gives the same table
    const auto again = run_sweep(config, grid);
    REQUIRE(again.entries.size() == result.entries.size());
    for (std::size_t i = 0; i < result.entries.size(); ++i) {
        CHECK(again.entries[i].recall == result.entries[i].recall);
    }
    CHECK(again.best_on_test.recall == result.best_on_test.recall);
}

TEST_CASE("single-point sweep matches a plain run") {
    const auto dataset = write_temp_dataset("sweep1.txt", synth_dataset(80, 90, 4, 12, 61));
    auto config = base_config(dataset);
    config.alpha = 0.55;
    config.hadamard_s = 0.9;

    SweepGrid grid;
    grid.alphas = {0.55};
    grid.hadamard_ss = {0.9};
    grid.kinds = {FilterKind::linear};
    const auto sweep = run_sweep(config, grid);

    auto run_cfg = config;
    run_cfg.eval_on_val = true;
    const auto run = run_pipeline(run_cfg);
    CHECK(sweep.entries.size() == 1);
    CHECK(sweep.entries[0].recall == run.report.recall);

    run_cfg.eval_on_val = false;
    const auto test_run = run_pipeline(run_cfg);
    CHECK(sweep.best_on_test.recall == test_run.report.recall);
}

TEST_CASE("sweep validation errors") {
    const auto dataset = write_temp_dataset("sweepbad.txt", synth_dataset(40, 50, 3, 6, 71));
    auto config = base_config(dataset);
    SweepGrid empty;
    CHECK_THROWS_AS(run_sweep(config, empty), ConfigError);

    SweepGrid ideal;
    ideal.alphas = {0.5};
    ideal.hadamard_ss = {1.0};
    ideal.kinds = {FilterKind::ideal_approx};
    CHECK_THROWS_AS(run_sweep(config, ideal), ConfigError);  // no tau/beta grids

    auto noval = config;
    noval.split.train_frac = 0.8;
    noval.split.test_frac = 0.2;
    noval.split.val_frac = 0.0;
    SweepGrid grid;
    grid.alphas = {0.5};
    grid.hadamard_ss = {1.0};
    grid.kinds = {FilterKind::linear};
    CHECK_THROWS_AS(run_sweep(noval, grid), DataError);
}

TEST_CASE("bench repeats the pipeline and validates repetitions") {
    const auto dataset = write_temp_dataset("bench.txt", synth_dataset(60, 70, 3, 7, 81));
    auto config = base_config(dataset);
    CHECK_THROWS_AS(run_bench(config, 1), ConfigError);
    CHECK_THROWS_AS(run_bench(config, 2), ConfigError);

    const auto result = run_bench(config, 3);
    CHECK(result.runs.size() == 3);
    CHECK(result.repetitions == 3);
    CHECK(result.median.total() > 0.0);
    CHECK(result.min.total() <= result.median.total());
    CHECK(result.max.total() >= result.median.total());
    CHECK(!result.cpu.empty());
    CHECK(result.recall > 0.0);
}

TEST_CASE("metrics json omits timings in deterministic mode") {
    const auto dataset = write_temp_dataset("json.txt", synth_dataset(50, 60, 3, 7, 91));
    auto config = base_config(dataset);
    const auto result = run_pipeline(config);
    const auto dir = std::filesystem::temp_directory_path() / "polyrec_test_pipeline";
    write_metrics_json(result.report, config, dir / "metrics.json", false);
    const auto text = file_bytes(dir / "metrics.json");
    CHECK(text.find("stage_timings") == std::string::npos);
    CHECK(text.find("\"recall\"") != std::string::npos);
    CHECK(text.find("schema_version") != std::string::npos);
}

// ---------------------------------------------------------------------------
// CLI process-level checks (need the binary path in POLYREC_CLI)

namespace {

int run_cli(const std::string& args) {
    const char* cli = std::getenv("POLYREC_CLI");
    REQUIRE(cli != nullptr);
    const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes and determinism" * doctest::skip(std::getenv("POLYREC_CLI") == nullptr)) {
    const auto dataset = write_temp_dataset("cli.txt", synth_dataset(80, 90, 4, 8, 101));
    const auto big = write_temp_dataset("cli_big.txt", synth_dataset(400, 600, 4, 8, 103));
    const auto dir = std::filesystem::temp_directory_path() / "polyrec_test_pipeline";
    const auto out1 = dir / "cli_out1";
    const auto out2 = dir / "cli_out2";

    CHECK(run_cli("run --dataset " + dataset.string() + " --seed 3 --threads 2 --out " +
                  out1.string()) == 0);
    CHECK(run_cli("run --dataset " + dataset.string() + " --seed 3 --threads 2 --out " +
                  out2.string()) == 0);
    CHECK(file_bytes(out1 / "metrics.json") == file_bytes(out2 / "metrics.json"));
    CHECK(file_bytes(out1 / "recommendations.tsv") == file_bytes(out2 / "recommendations.tsv"));

    // invalid fractions -> configuration error
    CHECK(run_cli("split --dataset " + dataset.string() + " --fractions 0.5,0.5,0.5 --out " +
                  (dir / "cli_badsplit").string()) == 2);
    // empty test split -> data/evaluation error
    CHECK(run_cli("run --dataset " + dataset.string() + " --fractions 1.0,0.0,0.0 --out " +
                  (dir / "cli_notest").string()) == 3);
    // graph over a 1 MiB budget -> capacity error
    CHECK(run_cli("run --dataset " + big.string() + " --mem-budget-mb 1 --out " +
                  (dir / "cli_capacity").string()) == 4);
    // unknown filter kind -> configuration error
    CHECK(run_cli("run --dataset " + dataset.string() + " --filter butterworth --out " +
                  (dir / "cli_badfilter").string()) == 2);

    // split twice with one seed -> identical files
    const auto s1 = dir / "cli_split1";
    const auto s2 = dir / "cli_split2";
    CHECK(run_cli("split --dataset " + dataset.string() + " --seed 9 --out " + s1.string()) == 0);
    CHECK(run_cli("split --dataset " + dataset.string() + " --seed 9 --out " + s2.string()) == 0);
    for (const auto* name : {"train.txt", "test.txt", "val.txt", "split_manifest.txt"}) {
        CHECK(file_bytes(s1 / name) == file_bytes(s2 / name));
    }

    // response curve of the linear filter is the straight line 1 - lambda
    const auto rdir = dir / "cli_response";
    CHECK(run_cli("response --filter linear --points 3 --out " + rdir.string()) == 0);
    CHECK(file_bytes(rdir / "response.csv") ==
          "# schema_version 1\nlambda,gain\n0,1\n0.5,0.5\n1,0\n");

    // ideal_approx also emits the unblended step approximation
    const auto rdir2 = dir / "cli_response_ideal";
    CHECK(run_cli("response --filter ideal_approx --tau 0.1 --beta 0.3 --out " +
                  rdir2.string()) == 0);
    CHECK(std::filesystem::exists(rdir2 / "response.csv"));
    CHECK(std::filesystem::exists(rdir2 / "response_fit.csv"));

    // config file values are read and overridden by flags
    const auto cfg = dir / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "dataset=" << dataset.string() << "\nseed=3\nthreads=2\nalpha=0.6\n";
    }
    const auto out3 = dir / "cli_out3";
    CHECK(run_cli("run --config " + cfg.string() + " --out " + out3.string()) == 0);
    const auto text = file_bytes(out3 / "metrics.json");
    CHECK(text.find("\"alpha\": 0.6") != std::string::npos);
}
