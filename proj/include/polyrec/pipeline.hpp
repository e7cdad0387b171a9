#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polyrec/filters.hpp"
#include "polyrec/graph.hpp"
#include "polyrec/interactions.hpp"
#include "polyrec/metrics.hpp"
#include "polyrec/recommend.hpp"

namespace polyrec {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    // Either a whole dataset (split in-process with `split`) or pre-split files.
    std::filesystem::path dataset;
    std::filesystem::path train_file;
    std::filesystem::path test_file;
    std::filesystem::path val_file;
    InputFormat format = InputFormat::adjacency;
    SplitSpec split;

    double alpha = 0.5;
    double hadamard_s = 1.0;

    FilterKind kind = FilterKind::linear;
    double tau = 0.1;
    double beta = 0.3;
    std::vector<double> custom_coeffs;

    std::int64_t k = 20;
    std::int64_t batch_size = 1024;

    GraphStorage storage = GraphStorage::dense;
    std::int64_t block_rows = 4096;
    std::int64_t mem_budget_mb = 8192;

    // Off-by-default experimentation flags, excluded from acceptance runs.
    bool fp32_scores = false;
    double sparsify_eps = 0.0;
    bool rescale_spectrum = false;

    int threads = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "out";

    // Evaluate on the validation split instead of the test split.
    bool eval_on_val = false;

    FilterSpec make_filter() const;
};

struct LoadedData {
    InteractionMatrix train;
    InteractionMatrix test;
    InteractionMatrix val;
    double parse_seconds = 0.0;
};

// Loads/splits per the config; train/test/val share one id space.
LoadedData load_data(const RunConfig& config);

struct RunResult {
    EvalReport report;
    FilterSpec filter;
    std::vector<RankedList> recommendations;  // in user-index order
};

// Graph construction per the config (normalize -> gram -> hadamard power),
// honoring storage mode, memory budget, and the experimentation flags.
SimilarityGraph build_similarity_graph(const InteractionMatrix& train, const RunConfig& config);

// Full pipeline: build graph -> filter -> score -> top-K -> evaluate. The
// recommendation dump is streamed batch by batch when a stream is given.
RunResult run_pipeline(const RunConfig& config, std::ostream* recommendations_out = nullptr);

// Variant reusing pre-loaded data and a pre-built graph (sweep, bench).
RunResult run_on(const LoadedData& data, const SimilarityGraph& graph,
                 const FilterSpec& filter, const RunConfig& config,
                 bool eval_on_val, double parse_seconds, double graph_seconds,
                 std::ostream* recommendations_out = nullptr);

struct SweepGrid {
    std::vector<double> alphas;
    std::vector<double> hadamard_ss;
    std::vector<double> betas;
    std::vector<FilterKind> kinds;
    std::vector<double> taus;
};

struct SweepEntry {
    double alpha = 0.0;
    double hadamard_s = 0.0;
    FilterKind kind = FilterKind::linear;
    double tau = 0.0;
    double beta = 0.0;
    std::string split;  // "val" or "test"
    double recall = 0.0;
    double ndcg = 0.0;
};

struct SweepResult {
    std::vector<SweepEntry> entries;  // validation rows in grid order
    SweepEntry best_val;
    SweepEntry best_on_test;  // the winner re-evaluated once on test
};

// Evaluates every grid point on the validation split, picks the best by
// Recall@K (ties: earlier grid point), then scores the winner on test.
SweepResult run_sweep(const RunConfig& config, const SweepGrid& grid);

struct BenchResult {
    int repetitions = 0;
    std::vector<StageTimings> runs;  // warm-up excluded
    StageTimings median, min, max;
    double recall = 0.0;
    double ndcg = 0.0;
    std::string cpu;
    int threads = 0;
};

// Repeats the pipeline after one discarded warm-up run. repetitions >= 3.
BenchResult run_bench(const RunConfig& config, int repetitions);

// Output writers (all schema-versioned).
void write_metrics_json(const EvalReport& report, const RunConfig& config,
                        const std::filesystem::path& path, bool include_timings);
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);
void write_response_csv(const ResponseCurve& curve, const std::filesystem::path& path);
void write_bench_json(const BenchResult& result, const RunConfig& config,
                      const std::filesystem::path& path);

}  // namespace polyrec
