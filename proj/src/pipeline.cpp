#include "polyrec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

#include "polyrec/oracle.hpp"
#include "polyrec/util.hpp"

namespace polyrec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

SimilarityGraph build_similarity_graph(const InteractionMatrix& train, const RunConfig& config) {
    if (config.storage == GraphStorage::blocked) {
        if (config.sparsify_eps > 0.0 || config.rescale_spectrum) {
            throw ConfigError("sparsify/rescale require dense storage");
        }
        std::filesystem::create_directories(config.out_dir);
        return SimilarityGraph::build_blocked(train, config.alpha, config.hadamard_s,
                                              config.block_rows,
                                              config.out_dir / "graph.cache");
    }
    const auto normalized = normalize_asymmetric(train, config.alpha);
    const auto budget = config.mem_budget_mb > 0
                            ? std::optional<std::int64_t>(config.mem_budget_mb * (1ll << 20))
                            : std::nullopt;
    Matrix similarity = item_similarity(normalized, budget);
    auto graph = hadamard_power(std::move(similarity), config.hadamard_s, config.alpha);
    if (config.sparsify_eps > 0.0) {
        graph.sparsify(config.sparsify_eps);
    }
    if (config.rescale_spectrum) {
        graph.rescale_spectrum();
    }
    return graph;
}

FilterSpec RunConfig::make_filter() const {
    if (kind == FilterKind::custom) {
        if (custom_coeffs.empty()) {
            throw ConfigError("custom filter requires --coeffs");
        }
        return custom_filter(custom_coeffs);
    }
    return predefined_filter(kind, tau, beta);
}

LoadedData load_data(const RunConfig& config) {
    LoadedData data;
    const auto start = Clock::now();
    if (!config.dataset.empty() && !config.train_file.empty()) {
        throw ConfigError("provide either --dataset or --train/--test files, not both");
    }
    if (!config.dataset.empty()) {
        const auto matrix = parse_interactions_file(config.dataset, config.format);
        auto split = split_holdout(matrix, config.split);
        data.train = std::move(split.train);
        data.test = std::move(split.test);
        data.val = std::move(split.val);
    } else {
        if (config.train_file.empty()) {
            throw ConfigError("provide either --dataset or --train/--test files");
        }
        auto parts = parse_aligned_files({config.train_file, config.test_file, config.val_file},
                                         config.format);
        data.train = std::move(parts[0]);
        data.test = std::move(parts[1]);
        data.val = std::move(parts[2]);
    }
    data.parse_seconds = seconds_since(start);
    return data;
}

RunResult run_on(const LoadedData& data, const SimilarityGraph& graph, const FilterSpec& filter,
                 const RunConfig& config, bool eval_on_val, double parse_seconds,
                 double graph_seconds, std::ostream* recommendations_out) {
    const auto& train = data.train;
    const auto& heldout = eval_on_val ? data.val : data.test;

    RunResult result;
    result.filter = filter;
    result.report.stage_timings.parse = parse_seconds;
    result.report.stage_timings.graph = graph_seconds;

    const auto batch_size = std::max<std::int64_t>(1, config.batch_size);
    std::vector<std::int32_t> users(train.n_users);
    std::iota(users.begin(), users.end(), 0);

    double score_s = 0.0, rank_s = 0.0;
    ScoreOptions options;
    options.fp32 = config.fp32_scores;
    result.recommendations.reserve(train.n_users);

    for (std::int64_t b0 = 0; b0 < train.n_users; b0 += batch_size) {
        const auto count = std::min<std::int64_t>(batch_size, train.n_users - b0);
        const std::span<const std::int32_t> batch{users.data() + b0,
                                                  static_cast<std::size_t>(count)};
        auto t_score = Clock::now();
        const Matrix scores = score_users(train, graph, filter, batch, options);
        score_s += seconds_since(t_score);

        auto t_rank = Clock::now();
        std::vector<RankedList> lists(count);
        for (std::int64_t b = 0; b < count; ++b) {
            const auto user = batch[b];
            lists[b] = top_k(user, scores.row(b), train.items_of(user), config.k);
        }
        rank_s += seconds_since(t_rank);

        if (recommendations_out != nullptr) {
            write_recommendations(lists, scores, batch, train, *recommendations_out);
        }
        for (auto& list : lists) {
            result.recommendations.push_back(std::move(list));
        }
    }
    result.report.stage_timings.score = score_s;
    result.report.stage_timings.rank = rank_s;

    const auto t_metric = Clock::now();
    auto report = evaluate(result.recommendations, heldout, config.k);
    result.report.k = report.k;
    result.report.recall = report.recall;
    result.report.ndcg = report.ndcg;
    result.report.n_evaluated_users = report.n_evaluated_users;
    result.report.stage_timings.metric = seconds_since(t_metric);
    return result;
}

RunResult run_pipeline(const RunConfig& config, std::ostream* recommendations_out) {
    resolve_threads(config.threads);
    const LoadedData data = load_data(config);

    auto t_graph = Clock::now();
    const SimilarityGraph graph = build_similarity_graph(data.train, config);
    const double graph_s = seconds_since(t_graph);

    auto t_filter = Clock::now();
    const FilterSpec filter = config.make_filter();
    const double filter_s = seconds_since(t_filter);

    auto result = run_on(data, graph, filter, config, config.eval_on_val, data.parse_seconds,
                         graph_s, recommendations_out);
    result.report.stage_timings.filter = filter_s;
    return result;
}

SweepResult run_sweep(const RunConfig& base, const SweepGrid& grid) {
    if (grid.alphas.empty() || grid.hadamard_ss.empty() || grid.kinds.empty()) {
        throw ConfigError("sweep grid is empty");
    }
    for (const auto kind : grid.kinds) {
        if (kind == FilterKind::ideal_approx && (grid.taus.empty() || grid.betas.empty())) {
            throw ConfigError("sweeping ideal_approx needs tau and beta grids");
        }
    }
    resolve_threads(base.threads);
    const LoadedData data = load_data(base);
    if (data.val.nnz() == 0) {
        throw DataError("sweep needs a non-empty validation split");
    }

    SweepResult result;
    bool have_best = false;

    const auto consider = [&](const RunConfig& config, const SimilarityGraph& graph) {
        const FilterSpec filter = config.make_filter();
        const auto run = run_on(data, graph, filter, config, /*eval_on_val=*/true,
                                data.parse_seconds, 0.0, nullptr);
        SweepEntry entry;
        entry.alpha = config.alpha;
        entry.hadamard_s = config.hadamard_s;
        entry.kind = config.kind;
        entry.tau = config.kind == FilterKind::ideal_approx ? config.tau : 0.0;
        entry.beta = config.kind == FilterKind::ideal_approx ? config.beta : 0.0;
        entry.split = "val";
        entry.recall = run.report.recall;
        entry.ndcg = run.report.ndcg;
        result.entries.push_back(entry);
        if (!have_best || entry.recall > result.best_val.recall) {
            result.best_val = entry;
            have_best = true;
        }
    };

    for (const double alpha : grid.alphas) {
        for (const double s : grid.hadamard_ss) {
            RunConfig config = base;
            config.alpha = alpha;
            config.hadamard_s = s;
            const SimilarityGraph graph = build_similarity_graph(data.train, config);
            for (const auto kind : grid.kinds) {
                config.kind = kind;
                if (kind == FilterKind::ideal_approx) {
                    for (const double tau : grid.taus) {
                        for (const double beta : grid.betas) {
                            config.tau = tau;
                            config.beta = beta;
                            consider(config, graph);
                        }
                    }
                } else {
                    consider(config, graph);
                }
            }
        }
    }

    // Winner gets one evaluation on the test split.
    RunConfig winner = base;
    winner.alpha = result.best_val.alpha;
    winner.hadamard_s = result.best_val.hadamard_s;
    winner.kind = result.best_val.kind;
    if (winner.kind == FilterKind::ideal_approx) {
        winner.tau = result.best_val.tau;
        winner.beta = result.best_val.beta;
    }
    const SimilarityGraph graph = build_similarity_graph(data.train, winner);
    const auto test_run = run_on(data, graph, winner.make_filter(), winner,
                                 /*eval_on_val=*/false, data.parse_seconds, 0.0, nullptr);
    result.best_on_test = result.best_val;
    result.best_on_test.split = "test";
    result.best_on_test.recall = test_run.report.recall;
    result.best_on_test.ndcg = test_run.report.ndcg;
    return result;
}

namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

StageTimings aggregate(const std::vector<StageTimings>& runs,
                       const std::function<double(std::vector<double>)>& reduce) {
    const auto collect = [&](double StageTimings::*field) {
        std::vector<double> values;
        values.reserve(runs.size());
        for (const auto& r : runs) values.push_back(r.*field);
        return reduce(values);
    };
    StageTimings out;
    out.parse = collect(&StageTimings::parse);
    out.graph = collect(&StageTimings::graph);
    out.filter = collect(&StageTimings::filter);
    out.score = collect(&StageTimings::score);
    out.rank = collect(&StageTimings::rank);
    out.metric = collect(&StageTimings::metric);
    return out;
}

}  // namespace

BenchResult run_bench(const RunConfig& config, int repetitions) {
    if (repetitions < 3) {
        throw ConfigError("bench needs repetitions >= 3");
    }
    BenchResult bench;
    bench.repetitions = repetitions;
    bench.threads = resolve_threads(config.threads);
    bench.cpu = cpu_model();

    run_pipeline(config);  // warm-up, excluded
    for (int rep = 0; rep < repetitions; ++rep) {
        const auto result = run_pipeline(config);
        bench.runs.push_back(result.report.stage_timings);
        bench.recall = result.report.recall;
        bench.ndcg = result.report.ndcg;
    }
    bench.median = aggregate(bench.runs, median_of);
    bench.min = aggregate(bench.runs, [](std::vector<double> v) {
        return *std::min_element(v.begin(), v.end());
    });
    bench.max = aggregate(bench.runs, [](std::vector<double> v) {
        return *std::max_element(v.begin(), v.end());
    });
    return bench;
}

// ---------------------------------------------------------------------------
// Output writers

void write_metrics_json(const EvalReport& report, const RunConfig& config,
                        const std::filesystem::path& path, bool include_timings) {
    auto j = report.to_json(include_timings);
    j["config"] = {{"alpha", config.alpha},
                   {"s", config.hadamard_s},
                   {"filter", filter_kind_name(config.kind)},
                   {"tau", config.tau},
                   {"beta", config.beta},
                   {"k", config.k},
                   {"seed", config.seed},
                   {"storage", config.storage == GraphStorage::dense ? "dense" : "blocked"},
                   {"threads", config.threads}};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write report: " + path.string());
    }
    out << j.dump(2) << '\n';
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write sweep table: " + path.string());
    }
    out << "# schema_version 1\n";
    out << "phase,alpha,s,kind,tau,beta,recall,ndcg\n";
    const auto row = [&out](const SweepEntry& e) {
        out << e.split << ',' << format_double(e.alpha) << ',' << format_double(e.hadamard_s)
            << ',' << filter_kind_name(e.kind) << ',' << format_double(e.tau) << ','
            << format_double(e.beta) << ',' << format_double(e.recall) << ','
            << format_double(e.ndcg) << '\n';
    };
    // validation rows ranked by recall; grid order breaks ties
    auto ranked = result.entries;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const SweepEntry& a, const SweepEntry& b) { return a.recall > b.recall; });
    for (const auto& e : ranked) row(e);
    row(result.best_on_test);
}

void write_response_csv(const ResponseCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write response curve: " + path.string());
    }
    out << "# schema_version 1\n";
    out << "lambda,gain\n";
    for (std::size_t j = 0; j < curve.lambdas.size(); ++j) {
        out << format_double(curve.lambdas[j]) << ',' << format_double(curve.gains[j]) << '\n';
    }
}

void write_bench_json(const BenchResult& result, const RunConfig& config,
                      const std::filesystem::path& path) {
    const auto stage_obj = [](const StageTimings& t) {
        return nlohmann::ordered_json{{"parse", t.parse},   {"graph", t.graph},
                                      {"filter", t.filter}, {"score", t.score},
                                      {"rank", t.rank},     {"metric", t.metric},
                                      {"total", t.total()}};
    };
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["repetitions"] = result.repetitions;
    j["cpu"] = result.cpu;
    j["threads"] = result.threads;
    j["filter"] = filter_kind_name(config.kind);
    j["alpha"] = config.alpha;
    j["s"] = config.hadamard_s;
    j["median"] = stage_obj(result.median);
    j["min"] = stage_obj(result.min);
    j["max"] = stage_obj(result.max);
    j["recall"] = result.recall;
    j["ndcg"] = result.ndcg;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const auto& r : result.runs) runs.push_back(stage_obj(r));
    j["runs"] = runs;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write bench report: " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace polyrec
