#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "polyrec/pipeline.hpp"
#include "polyrec/util.hpp"

namespace {

using namespace polyrec;

struct CliState {
    RunConfig config;
    std::string format = "adjacency";
    std::string filter = "linear";
    std::string storage = "dense";
    std::vector<double> fractions{0.7, 0.2, 0.1};
    std::vector<double> coeffs;

    // sweep grids
    std::vector<double> alphas, ss, taus, betas;
    std::vector<std::string> kinds;

    // response
    std::size_t points = 1001;

    // bench
    int repetitions = 5;

    std::filesystem::path config_file;

    void materialize() {
        config.format = parse_format_name(format);
        config.kind = parse_filter_kind(filter);
        config.custom_coeffs = coeffs;
        if (storage == "dense") {
            config.storage = GraphStorage::dense;
        } else if (storage == "blocked") {
            config.storage = GraphStorage::blocked;
        } else {
            throw ConfigError("unknown storage mode: " + storage);
        }
        if (fractions.size() != 3) {
            throw ConfigError("--fractions needs train,test,val");
        }
        config.split.train_frac = fractions[0];
        config.split.test_frac = fractions[1];
        config.split.val_frac = fractions[2];
        config.split.seed = config.seed;
    }
};

void add_data_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--dataset", state.config.dataset, "whole dataset file (split in-process)");
    cmd->add_option("--train", state.config.train_file, "pre-split training file");
    cmd->add_option("--test", state.config.test_file, "pre-split test file");
    cmd->add_option("--val", state.config.val_file, "pre-split validation file");
    cmd->add_option("--format", state.format, "input format: adjacency|triplet")
        ->capture_default_str();
    cmd->add_option("--fractions", state.fractions, "train,test,val split fractions")
        ->delimiter(',');
}

void add_model_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--alpha", state.config.alpha, "asymmetric normalization exponent [0,1]")
        ->capture_default_str();
    cmd->add_option("--s", state.config.hadamard_s, "hadamard power on the similarity graph")
        ->capture_default_str();
    cmd->add_option("--filter", state.filter,
                    "filter kind: linear|second_order|ideal_approx|custom")
        ->capture_default_str();
    cmd->add_option("--tau", state.config.tau, "ideal_approx cutoff frequency")
        ->capture_default_str();
    cmd->add_option("--beta", state.config.beta, "ideal_approx blend weight")
        ->capture_default_str();
    cmd->add_option("--coeffs", state.coeffs, "custom filter coefficients a1,a2,...")
        ->delimiter(',');
    cmd->add_option("--k", state.config.k, "recommendation list length")->capture_default_str();
    cmd->add_option("--batch", state.config.batch_size, "user batch size for scoring")
        ->capture_default_str();
    cmd->add_option("--storage", state.storage, "graph storage: dense|blocked")
        ->capture_default_str();
    cmd->add_option("--block-rows", state.config.block_rows, "rows per block (blocked storage)")
        ->capture_default_str();
    cmd->add_option("--mem-budget-mb", state.config.mem_budget_mb,
                    "dense graph memory budget in MiB (0 = unlimited)")
        ->capture_default_str();
    cmd->add_flag("--fp32", state.config.fp32_scores, "accumulate scores in 32-bit floats");
    cmd->add_option("--sparsify-eps", state.config.sparsify_eps,
                    "drop graph entries below this value (0 = off)");
    cmd->add_flag("--rescale", state.config.rescale_spectrum,
                  "rescale the graph by a power-iteration spectral-norm estimate");
    cmd->add_flag("--eval-on-val", state.config.eval_on_val,
                  "evaluate on the validation split instead of test");
}

void add_global_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--threads", state.config.threads, "worker threads (0 = hardware)")
        ->capture_default_str();
    cmd->add_option("--seed", state.config.seed, "split shuffle seed")->capture_default_str();
    cmd->add_option("--out", state.config.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--config", state.config_file,
                    "plain-text key=value config file (flags override its values)");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out;
    if (!(in >> out)) {
        throw ConfigError("config key '" + key + "' has a malformed value: " + value);
    }
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream parts(value);
    std::string piece;
    while (std::getline(parts, piece, ',')) {
        if (piece.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(parse_number<double>(key, piece));
    }
    return out;
}

// Plain key=value (or "key value") lines; '#' starts a comment. Values read
// here are defaults: command-line flags parsed afterwards override them.
void apply_config_file(CliState& state, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto sep = line.find('=');
        if (sep == std::string::npos) sep = line.find_first_of(" \t", first);
        if (sep == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              " is not key=value: " + line);
        }
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, sep));
        const std::string value = trim(line.substr(sep + 1));

        if (key == "dataset") state.config.dataset = value;
        else if (key == "train") state.config.train_file = value;
        else if (key == "test") state.config.test_file = value;
        else if (key == "val") state.config.val_file = value;
        else if (key == "format") state.format = value;
        else if (key == "fractions") state.fractions = parse_list(key, value);
        else if (key == "alpha") state.config.alpha = parse_number<double>(key, value);
        else if (key == "s") state.config.hadamard_s = parse_number<double>(key, value);
        else if (key == "filter") state.filter = value;
        else if (key == "tau") state.config.tau = parse_number<double>(key, value);
        else if (key == "beta") state.config.beta = parse_number<double>(key, value);
        else if (key == "coeffs") state.coeffs = parse_list(key, value);
        else if (key == "k") state.config.k = parse_number<std::int64_t>(key, value);
        else if (key == "batch") state.config.batch_size = parse_number<std::int64_t>(key, value);
        else if (key == "storage") state.storage = value;
        else if (key == "block-rows") state.config.block_rows = parse_number<std::int64_t>(key, value);
        else if (key == "mem-budget-mb") state.config.mem_budget_mb = parse_number<std::int64_t>(key, value);
        else if (key == "fp32") state.config.fp32_scores = parse_number<int>(key, value) != 0;
        else if (key == "sparsify-eps") state.config.sparsify_eps = parse_number<double>(key, value);
        else if (key == "rescale") state.config.rescale_spectrum = parse_number<int>(key, value) != 0;
        else if (key == "eval-on-val") state.config.eval_on_val = parse_number<int>(key, value) != 0;
        else if (key == "threads") state.config.threads = parse_number<int>(key, value);
        else if (key == "seed") state.config.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "out") state.config.out_dir = value;
        else if (key == "alphas") state.alphas = parse_list(key, value);
        else if (key == "ss") state.ss = parse_list(key, value);
        else if (key == "taus") state.taus = parse_list(key, value);
        else if (key == "betas") state.betas = parse_list(key, value);
        else if (key == "kinds") {
            state.kinds.clear();
            std::stringstream parts(value);
            std::string piece;
            while (std::getline(parts, piece, ',')) {
                if (!piece.empty()) state.kinds.push_back(piece);
            }
        } else if (key == "points") state.points = parse_number<std::size_t>(key, value);
        else if (key == "repetitions") state.repetitions = parse_number<int>(key, value);
        else throw ConfigError("unknown config key: " + key);
    }
}

// The config file must be applied before CLI11 binds flag values, so scan
// argv for it up front.
std::filesystem::path find_config_flag(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return {};
}

int cmd_split(CliState& state) {
    if (state.config.dataset.empty()) {
        throw ConfigError("split needs --dataset");
    }
    const auto matrix = parse_interactions_file(state.config.dataset, state.config.format);
    const auto split = split_holdout(matrix, state.config.split);
    std::filesystem::create_directories(state.config.out_dir);
    write_adjacency_file(split.train, state.config.out_dir / "train.txt");
    write_adjacency_file(split.test, state.config.out_dir / "test.txt");
    write_adjacency_file(split.val, state.config.out_dir / "val.txt");
    write_split_manifest(state.config.out_dir / "split_manifest.txt", state.config.split, split,
                         crc32_file(state.config.dataset));
    std::cout << "split: " << split.train.nnz() << " train / " << split.test.nnz() << " test / "
              << split.val.nnz() << " val interactions over " << matrix.n_users << " users\n";
    return 0;
}

int cmd_run(CliState& state) {
    std::filesystem::create_directories(state.config.out_dir);
    std::ofstream recs(state.config.out_dir / "recommendations.tsv", std::ios::binary);
    if (!recs) {
        throw DataError("cannot write recommendations file");
    }
    const auto result = run_pipeline(state.config, &recs);
    write_metrics_json(result.report, state.config, state.config.out_dir / "report.json",
                       /*include_timings=*/true);
    write_metrics_json(result.report, state.config, state.config.out_dir / "metrics.json",
                       /*include_timings=*/false);
    std::cout << result.report.to_table();
    return 0;
}

int cmd_sweep(CliState& state) {
    SweepGrid grid;
    grid.alphas = state.alphas.empty() ? std::vector<double>{state.config.alpha} : state.alphas;
    grid.hadamard_ss =
        state.ss.empty() ? std::vector<double>{state.config.hadamard_s} : state.ss;
    if (state.kinds.empty()) {
        grid.kinds = {state.config.kind};
    } else {
        for (const auto& name : state.kinds) grid.kinds.push_back(parse_filter_kind(name));
    }
    grid.taus = state.taus.empty() ? std::vector<double>{state.config.tau} : state.taus;
    grid.betas = state.betas.empty() ? std::vector<double>{state.config.beta} : state.betas;

    const auto result = run_sweep(state.config, grid);
    std::filesystem::create_directories(state.config.out_dir);
    write_sweep_csv(result, state.config.out_dir / "sweep.csv");
    std::cout << "best on validation: kind=" << filter_kind_name(result.best_val.kind)
              << " alpha=" << format_double(result.best_val.alpha)
              << " s=" << format_double(result.best_val.hadamard_s) << " recall@"
              << state.config.k << "=" << format_double(result.best_val.recall) << '\n';
    std::cout << "winner on test: recall@" << state.config.k << "="
              << format_double(result.best_on_test.recall) << " ndcg@" << state.config.k << "="
              << format_double(result.best_on_test.ndcg) << '\n';
    return 0;
}

int cmd_response(CliState& state) {
    const FilterSpec filter = state.config.make_filter();
    const auto grid = uniform_grid(0.0, 1.0, state.points);
    const auto curve = frequency_response(filter, grid);
    std::filesystem::create_directories(state.config.out_dir);
    write_response_csv(curve, state.config.out_dir / "response.csv");
    if (filter.kind == FilterKind::ideal_approx) {
        // also emit the step approximation itself, without the linear blend
        const auto fitted = custom_filter(filter.coeffs);
        write_response_csv(frequency_response(fitted, grid),
                           state.config.out_dir / "response_fit.csv");
        const auto fit = fit_ideal_lpf(filter.tau, static_cast<int>(filter.order()));
        std::cout << "ideal LPF fit residual rms: " << format_double(fit.residual_rms) << '\n';
    }
    std::cout << "wrote " << (state.config.out_dir / "response.csv").string() << " ("
              << curve.lambdas.size() << " points)\n";
    return 0;
}

int cmd_bench(CliState& state) {
    const auto result = run_bench(state.config, state.repetitions);
    std::filesystem::create_directories(state.config.out_dir);
    write_bench_json(result, state.config, state.config.out_dir / "bench.json");
    std::cout << "bench: " << result.repetitions << " repetitions on " << result.cpu << " ("
              << result.threads << " threads), median total "
              << format_double(result.median.total()) << " s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"training-free recommender built on polynomial low-pass graph filters"};
    app.require_subcommand(1);
    CliState state;

    auto* split = app.add_subcommand("split", "write train/test/val files plus a manifest");
    add_data_options(split, state);
    add_global_options(split, state);

    auto* run = app.add_subcommand("run", "build graph, score, rank, and evaluate");
    add_data_options(run, state);
    add_model_options(run, state);
    add_global_options(run, state);

    auto* sweep = app.add_subcommand("sweep", "grid-search hyperparameters on validation");
    add_data_options(sweep, state);
    add_model_options(sweep, state);
    add_global_options(sweep, state);
    sweep->add_option("--alphas", state.alphas, "alpha grid")->delimiter(',');
    sweep->add_option("--ss", state.ss, "hadamard s grid")->delimiter(',');
    sweep->add_option("--kinds", state.kinds, "filter kinds to sweep")->delimiter(',');
    sweep->add_option("--taus", state.taus, "tau grid (ideal_approx)")->delimiter(',');
    sweep->add_option("--betas", state.betas, "beta grid (ideal_approx)")->delimiter(',');

    auto* response = app.add_subcommand("response", "emit a frequency-response curve CSV");
    add_model_options(response, state);
    add_global_options(response, state);
    response->add_option("--points", state.points, "grid points on [0,1]")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "repeat the pipeline and report stage timings");
    add_data_options(bench, state);
    add_model_options(bench, state);
    add_global_options(bench, state);
    bench->add_option("--repetitions", state.repetitions, "timed repetitions (>= 3)")
        ->capture_default_str();

    try {
        const auto config_path = find_config_flag(argc, argv);
        if (!config_path.empty()) {
            apply_config_file(state, config_path);
        }
        app.parse(argc, argv);
        state.materialize();
        if (app.got_subcommand("split")) return cmd_split(state);
        if (app.got_subcommand("run")) return cmd_run(state);
        if (app.got_subcommand("sweep")) return cmd_sweep(state);
        if (app.got_subcommand("response")) return cmd_response(state);
        if (app.got_subcommand("bench")) return cmd_bench(state);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const polyrec::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const polyrec::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return 4;
    } catch (const polyrec::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
