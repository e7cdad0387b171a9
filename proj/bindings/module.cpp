#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "polyrec/oracle.hpp"
#include "polyrec/pipeline.hpp"
#include "polyrec/util.hpp"

namespace py = pybind11;
using namespace polyrec;

namespace {

GraphStorage parse_storage(const std::string& name) {
    if (name == "dense") return GraphStorage::dense;
    if (name == "blocked") return GraphStorage::blocked;
    throw ConfigError("unknown storage mode: " + name);
}

SimilarityGraph build_graph_py(const InteractionMatrix& train, double alpha, double s,
                               const std::string& storage, std::int64_t block_rows,
                               const std::filesystem::path& cache_path,
                               std::int64_t mem_budget_mb) {
    RunConfig config;
    config.alpha = alpha;
    config.hadamard_s = s;
    config.storage = parse_storage(storage);
    config.block_rows = block_rows;
    config.mem_budget_mb = mem_budget_mb;
    if (config.storage == GraphStorage::blocked) {
        if (cache_path.empty()) {
            throw ConfigError("blocked storage needs a cache_path");
        }
        return SimilarityGraph::build_blocked(train, alpha, s, block_rows, cache_path);
    }
    return build_similarity_graph(train, config);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Training-free top-K recommendation via polynomial low-pass graph filters";
    m.attr("__version__") = "0.1.0";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);

    py::class_<InteractionMatrix>(m, "InteractionMatrix")
        .def_readonly("n_users", &InteractionMatrix::n_users)
        .def_readonly("n_items", &InteractionMatrix::n_items)
        .def_property_readonly("nnz", &InteractionMatrix::nnz)
        .def_readonly("user_ids", &InteractionMatrix::user_ids)
        .def_readonly("item_ids", &InteractionMatrix::item_ids)
        .def("items_of",
             [](const InteractionMatrix& self, std::int64_t user) {
                 if (user < 0 || user >= self.n_users) {
                     throw DataError("user index out of range");
                 }
                 const auto row = self.items_of(user);
                 return std::vector<std::int32_t>(row.begin(), row.end());
             },
             py::arg("user"))
        .def("contains", &InteractionMatrix::contains, py::arg("user"), py::arg("item"))
        .def("__eq__", [](const InteractionMatrix& a, const InteractionMatrix& b) { return a == b; })
        .def("__repr__", [](const InteractionMatrix& self) {
            std::ostringstream out;
            out << "InteractionMatrix(" << self.n_users << " users, " << self.n_items
                << " items, " << self.nnz() << " interactions)";
            return out.str();
        });

    py::class_<DatasetStats>(m, "DatasetStats")
        .def_readonly("n_users", &DatasetStats::n_users)
        .def_readonly("n_items", &DatasetStats::n_items)
        .def_readonly("n_interactions", &DatasetStats::n_interactions)
        .def_readonly("density", &DatasetStats::density);

    py::class_<SplitSpec>(m, "SplitSpec")
        .def(py::init([](double train_frac, double test_frac, double val_frac,
                         std::uint64_t seed) {
                 SplitSpec spec{train_frac, test_frac, val_frac, seed};
                 spec.validate();
                 return spec;
             }),
             py::arg("train_frac") = 0.7, py::arg("test_frac") = 0.2, py::arg("val_frac") = 0.1,
             py::arg("seed") = 42)
        .def_readwrite("train_frac", &SplitSpec::train_frac)
        .def_readwrite("test_frac", &SplitSpec::test_frac)
        .def_readwrite("val_frac", &SplitSpec::val_frac)
        .def_readwrite("seed", &SplitSpec::seed);

    py::class_<Split>(m, "Split")
        .def_readonly("train", &Split::train)
        .def_readonly("test", &Split::test)
        .def_readonly("val", &Split::val);

    py::class_<SimilarityGraph>(m, "SimilarityGraph")
        .def_property_readonly("n_items", &SimilarityGraph::n_items)
        .def_property_readonly("alpha", &SimilarityGraph::alpha)
        .def_property_readonly("s", &SimilarityGraph::hadamard_s)
        .def_property_readonly("storage",
                               [](const SimilarityGraph& self) {
                                   return self.storage() == GraphStorage::dense ? "dense"
                                                                                : "blocked";
                               })
        .def("dense", [](const SimilarityGraph& self) { return Matrix(self.dense()); })
        .def("save", &SimilarityGraph::save, py::arg("path"))
        .def_static(
            "load",
            [](const std::filesystem::path& path, const std::string& storage) {
                return SimilarityGraph::load(path, parse_storage(storage));
            },
            py::arg("path"), py::arg("storage") = "dense");

    py::class_<FilterSpec>(m, "FilterSpec")
        .def_property_readonly("kind",
                               [](const FilterSpec& self) { return filter_kind_name(self.kind); })
        .def_readonly("coeffs", &FilterSpec::coeffs)
        .def_readonly("tau", &FilterSpec::tau)
        .def_readonly("beta", &FilterSpec::beta)
        .def("effective_coeffs", &FilterSpec::effective_coeffs)
        .def("__repr__", [](const FilterSpec& self) {
            std::ostringstream out;
            out << "FilterSpec(" << filter_kind_name(self.kind) << ", coeffs=[";
            for (std::size_t k = 0; k < self.coeffs.size(); ++k) {
                if (k) out << ", ";
                out << format_double(self.coeffs[k]);
            }
            out << "])";
            return out.str();
        });

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("coeffs", &FitResult::coeffs)
        .def_readonly("residual_rms", &FitResult::residual_rms);

    py::class_<RankedList>(m, "RankedList")
        .def_readonly("user", &RankedList::user)
        .def_readonly("items", &RankedList::items);

    py::class_<StageTimings>(m, "StageTimings")
        .def_readonly("parse", &StageTimings::parse)
        .def_readonly("graph", &StageTimings::graph)
        .def_readonly("filter", &StageTimings::filter)
        .def_readonly("score", &StageTimings::score)
        .def_readonly("rank", &StageTimings::rank)
        .def_readonly("metric", &StageTimings::metric)
        .def("total", &StageTimings::total);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("k", &EvalReport::k)
        .def_readonly("recall", &EvalReport::recall)
        .def_readonly("ndcg", &EvalReport::ndcg)
        .def_readonly("n_evaluated_users", &EvalReport::n_evaluated_users)
        .def_readonly("stage_timings", &EvalReport::stage_timings)
        .def(
            "json_str",
            [](const EvalReport& self, bool include_timings) {
                return self.to_json(include_timings).dump(2);
            },
            py::arg("include_timings") = true)
        .def("table", &EvalReport::to_table);

    // interactions
    m.def(
        "parse_interactions",
        [](const std::filesystem::path& path, const std::string& format) {
            return parse_interactions_file(path, parse_format_name(format));
        },
        py::arg("path"), py::arg("format") = "adjacency");
    m.def(
        "parse_interactions_text",
        [](const std::string& text, const std::string& format) {
            std::istringstream in(text);
            return parse_interactions(in, parse_format_name(format));
        },
        py::arg("text"), py::arg("format") = "adjacency");
    m.def("dataset_stats", &dataset_stats, py::arg("matrix"));
    m.def("split_holdout", &split_holdout, py::arg("matrix"), py::arg("spec"));
    m.def(
        "serialize_adjacency",
        [](const InteractionMatrix& matrix) {
            std::ostringstream out;
            serialize_adjacency(matrix, out);
            return out.str();
        },
        py::arg("matrix"));

    // graph
    m.def("degree_vectors", &degree_vectors, py::arg("matrix"));
    m.def("build_graph", &build_graph_py, py::arg("train"), py::arg("alpha") = 0.5,
          py::arg("s") = 1.0, py::arg("storage") = "dense", py::arg("block_rows") = 4096,
          py::arg("cache_path") = std::filesystem::path{}, py::arg("mem_budget_mb") = 8192);

    // filters
    m.def(
        "predefined_filter",
        [](const std::string& kind, double tau, double beta) {
            return predefined_filter(parse_filter_kind(kind), tau, beta);
        },
        py::arg("kind"), py::arg("tau") = 0.1, py::arg("beta") = 0.3);
    m.def("custom_filter", &custom_filter, py::arg("coeffs"));
    m.def(
        "fit_ideal_lpf",
        [](double tau, int order, const std::vector<double>& grid,
           const std::vector<double>& weights) { return fit_ideal_lpf(tau, order, grid, weights); },
        py::arg("tau"), py::arg("order") = 3, py::arg("grid") = std::vector<double>{},
        py::arg("weights") = std::vector<double>{});
    m.def(
        "frequency_response",
        [](const FilterSpec& filter, const std::vector<double>& lambdas) {
            const auto curve = frequency_response(filter, lambdas);
            return py::make_tuple(curve.lambdas, curve.gains);
        },
        py::arg("filter"), py::arg("lambdas"));

    // recommend + metrics
    m.def(
        "score_users",
        [](const InteractionMatrix& train, const SimilarityGraph& graph, const FilterSpec& filter,
           const std::vector<std::int32_t>& users, bool fp32) {
            ScoreOptions options;
            options.fp32 = fp32;
            return score_users(train, graph, filter, users, options);
        },
        py::arg("train"), py::arg("graph"), py::arg("filter"), py::arg("users"),
        py::arg("fp32") = false);
    m.def("materialize_filter_matrix", &materialize_filter_matrix, py::arg("graph"),
          py::arg("filter"));
    m.def(
        "top_k",
        [](std::int32_t user, const Eigen::RowVectorXd& scores,
           const std::vector<std::int32_t>& seen, std::int64_t k) {
            return top_k(user, scores, seen, k);
        },
        py::arg("user"), py::arg("scores"), py::arg("seen"), py::arg("k"));
    m.def(
        "recall_at_k",
        [](const std::vector<std::int32_t>& ranked, const std::vector<std::int32_t>& relevant,
           std::int64_t k) {
            auto sorted = relevant;
            std::sort(sorted.begin(), sorted.end());
            return recall_at_k(ranked, sorted, k);
        },
        py::arg("ranked"), py::arg("relevant"), py::arg("k"));
    m.def(
        "ndcg_at_k",
        [](const std::vector<std::int32_t>& ranked, const std::vector<std::int32_t>& relevant,
           std::int64_t k) {
            auto sorted = relevant;
            std::sort(sorted.begin(), sorted.end());
            return ndcg_at_k(ranked, sorted, k);
        },
        py::arg("ranked"), py::arg("relevant"), py::arg("k"));
    m.def("evaluate", &evaluate, py::arg("ranked_lists"), py::arg("heldout"), py::arg("k") = 20);

    // end-to-end
    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("dataset", &RunConfig::dataset)
        .def_readwrite("train_file", &RunConfig::train_file)
        .def_readwrite("test_file", &RunConfig::test_file)
        .def_readwrite("val_file", &RunConfig::val_file)
        .def_property(
            "format",
            [](const RunConfig& self) { return format_name(self.format); },
            [](RunConfig& self, const std::string& name) { self.format = parse_format_name(name); })
        .def_readwrite("split", &RunConfig::split)
        .def_readwrite("alpha", &RunConfig::alpha)
        .def_readwrite("s", &RunConfig::hadamard_s)
        .def_property(
            "filter",
            [](const RunConfig& self) { return filter_kind_name(self.kind); },
            [](RunConfig& self, const std::string& name) { self.kind = parse_filter_kind(name); })
        .def_readwrite("tau", &RunConfig::tau)
        .def_readwrite("beta", &RunConfig::beta)
        .def_readwrite("coeffs", &RunConfig::custom_coeffs)
        .def_readwrite("k", &RunConfig::k)
        .def_readwrite("batch_size", &RunConfig::batch_size)
        .def_property(
            "storage",
            [](const RunConfig& self) {
                return self.storage == GraphStorage::dense ? "dense" : "blocked";
            },
            [](RunConfig& self, const std::string& name) { self.storage = parse_storage(name); })
        .def_readwrite("block_rows", &RunConfig::block_rows)
        .def_readwrite("mem_budget_mb", &RunConfig::mem_budget_mb)
        .def_readwrite("fp32_scores", &RunConfig::fp32_scores)
        .def_readwrite("threads", &RunConfig::threads)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("out_dir", &RunConfig::out_dir)
        .def_readwrite("eval_on_val", &RunConfig::eval_on_val);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("report", &RunResult::report)
        .def_readonly("filter", &RunResult::filter)
        .def_readonly("recommendations", &RunResult::recommendations);

    m.def(
        "run_pipeline", [](const RunConfig& config) { return run_pipeline(config); },
        py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
}
