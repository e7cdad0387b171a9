"""Training-free top-K recommendation via polynomial low-pass graph filters."""

from ._core import (  # noqa: F401
    CapacityError,
    ConfigError,
    DataError,
    DatasetStats,
    EvalReport,
    FilterSpec,
    FitResult,
    InteractionMatrix,
    RankedList,
    RunConfig,
    RunResult,
    SimilarityGraph,
    Split,
    SplitSpec,
    StageTimings,
    __version__,
    build_graph,
    custom_filter,
    dataset_stats,
    degree_vectors,
    evaluate,
    fit_ideal_lpf,
    frequency_response,
    materialize_filter_matrix,
    ndcg_at_k,
    parse_interactions,
    parse_interactions_text,
    predefined_filter,
    recall_at_k,
    run_pipeline,
    score_users,
    serialize_adjacency,
    split_holdout,
    top_k,
)
