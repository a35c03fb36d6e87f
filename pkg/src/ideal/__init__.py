"""Influence-driven selective annotation toolkit."""

__version__ = "0.1.0"

from .diffusion import (
    CascadeTrace,
    ExactOracle,
    InfluenceEstimate,
    estimate_influence,
    exact_influence,
    export_cascade_trace,
    simulate_cascade,
)
from .embeddings import (
    EmbeddingSet,
    cosine,
    load_embeddings,
    normalize,
    save_embeddings,
)
from .graph import DiffusionGraph, build_graph, knn_successors, load_graph, save_graph
from .guarantees import (
    TheoryReport,
    check_greedy_ratio,
    check_monotone,
    check_step_upper_bound,
    check_submodular,
    greedy_ratio_bound,
    run_verification,
)
from .retrieval import RetrievalIndex, build_index, random_retrieve, retrieve
from .schedule import AnnotationSchedule, diffusion_schedule, execute_schedule
from .selection import (
    SelectionResult,
    brute_force_optimal,
    fast_votek_select,
    greedy_select,
    kmeans_select,
    mfl_select,
    random_select,
)
