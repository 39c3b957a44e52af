"""Graph-based approximate k-nearest-neighbour search with degree-adjusted
k-NN graphs, path adjustment and automatic degree tuning."""

from .bench import EvalCurve, computations_at, scaling_study, sweep
from .construction import (
    ConstructionParams,
    adjust_path,
    aknng_from_anng,
    construct_adjusted_graph,
    construct_adjusted_graph_with_constraint,
    construct_anng,
    construct_graph,
    has_path,
)
from .core import Dataset, Graph, GraphStats, MetricKind, distance, graph_stats, transpose
from .optimizer import (
    OptimizerConfig,
    TargetRange,
    UnreachablePrecision,
    epsilon_for_precision,
    loss,
    optimize_degrees,
)
from .search import (
    DynamicDegree,
    SearchParams,
    SearchResult,
    Searcher,
    VisitedSet,
    VpTree,
    effective_edge_limit,
    hash_size,
    knn_search,
    seeds_random,
    seeds_tree,
    vptree_build,
)
from .truth import GroundTruth, brute_force_knn, recall

__version__ = "0.1.0"
