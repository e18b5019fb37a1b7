"""Rank-induced query trees on bounded-degree graphs."""

from qtree.graph import (
    FormatError,
    GenerationError,
    Graph,
    GraphSpec,
    ParameterError,
    boundary,
    build_graph,
    gen_capped_random,
    gen_cycle,
    gen_grid,
    gen_random_regular,
    load_graph,
    save_graph,
)
from qtree.ranks import Quantizer, RankOracle, child_seed, default_L, layer, parse_mode, parse_seed
from qtree.query_tree import (
    ExplorationTrace,
    OrientedGraph,
    count_monotone_paths,
    layer_prefix_sizes,
    orient,
    query_tree_bfs_oracle,
    query_tree_exact,
    query_tree_quantized,
)
from qtree.lca import LcaAnswer, global_greedy_mis, mis_query, verify_consistency

__all__ = [
    "ExplorationTrace",
    "FormatError",
    "GenerationError",
    "Graph",
    "GraphSpec",
    "LcaAnswer",
    "OrientedGraph",
    "ParameterError",
    "Quantizer",
    "RankOracle",
    "boundary",
    "build_graph",
    "child_seed",
    "count_monotone_paths",
    "default_L",
    "gen_capped_random",
    "gen_cycle",
    "gen_grid",
    "gen_random_regular",
    "global_greedy_mis",
    "layer",
    "layer_prefix_sizes",
    "load_graph",
    "mis_query",
    "orient",
    "parse_mode",
    "parse_seed",
    "query_tree_bfs_oracle",
    "query_tree_exact",
    "query_tree_quantized",
    "save_graph",
    "verify_consistency",
]
