"""statusrank: latent status rankings in directed friendship networks.

Decomposes directed claim networks into reciprocated and unreciprocated
edges, fits rank-difference edge probability functions by EM with a Monte
Carlo E-step over permutations, computes minimum violations rankings, and
emits the downstream degree/attribute statistics.
"""

__version__ = "0.1.0"

from .analysis import (
    AttributeTable,
    FigureSeries,
    attribute_rank_summary,
    degree_rank_curves,
    histogram_series,
    ks_uniform,
    read_attributes,
    rescale_ranks,
)
from .em import (
    EmConfig,
    FitResult,
    McmcConfig,
    PosteriorSummary,
    RankHistograms,
    exact_estep,
    expected_log_likelihood,
    log_likelihood,
    mcmc_estep,
    mstep,
    objective_gradient,
    run_em,
)
from .estimators import MvrRanker, StatusRanker, network_from_adjacency
from .model import (
    AlphaParams,
    BetaParams,
    ModelParams,
    alpha_eval,
    beta_eval,
    generate_network,
    synthetic_status_params,
)
from .mvr import (
    AnnealSchedule,
    ViolationReport,
    count_violations,
    minimum_violations_ranking,
    randomize_directions,
)
from .network import (
    DegreeSummary,
    DirectedNetwork,
    EdgeListError,
    degree_summary,
    format_edge_list,
    largest_component,
    load_edge_list,
    parse_edge_list,
    write_edge_list,
)
from .seeds import derive_seed

__all__ = [
    "AlphaParams",
    "AnnealSchedule",
    "AttributeTable",
    "BetaParams",
    "DegreeSummary",
    "DirectedNetwork",
    "EdgeListError",
    "EmConfig",
    "FigureSeries",
    "FitResult",
    "McmcConfig",
    "ModelParams",
    "MvrRanker",
    "PosteriorSummary",
    "RankHistograms",
    "StatusRanker",
    "ViolationReport",
    "alpha_eval",
    "attribute_rank_summary",
    "beta_eval",
    "count_violations",
    "degree_rank_curves",
    "degree_summary",
    "derive_seed",
    "exact_estep",
    "expected_log_likelihood",
    "format_edge_list",
    "generate_network",
    "histogram_series",
    "ks_uniform",
    "largest_component",
    "load_edge_list",
    "log_likelihood",
    "mcmc_estep",
    "minimum_violations_ranking",
    "mstep",
    "network_from_adjacency",
    "objective_gradient",
    "parse_edge_list",
    "randomize_directions",
    "read_attributes",
    "rescale_ranks",
    "run_em",
    "synthetic_status_params",
    "write_edge_list",
]
