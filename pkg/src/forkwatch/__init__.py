"""Impact of peer-to-peer connectivity on proof-of-work consensus security."""

from .graph import (
    GraphError,
    GraphSpec,
    NetworkGraph,
    contract_pool,
    gen_exponential,
    gen_regular,
    gen_regular_clustered,
    validate,
)
from .honest import analyze_honest, at50_from_mr, expected_wins, fork_rate, omega_hat
from .propagation import MiningProfile, all_pairs_hop_distance, uninformed_profile
from .selfish import (
    SelfishConfig,
    expansion_sweep,
    gamma_sm,
    profitability_threshold,
    selfish_revenue,
    weighted_betweenness,
)
from .sim import SimOptions, SimReport, simulate_honest, simulate_selfish

__version__ = "0.1.0"

__all__ = [
    "GraphError",
    "GraphSpec",
    "NetworkGraph",
    "contract_pool",
    "gen_exponential",
    "gen_regular",
    "gen_regular_clustered",
    "validate",
    "analyze_honest",
    "at50_from_mr",
    "expected_wins",
    "fork_rate",
    "omega_hat",
    "MiningProfile",
    "all_pairs_hop_distance",
    "uninformed_profile",
    "SelfishConfig",
    "expansion_sweep",
    "gamma_sm",
    "profitability_threshold",
    "selfish_revenue",
    "weighted_betweenness",
    "SimOptions",
    "SimReport",
    "simulate_honest",
    "simulate_selfish",
]
