"""Generalized second-price auctions with conservative bidders.

Allocation and settlement, exact pure-Nash verification, the
linear-inequality feasibility route to equilibrium synthesis, and
certified price-of-anarchy search with closed-form bound sweeps.
"""

__version__ = "0.1.0"

from .auction import (
    Assignment,
    AuctionInstance,
    BidProfile,
    Outcome,
    allocate,
    assigned_welfare,
    efficiency_ratio,
    make_bids,
    make_instance,
    optimal_welfare,
    settle,
)
from .bounds import (
    BoundsPair,
    BoundsRecord,
    bounds_sweep,
    decay_mean,
    poa_bounds,
    rotation_ratio,
    shifted_ratio_monotone,
)
from .equilibrium import (
    Inequality,
    LinearSystem,
    NashReport,
    best_deviation,
    best_response_dynamics,
    max_regret_exact,
    support_system,
    verify_nash,
    weakly_feasible,
)
from .errors import (
    ConservativenessError,
    DegenerateInstanceError,
    DimensionCapError,
    GspError,
    InvalidInstanceError,
)
from .feasibility import FeasibilityResult, solve
from .reference import (
    REFERENCE_RATIO,
    REFERENCE_RATIO_2,
    gap_instance,
    reference_assignment,
    reference_equilibrium,
)
from .search import (
    CandidateRecord,
    PermutationSetReport,
    SearchConfig,
    SearchResult,
    candidate_assignments,
    certify_assignment,
    cyclic_permutation,
    enumerate_ne_permutations,
    monotonicity_probe,
    poa_lower_bound,
    read_frontier_csv,
    sorted_equilibrium_bids,
    write_frontier_csv,
)

__all__ = [
    "Assignment",
    "AuctionInstance",
    "BidProfile",
    "BoundsPair",
    "BoundsRecord",
    "CandidateRecord",
    "ConservativenessError",
    "DegenerateInstanceError",
    "DimensionCapError",
    "FeasibilityResult",
    "GspError",
    "Inequality",
    "InvalidInstanceError",
    "LinearSystem",
    "NashReport",
    "Outcome",
    "PermutationSetReport",
    "REFERENCE_RATIO",
    "REFERENCE_RATIO_2",
    "SearchConfig",
    "SearchResult",
    "allocate",
    "assigned_welfare",
    "best_deviation",
    "best_response_dynamics",
    "bounds_sweep",
    "candidate_assignments",
    "certify_assignment",
    "cyclic_permutation",
    "decay_mean",
    "efficiency_ratio",
    "enumerate_ne_permutations",
    "gap_instance",
    "make_bids",
    "make_instance",
    "max_regret_exact",
    "monotonicity_probe",
    "optimal_welfare",
    "poa_bounds",
    "poa_lower_bound",
    "read_frontier_csv",
    "reference_assignment",
    "reference_equilibrium",
    "rotation_ratio",
    "settle",
    "shifted_ratio_monotone",
    "solve",
    "sorted_equilibrium_bids",
    "support_system",
    "verify_nash",
    "weakly_feasible",
    "write_frontier_csv",
]
