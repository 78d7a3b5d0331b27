"""Pathwise construction of the Wiener process from twisted random walks.

The package builds Brownian paths as the almost-sure limit of
twisted-and-shrunk simple random walks on a dyadic grid, recovers
coarse walks inside fine paths by first passage, evaluates Ito and
Stratonovich integrals through exact discrete identities, and ships
statistical suites that check the construction against its
distributional and pathwise guarantees.
"""

from .dyadic import DyadicValue
from .errors import CapacityError, InsufficientInputError, WalkwiseError
from .source import StepSource
from .walk import (
    WaitingTimes,
    WalkPath,
    first_exit_distribution,
    max_deviation_bound,
    tau_mgf,
    tau_moments,
    waiting_sum_law,
    waiting_sum_mgf,
    waiting_sum_tail_bound,
    waiting_times,
    walk_mgf,
    walk_tail_bound,
)
from .twist import (
    LevelStack,
    TwistedLevel,
    check_refinement,
    pattern_counts,
    twist_bridges,
)
from .wiener import (
    WienerGrid,
    build_to_level,
    convergence_report,
    error_bound,
    reference_gap_report,
    refine,
    sup_distance,
)
from .embed import (
    EmbeddingTimes,
    composed_stopping_times,
    embedding_family,
    first_passage_times,
    neighbor_diff_report,
    time_lag_report,
)
from .integrate import (
    Integrand,
    IntegrandError,
    IntegralEstimate,
    discrete_ito,
    exact_strat_value,
    get_integrand,
    ito_formula_residual,
    ito_integral,
    level_identity_check,
    partition_sum_crosscheck,
    stratonovich_integral,
    trapezoid_dyadic,
    trapezoid_lattice,
)
from .diagnostics import (
    SUITES,
    StatReport,
    binomial_allowance,
    clt_suite,
    convergence_suite,
    lags_suite,
    marginals_suite,
    mills_bound,
    modulus_suite,
    nondiff_suite,
    normal_cdf,
    normal_pdf,
    tails_suite,
    twistlaw_suite,
    variation_suite,
)
from .cli import RunConfig, main

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "DyadicValue",
    "EmbeddingTimes",
    "InsufficientInputError",
    "Integrand",
    "IntegrandError",
    "IntegralEstimate",
    "LevelStack",
    "RunConfig",
    "StatReport",
    "StepSource",
    "SUITES",
    "TwistedLevel",
    "WaitingTimes",
    "WalkPath",
    "WalkwiseError",
    "WienerGrid",
    "binomial_allowance",
    "build_to_level",
    "check_refinement",
    "clt_suite",
    "composed_stopping_times",
    "convergence_report",
    "convergence_suite",
    "discrete_ito",
    "embedding_family",
    "error_bound",
    "exact_strat_value",
    "first_exit_distribution",
    "first_passage_times",
    "get_integrand",
    "ito_formula_residual",
    "ito_integral",
    "lags_suite",
    "level_identity_check",
    "main",
    "marginals_suite",
    "max_deviation_bound",
    "mills_bound",
    "modulus_suite",
    "neighbor_diff_report",
    "nondiff_suite",
    "normal_cdf",
    "normal_pdf",
    "partition_sum_crosscheck",
    "pattern_counts",
    "reference_gap_report",
    "refine",
    "stratonovich_integral",
    "sup_distance",
    "tails_suite",
    "tau_mgf",
    "tau_moments",
    "time_lag_report",
    "trapezoid_dyadic",
    "trapezoid_lattice",
    "twist_bridges",
    "twistlaw_suite",
    "variation_suite",
    "waiting_sum_law",
    "waiting_sum_mgf",
    "waiting_sum_tail_bound",
    "waiting_times",
    "walk_mgf",
    "walk_tail_bound",
]
