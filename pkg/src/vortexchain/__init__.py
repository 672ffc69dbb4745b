"""Asymptotic variance analysis for finite Markov chains and vortex insertion.

Validate a chain, measure the asymptotic variance of its MCMC estimator
(closed form, truncated series, or empirically), find a loop in a reversible
chain's transition graph, and insert a vortex flow around it: the perturbed
chain keeps the stationary distribution and its estimator variance can only
go down.
"""

from .chain import (
    DEFAULT_TOL,
    ErgodicityReport,
    Tolerances,
    ValidatedChain,
    chain_from_parts,
    is_ergodic,
    joint_distribution,
    reverse_operator,
    stationary_distribution,
    validate_chain,
)
from .errors import VortexChainError
from .experiments import (
    CorrelationResult,
    ExperimentReport,
    RingSpec,
    build_twopeak_ring,
    build_uniform_ring,
    ring_flow,
    run_correlation_experiment,
    run_ring_experiment,
    twopeak_profile,
)
from .simulate import (
    EmpiricalVariance,
    HittingEstimate,
    Trajectory,
    TrajectoryStats,
    distinct_state_coverage,
    empirical_asymptotic_variance,
    empirical_autocovariance,
    empirical_hitting_time,
    mcmc_estimate,
    mean_hitting_time_exact,
    sample_trajectory,
    trajectory_stats,
)
from .variance import (
    ComparisonResult,
    Ordering,
    VarianceReport,
    asymptotic_variance_kenney,
    asymptotic_variance_series,
    compare_asymptotic,
    function_variance,
    hermitian_inverse_residual,
    hermitian_skew_split,
    variance_kernel,
)
from .vortex import (
    Cycle,
    NonReversiblePair,
    SkewFlow,
    VortexBasis,
    compose_vortices,
    cycle_vortex,
    express_in_basis,
    find_loop,
    insert_vortex,
    lp_max_feasible_entry,
    max_feasible_epsilon,
    strict_improvement_witness,
    vortex_basis,
    zero_sum_vectors,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "ErgodicityReport",
    "Tolerances",
    "ValidatedChain",
    "chain_from_parts",
    "is_ergodic",
    "joint_distribution",
    "reverse_operator",
    "stationary_distribution",
    "validate_chain",
    "VortexChainError",
    "CorrelationResult",
    "ExperimentReport",
    "RingSpec",
    "build_twopeak_ring",
    "build_uniform_ring",
    "ring_flow",
    "run_correlation_experiment",
    "run_ring_experiment",
    "twopeak_profile",
    "EmpiricalVariance",
    "HittingEstimate",
    "Trajectory",
    "TrajectoryStats",
    "distinct_state_coverage",
    "empirical_asymptotic_variance",
    "empirical_autocovariance",
    "empirical_hitting_time",
    "mcmc_estimate",
    "mean_hitting_time_exact",
    "sample_trajectory",
    "trajectory_stats",
    "ComparisonResult",
    "Ordering",
    "VarianceReport",
    "asymptotic_variance_kenney",
    "asymptotic_variance_series",
    "compare_asymptotic",
    "function_variance",
    "hermitian_inverse_residual",
    "hermitian_skew_split",
    "variance_kernel",
    "Cycle",
    "NonReversiblePair",
    "SkewFlow",
    "VortexBasis",
    "compose_vortices",
    "cycle_vortex",
    "express_in_basis",
    "find_loop",
    "insert_vortex",
    "lp_max_feasible_entry",
    "max_feasible_epsilon",
    "strict_improvement_witness",
    "vortex_basis",
    "zero_sum_vectors",
]
