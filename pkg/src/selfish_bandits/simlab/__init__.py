"""Monte Carlo engine and the statistics layer on top of it."""

from .analysis import (
    ClaimCheck,
    ClaimReport,
    HelperReport,
    ScalingFit,
    claim2_threshold,
    claim_statistics,
    combiner_lhs,
    combiner_optimizers,
    combiner_rhs,
    log_quadratic_violations,
    lower_bound_combiner_check,
    math_helper_checks,
    phase_boundaries,
    scaling_fit,
    second_moment_terms,
    tuned_params,
    tuned_upper_bound,
    upper_bound_formula,
)
from .engine import (
    AggregateStats,
    Summary,
    Trajectory,
    aggregate,
    checkpoint_rounds,
    monte_carlo,
    run_trial,
)

__all__ = [
    "AggregateStats",
    "ClaimCheck",
    "ClaimReport",
    "HelperReport",
    "ScalingFit",
    "Summary",
    "Trajectory",
    "aggregate",
    "checkpoint_rounds",
    "claim2_threshold",
    "claim_statistics",
    "combiner_lhs",
    "combiner_optimizers",
    "combiner_rhs",
    "log_quadratic_violations",
    "lower_bound_combiner_check",
    "math_helper_checks",
    "monte_carlo",
    "phase_boundaries",
    "run_trial",
    "scaling_fit",
    "second_moment_terms",
    "tuned_params",
    "tuned_upper_bound",
    "upper_bound_formula",
]
