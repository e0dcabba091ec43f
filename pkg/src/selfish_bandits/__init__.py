"""Simulation lab for prediction with reputation-seeking experts.

Full-information learners (Hedge, MWU, WSU), bandit learners (WSU-UX, EXP3),
the adversarial loss sequences that force WSU-UX to T^{2/3} regret, exact
incentive-compatibility audits, and a seeded Monte Carlo engine.
"""

from .core import (
    HardNumericDrift,
    HyperParams,
    ProbVector,
    Regime,
    RoundRecord,
    Seed,
    mix_seed,
    mix_uniform,
    simplex_repair,
    validate_hyperparams,
)
from .environments import (
    LossModel,
    PhasePlan,
    bernoulli_sequence,
    derived_quantities,
    lower_bound_sequence,
    phase_plan,
    realize_beliefs,
    trivial_sequence,
)
from .learners import LearnerKind, LearnerState, init_state
from .scoring import LossFn, expected_loss, properness_audit

__version__ = "0.1.0"

__all__ = [
    "HardNumericDrift",
    "HyperParams",
    "LearnerKind",
    "LearnerState",
    "LossFn",
    "LossModel",
    "PhasePlan",
    "ProbVector",
    "Regime",
    "RoundRecord",
    "Seed",
    "bernoulli_sequence",
    "derived_quantities",
    "expected_loss",
    "init_state",
    "lower_bound_sequence",
    "mix_seed",
    "mix_uniform",
    "phase_plan",
    "properness_audit",
    "realize_beliefs",
    "simplex_repair",
    "trivial_sequence",
    "validate_hyperparams",
]
