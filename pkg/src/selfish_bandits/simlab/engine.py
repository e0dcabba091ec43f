"""Seeded trials and their across-trial aggregation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..core import HardNumericDrift, HyperParams, Regime, Seed
from ..environments import (
    DerivedQuantities,
    Epsilon2TooLarge,
    EnvKind,
    LossModel,
    PhasePlan,
    derived_quantities,
    phase_plan,
)
from ..learners import LearnerKind, check_params
from . import kernels as K

CHECKPOINT_BUDGET = 1024

_KIND_CODES = {
    LearnerKind.WSU_UX: K.KIND_WSU_UX,
    LearnerKind.EXP3: K.KIND_EXP3,
    LearnerKind.HEDGE: K.KIND_HEDGE,
    LearnerKind.MWU: K.KIND_MWU,
    LearnerKind.WSU: K.KIND_WSU,
}

SCALAR_FIELDS = (
    "pseudo_regret",
    "ln_pi_final",
    "pi_at_T1",
    "pi_at_T1_plus_1",
    "pi_at_T1T2_plus_1",
    "pi_final",
    "second_moment_sum",
    "bias_sum",
    "arm1_pulls_phase1",
)
EVENT_FIELDS = ("event_e1", "event_e2", "event_recovered")


@dataclass
class Trajectory:
    """What one trial leaves behind.

    ``checkpoints`` maps a 1-based round t to pi_{t,1} (round T+1 is the
    final distribution). Phase snapshots are None when T < 1000; ``event_e1``
    is None unless the parameters are non-trivial and M is defined.
    """

    learner: str
    env: str
    horizon: int
    eta: float
    gamma: float
    seed: Seed
    checkpoints: dict[int, float]
    pseudo_regret: float
    second_moment_sum: float
    bias_sum: float
    ln_pi_final: float
    pi_final: float
    arm1_pulls_phase1: int
    pi_at_T1: float | None = None
    pi_at_T1_plus_1: float | None = None
    pi_at_T1T2_plus_1: float | None = None
    event_e1: bool | None = None
    event_e2: bool | None = None
    event_recovered: bool = False
    diagnostics: dict[str, float] = field(default_factory=dict)


def checkpoint_rounds(horizon: int, plan: PhasePlan | None = None, extra: Iterable[int] = ()) -> np.ndarray:
    step = max(1, horizon // CHECKPOINT_BUDGET)
    rounds = set(range(1, horizon + 2, step))
    rounds.add(horizon + 1)
    if plan is not None:
        a, b, c, _ = plan.boundaries
        rounds.update((a, a + 1, b + 1, c + 1))
    rounds.update(int(t) for t in extra if 1 <= t <= horizon + 1)
    return np.array(sorted(rounds), dtype=np.int64)


def _derived_or_none(params: HyperParams) -> DerivedQuantities | None:
    if params.k != 2 or params.horizon < 1000 or params.regime is not Regime.NON_TRIVIAL:
        return None
    try:
        return derived_quantities(params)
    except Epsilon2TooLarge:
        return None


def run_trial(
    kind: LearnerKind,
    model: LossModel,
    params: HyperParams,
    seed: Seed,
    extra_checkpoints: Iterable[int] = (),
    _derived: DerivedQuantities | None = None,
) -> Trajectory:
    """Play ``kind`` against ``model`` for its full horizon.

    Regret is pseudo-regret: each round adds sum_j pi~_{t,j} l_{t,j} (true
    losses, the mixed distribution for bandit learners) and the best arm's
    cumulative loss is subtracted at the end.
    """
    reason = check_params(kind, params)
    if reason:
        raise ValueError(reason)
    if params.k != model.k or params.horizon != model.horizon:
        raise ValueError("parameters and loss model disagree on K or T")
    T = model.horizon
    plan = phase_plan(T) if T >= 1000 else None
    rounds = checkpoint_rounds(T, plan, extra_checkpoints)
    if kind.bandit:
        u = seed.generator().random(T)
    else:
        u = np.empty(0)
    t1 = T // 100 if model.kind is EnvKind.LOWER_BOUND else 0
    mono_lo = t1 + 1 if model.kind is EnvKind.LOWER_BOUND else 1
    mono_hi = T if model.kind is EnvKind.LOWER_BOUND else 0
    out, ck = K.run_kernel(
        _KIND_CODES[kind], model.matrix, params.eta, params.gamma, u, rounds, t1, mono_lo, mono_hi
    )
    if out[K.S_ERROR_ROUND]:
        raise HardNumericDrift(
            f"simplex drift at round {int(out[K.S_ERROR_ROUND])} "
            f"(base seed {seed.base}, trial {seed.trial_index})",
            seed=seed.stream,
        )
    checkpoints = dict(zip(rounds.tolist(), ck.tolist()))
    best = float(model.cumulative[model.best_arm])
    traj = Trajectory(
        learner=kind.value,
        env=model.name,
        horizon=T,
        eta=params.eta,
        gamma=params.gamma,
        seed=seed,
        checkpoints=checkpoints,
        pseudo_regret=float(out[K.S_LOSS]) - best,
        second_moment_sum=float(out[K.S_SECOND_MOMENT]),
        bias_sum=float(out[K.S_BIAS]),
        ln_pi_final=float(out[K.S_LN_PI_FINAL]),
        pi_final=float(out[K.S_PI_FINAL]),
        arm1_pulls_phase1=int(out[K.S_PULLS1_PHASE1]),
        event_recovered=bool(out[K.S_PI_FINAL] >= 0.75),
        diagnostics={
            "max_sum_drift": float(out[K.S_MAX_DRIFT]),
            "min_entry_pre_clamp": float(out[K.S_MIN_ENTRY]),
            "rel_loss_min": float(out[K.S_REL_MIN]),
            "rel_loss_max": float(out[K.S_REL_MAX]),
            "multiplier_min": float(out[K.S_MULT_MIN]),
            "multiplier_max": float(out[K.S_MULT_MAX]),
            "monotone_violations": float(out[K.S_MONO_VIOL]),
        },
    )
    if plan is not None:
        a, b, _, _ = plan.boundaries
        traj.pi_at_T1 = checkpoints[a]
        traj.pi_at_T1_plus_1 = checkpoints[a + 1]
        traj.pi_at_T1T2_plus_1 = checkpoints[b + 1]
        traj.event_e2 = traj.pi_at_T1T2_plus_1 >= 0.25
        dq = _derived if _derived is not None else _derived_or_none(params)
        if dq is not None:
            traj.event_e1 = traj.pi_at_T1_plus_1 >= 2.0 ** (-dq.m_exponent)
    return traj


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    se: float
    ci_low: float
    ci_high: float
    n: int

    @classmethod
    def of(cls, values: Sequence[float]) -> "Summary":
        n = len(values)
        mean = math.fsum(values) / n
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1) if n > 1 else 0.0
        std = math.sqrt(var)
        se = std / math.sqrt(n)
        return cls(mean, std, se, mean - 1.96 * se, mean + 1.96 * se, n)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "se": self.se, "ci95": [self.ci_low, self.ci_high], "n": self.n}


@dataclass
class AggregateStats:
    learner: str
    env: str
    horizon: int
    params: HyperParams
    base_seed: int
    n_trials: int
    scalars: dict[str, Summary]
    events: dict[str, Summary]
    mean_checkpoints: dict[int, float]
    derived: DerivedQuantities | None
    trajectories: list[Trajectory] = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "learner": self.learner,
            "env": self.env,
            "T": self.horizon,
            "eta": self.params.eta,
            "gamma": self.params.gamma,
            "K": self.params.k,
            "regime": self.params.regime.value,
            "base_seed": self.base_seed,
            "n_trials": self.n_trials,
            "scalars": {k: v.to_dict() for k, v in self.scalars.items()},
            "events": {k: v.to_dict() for k, v in self.events.items()},
        }
        if self.derived is not None:
            dq = self.derived
            d["derived"] = {
                "M": dq.m_exponent,
                "T_prime": dq.t_prime,
                "eps1": dq.eps1,
                "eps2": dq.eps2,
                "T_prime_le_T2": dq.t_prime_within_phase,
            }
        return d


def monte_carlo(
    kind: LearnerKind,
    model: LossModel,
    params: HyperParams,
    n_trials: int,
    base_seed: int,
    parallelism: int = 1,
    extra_checkpoints: Iterable[int] = (),
) -> AggregateStats:
    """Run ``n_trials`` independent trials seeded by (base_seed, index).

    Results are folded in trial-index order with exactly rounded sums, so
    the output does not depend on ``parallelism``.
    """
    if n_trials < 2:
        raise ValueError("need at least 2 trials")
    extra = tuple(extra_checkpoints)
    dq = _derived_or_none(params)
    model.matrix  # materialize once before sharing across threads

    def one(i: int) -> Trajectory:
        return run_trial(kind, model, params, Seed(base_seed, i), extra, _derived=dq)

    if parallelism <= 1:
        trajs = [one(i) for i in range(n_trials)]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            trajs = list(pool.map(one, range(n_trials)))
    return aggregate(trajs, params, base_seed, dq)


def aggregate(
    trajs: list[Trajectory], params: HyperParams, base_seed: int, dq: DerivedQuantities | None = None
) -> AggregateStats:
    scalars = {}
    for name in SCALAR_FIELDS:
        vals = [getattr(t, name) for t in trajs]
        if all(v is not None for v in vals):
            scalars[name] = Summary.of([float(v) for v in vals])
    events = {}
    for name in EVENT_FIELDS:
        vals = [getattr(t, name) for t in trajs]
        if all(v is not None for v in vals):
            events[name] = Summary.of([1.0 if v else 0.0 for v in vals])
    rounds = sorted(trajs[0].checkpoints)
    mean_ck = {r: math.fsum(t.checkpoints[r] for t in trajs) / len(trajs) for r in rounds}
    first = trajs[0]
    return AggregateStats(
        first.learner, first.env, first.horizon, params, base_seed, len(trajs),
        scalars, events, mean_ck, dq, trajs,
    )
