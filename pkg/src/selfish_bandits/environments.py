"""Oblivious loss sequences, their phase structure and the quantities M, T', eps1, eps2."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import HyperParams, Regime


class EnvKind(enum.Enum):
    LOWER_BOUND = "lower-bound"
    TRIVIAL_ETA = "trivial-eta"
    BERNOULLI = "bernoulli"


class RegimeMismatch(ValueError):
    pass


class Epsilon2TooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LossModel:
    """A fixed loss table ``loss(t, i)`` for rounds 1..T and arms 1..K.

    Rounds and arms are 1-based in :meth:`loss` to match the usual notation;
    :attr:`matrix` is the 0-based (T, K) array the simulators consume.
    """

    kind: EnvKind
    horizon: int
    k: int = 2
    p: tuple[float, ...] = ()
    seed: int = 0
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @cached_property
    def matrix(self) -> np.ndarray:
        if self._matrix is not None:
            m = self._matrix
        else:
            m = _build(self)
        m = np.ascontiguousarray(m, dtype=np.float64)
        m.setflags(write=False)
        return m

    def loss(self, t: int, i: int) -> float:
        if not (1 <= t <= self.horizon and 1 <= i <= self.k):
            raise IndexError(f"round {t} / arm {i} out of range")
        return float(self.matrix[t - 1, i - 1])

    @property
    def name(self) -> str:
        if self.kind is EnvKind.BERNOULLI:
            return "bernoulli:" + ",".join(f"{x:g}" for x in self.p)
        return self.kind.value

    @cached_property
    def cumulative(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    @property
    def best_arm(self) -> int:
        """0-based index of the arm with least cumulative loss, ties to the lowest."""
        if self.kind in (EnvKind.LOWER_BOUND, EnvKind.TRIVIAL_ETA):
            return 0
        return int(np.argmin(self.cumulative))


def _build(model: LossModel) -> np.ndarray:
    T = model.horizon
    m = np.zeros((T, model.k))
    if model.kind is EnvKind.LOWER_BOUND:
        t1 = T // 100
        m[:t1, 0] = 1.0
        m[t1:, 1] = 1.0
    elif model.kind is EnvKind.TRIVIAL_ETA:
        m[:, 1] = 1.0
    else:
        rng = np.random.Generator(np.random.PCG64(model.seed))
        m[:] = rng.random((T, model.k)) < np.asarray(model.p)
    return m


def lower_bound_sequence(T: int) -> LossModel:
    """Arm 1 alone loses for the first floor(T/100) rounds, arm 2 alone afterwards."""
    if T < 100:
        raise ValueError(f"need T >= 100 so phase 1 is non-empty, got {T}")
    return LossModel(EnvKind.LOWER_BOUND, T)


def trivial_sequence(T: int) -> LossModel:
    """Arm 1 never loses, arm 2 always does."""
    if T < 1:
        raise ValueError("horizon must be >= 1")
    return LossModel(EnvKind.TRIVIAL_ETA, T)


def bernoulli_sequence(T: int, p: tuple[float, ...] = (0.1, 0.9), seed: int = 0) -> LossModel:
    """Stochastic sanity environment: arm i loses with probability p[i].

    The table is drawn once from ``seed``, so the model stays oblivious.
    """
    if any(not 0.0 <= x <= 1.0 for x in p) or len(p) < 2:
        raise ValueError(f"bad Bernoulli means {p}")
    return LossModel(EnvKind.BERNOULLI, T, k=len(p), p=tuple(float(x) for x in p), seed=seed)


def realize_beliefs(model: LossModel) -> tuple[np.ndarray, np.ndarray]:
    """Beliefs and outcomes whose truthful squared loss is the table itself.

    Outcome y_t = 0 and belief b_{t,i} = sqrt(l_{t,i}); returns arrays of
    shape (T, K) and (T,).
    """
    beliefs = np.sqrt(model.matrix)
    return beliefs, np.zeros(model.horizon, dtype=np.int64)


@dataclass(frozen=True)
class PhasePlan:
    horizon: int
    t1: int
    t2: int
    t3: int
    t4: int

    @property
    def boundaries(self) -> tuple[int, int, int, int]:
        """Last round of each sub-phase."""
        a = self.t1
        b = a + self.t2
        c = b + self.t3
        return (a, b, c, c + self.t4)


def phase_plan(T: int) -> PhasePlan:
    """Sub-phases of lengths T/100, 2T/10, T/10 (floored) and the remainder."""
    if T < 1000:
        raise ValueError(f"need T >= 1000 for four non-empty sub-phases, got {T}")
    t1, t2, t3 = T // 100, (2 * T) // 10, T // 10
    return PhasePlan(T, t1, t2, t3, T - t1 - t2 - t3)


@dataclass(frozen=True)
class DerivedQuantities:
    m_exponent: float
    t_prime: float
    eps1: float
    eps2: float
    t_prime_within_phase: bool


def derived_quantities(params: HyperParams) -> DerivedQuantities:
    """M, T', eps1 and eps2 for the lower-bound sequence at these parameters.

    Values are reported as computed; eps1 may well exceed 1 at moderate T.
    """
    if params.regime is not Regime.NON_TRIVIAL:
        raise RegimeMismatch(f"parameters are {params.regime.value}, not non-trivial")
    T, K, eta, gamma = params.horizon, params.k, params.eta, params.gamma
    plan = phase_plan(T)
    ln_t = math.log(T)
    eps1 = math.sqrt(6.0 * ln_t / ((2.0 * gamma / K) * plan.t1))
    eps2 = math.sqrt(4.0 * ln_t / (((3.0 - gamma) / 4.0) * plan.t2))
    if eps2 >= 1.0:
        raise Epsilon2TooLarge(f"eps2 = {eps2:.4g} >= 1 at T = {T}")
    m = (math.log(2.0 * K / gamma) + 2.0 * (1.0 + eps1) * (1.0 + eta * K / gamma) * eta * plan.t1) / math.log(2.0)
    t_prime = (1.0 / (1.0 - eps2)) * (4.0 / (3.0 - gamma)) * (2.0 / eta) * m
    return DerivedQuantities(m, t_prime, eps1, eps2, t_prime <= plan.t2)
