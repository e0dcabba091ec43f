"""Shared value types, hyperparameter regimes and simplex arithmetic."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CLAMP_FLOOR = -1e-12
SUM_TOLERANCE = 1e-9

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


class HardNumericDrift(ArithmeticError):
    """A probability vector left the simplex by more than rounding noise.

    Never expected on a valid run; it means a learner update is wrong.
    """

    def __init__(self, message: str, seed: int | None = None):
        super().__init__(message)
        self.seed = seed


class Regime(enum.Enum):
    INVALID = "invalid"
    TRIVIAL = "trivial"
    NON_TRIVIAL = "non-trivial"


def simplex_repair(v: Sequence[float]) -> np.ndarray:
    """Clamp rounding-level negatives to zero and renormalize to sum 1.

    Raises HardNumericDrift if any entry is below -1e-12 or the sum is off
    by more than 1e-9.
    """
    a = np.array(v, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("expected a non-empty 1-d vector")
    if not np.all(np.isfinite(a)):
        raise HardNumericDrift(f"non-finite entries in {a!r}")
    lo = a.min()
    if lo < CLAMP_FLOOR:
        raise HardNumericDrift(f"entry {lo!r} below clamp floor {CLAMP_FLOOR}")
    s = _seqsum(a)
    if abs(s - 1.0) > SUM_TOLERANCE:
        raise HardNumericDrift(f"sum {s!r} drifted from 1 by more than {SUM_TOLERANCE}")
    if lo < 0.0:
        a[a < 0.0] = 0.0
        s = _seqsum(a)
    return a / s


def _seqsum(a) -> float:
    # left-to-right, matching the compiled kernels bit for bit
    s = 0.0
    for x in a:
        s += float(x)
    return s


@dataclass(frozen=True, eq=False)
class ProbVector:
    """A point on the probability simplex.

    Construction goes through :func:`simplex_repair`, so every instance
    satisfies the simplex invariants. The backing array is read-only.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = simplex_repair(self.entries)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def uniform(cls, k: int) -> "ProbVector":
        return cls(np.full(k, 1.0 / k))

    def __len__(self) -> int:
        return self.entries.size

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries.tolist())

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbVector):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self) -> str:
        return f"ProbVector({self.entries.tolist()})"

    @property
    def k(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class HyperParams:
    """Learning rate, mixing weight, arm count and horizon.

    Any values may be stored; :attr:`regime` classifies them. Validity is
    the WSU-UX input constraint eta, gamma in (0, 1/2) with eta*k/gamma <= 1/2.
    """

    eta: float
    gamma: float
    k: int
    horizon: int

    @property
    def valid(self) -> bool:
        return (
            0.0 < self.eta < 0.5
            and 0.0 < self.gamma < 0.5
            and self.eta * self.k / self.gamma <= 0.5
        )

    @property
    def regime(self) -> Regime:
        if not self.valid:
            return Regime.INVALID
        T = self.horizon
        if self.eta >= T ** (-2.0 / 3.0) and self.gamma <= T ** (-1.0 / 3.0):
            return Regime.NON_TRIVIAL
        return Regime.TRIVIAL


def validate_hyperparams(eta: float, gamma: float, k: int, horizon: int) -> HyperParams:
    """Build a HyperParams; inspect ``.regime`` for the classification.

    Invalid parameters are a classification, not an error. Only the
    structural preconditions k >= 2 and horizon >= 1 raise.
    """
    if k < 2:
        raise ValueError(f"need at least 2 arms, got k={k}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    return HyperParams(float(eta), float(gamma), int(k), int(horizon))


def mix_uniform(pi: ProbVector, gamma: float) -> ProbVector:
    """Mix ``pi`` with the uniform distribution: (1-gamma)*pi + gamma/K."""
    if not 0.0 <= gamma < 0.5:
        raise ValueError(f"gamma must lie in [0, 1/2), got {gamma}")
    p = np.asarray(pi, dtype=np.float64)
    return ProbVector((1.0 - gamma) * p + gamma / p.size)


def draw_arm(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF draw: first index whose cumulative mass exceeds ``u``.

    Arms are scanned in index order; falls back to the last arm if rounding
    leaves the total just below ``u``.
    """
    c = 0.0
    last = len(probs) - 1
    for i in range(last):
        c += float(probs[i])
        if u < c:
            return i
    return last


def splitmix64(x: int) -> int:
    """The splitmix64 finalizer, a bijective 64-bit avalanche mix."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(base: int, trial_index: int) -> int:
    """Per-trial stream seed: ``splitmix64(base + (index + 1) * golden)``.

    Multiplying by the odd golden-ratio constant is a bijection mod 2**64,
    and so is the finalizer, so distinct indices under one base never collide.
    """
    return splitmix64((base + (trial_index + 1) * _GOLDEN64) & _MASK64)


@dataclass(frozen=True)
class Seed:
    base: int
    trial_index: int

    @property
    def stream(self) -> int:
        return mix_seed(self.base, self.trial_index)

    def generator(self) -> np.random.Generator:
        """Independent PCG64 generator for this trial."""
        return np.random.Generator(np.random.PCG64(self.stream))


@dataclass(frozen=True)
class RoundRecord:
    """Everything one bandit round produced."""

    t: int
    chosen: int
    pi_before: ProbVector
    pi_tilde: ProbVector
    est_losses: np.ndarray
    true_losses: np.ndarray = field(repr=False)

    def __post_init__(self):
        nz = np.flatnonzero(self.est_losses)
        if nz.size > 1 or (nz.size == 1 and nz[0] != self.chosen):
            raise ValueError("estimated losses must be zero off the chosen arm")


def log_half_floor(horizon: int) -> float:
    """Hard lower bound on ln pi_{T+1,1} on the lower-bound sequence with K=2."""
    return (horizon / 100 + 1) * math.log(0.5)
