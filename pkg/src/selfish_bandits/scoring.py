"""Losses on (report, binary outcome) pairs and grid-based properness audits.

Squared loss is strictly proper: an expert minimizes expected loss by
reporting its belief. Absolute loss is not, and is kept only as the
contrasting case.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

DEFAULT_GRID = np.linspace(0.0, 1.0, 1001)


class DomainError(ValueError):
    pass


class LossFn(enum.Enum):
    SQUARED = "squared"
    ABSOLUTE = "absolute"

    def __call__(self, r, y):
        """Loss of report ``r`` when the outcome is ``y``; vectorizes over arrays."""
        d = np.subtract(r, y)
        if self is LossFn.SQUARED:
            out = d * d
        else:
            out = np.abs(d)
        return float(out) if np.ndim(out) == 0 else out


def _check_unit(name: str, x) -> None:
    a = np.asarray(x)
    if np.any(a < 0.0) or np.any(a > 1.0) or np.any(np.isnan(a)):
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")


def expected_loss(fn: LossFn, r, b):
    """Expected loss of reporting ``r`` when y ~ Bernoulli(b)."""
    _check_unit("report", r)
    _check_unit("belief", b)
    b = np.asarray(b, dtype=np.float64)
    out = b * fn(r, 1) + (1.0 - b) * fn(r, 0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class StrictlyProper:
    n_beliefs: int
    n_reports: int


@dataclass(frozen=True)
class NotProper:
    """A belief ``b`` and a report ``r != b`` doing at least as well as ``b``."""

    belief: float
    report: float
    loss_at_report: float
    loss_at_belief: float


def is_witness(fn: LossFn, b: float, r: float) -> bool:
    return r != b and expected_loss(fn, r, b) <= expected_loss(fn, b, b)


def properness_audit(
    fn: LossFn,
    belief_grid: Sequence[float] = DEFAULT_GRID,
    report_grid: Sequence[float] | None = None,
) -> Union[StrictlyProper, NotProper]:
    """Check on finite grids that truthful reporting is the unique minimizer.

    Beliefs are scanned in grid order and the first failure is returned,
    paired with the report minimizing expected loss for that belief. The
    report grid defaults to the belief grid and must contain every belief.
    """
    beliefs = np.asarray(belief_grid, dtype=np.float64)
    reports = beliefs if report_grid is None else np.asarray(report_grid, dtype=np.float64)
    _check_unit("belief grid", beliefs)
    _check_unit("report grid", reports)
    missing = np.setdiff1d(beliefs, reports)
    if missing.size:
        raise DomainError(f"report grid lacks beliefs {missing[:5].tolist()}")
    for b in beliefs:
        losses = expected_loss(fn, reports, float(b))
        truthful = float(expected_loss(fn, float(b), float(b)))
        rivals = (reports != b) & (losses <= truthful)
        if np.any(rivals):
            # best rival: lowest loss, ties to the lowest report
            idx = np.flatnonzero(rivals)
            j = idx[np.argmin(losses[idx])]
            return NotProper(float(b), float(reports[j]), float(losses[j]), truthful)
    return StrictlyProper(beliefs.size, reports.size)
