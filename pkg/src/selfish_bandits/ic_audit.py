"""Exact best-response audits of whether truthful reporting is optimal.

An expert with belief b chooses a report to maximize the expected
probability the learner assigns it next round. The expectation over the
outcome (and, for bandit learners, the arm draw) is enumerated exactly,
so verdicts carry no sampling noise.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ProbVector, mix_uniform
from .learners import estimate_losses, wsu_update
from .scoring import LossFn


class Conditioning(enum.Enum):
    CONDITIONAL_ON_SELECTED = "conditional-on-selected"
    UNCONDITIONAL = "unconditional"


class AuditAlgo(enum.Enum):
    WSU = "WSU"
    WSU_UX = "WSU-UX"
    HEDGE = "Hedge-normalized"
    MWU = "MWU-normalized"


@dataclass(frozen=True)
class AuditConfig:
    algo: AuditAlgo
    pi: ProbVector
    eta: float
    gamma: float
    other_reports: tuple[float, ...]
    belief: float
    expert: int
    loss_fn: LossFn = LossFn.SQUARED
    conditioning: Conditioning = Conditioning.CONDITIONAL_ON_SELECTED

    def __post_init__(self):
        if len(self.other_reports) != self.pi.k - 1:
            raise ValueError("need one report per other expert")
        vals = (self.belief, *self.other_reports)
        if any(not 0.0 <= x <= 1.0 for x in vals):
            raise ValueError("beliefs and reports must lie in [0, 1]")
        if not 0 <= self.expert < self.pi.k:
            raise ValueError("expert index out of range")

    def reports(self, report: float) -> np.ndarray:
        r = list(self.other_reports)
        r.insert(self.expert, report)
        return np.array(r)

    def to_dict(self) -> dict:
        return {
            "algo": self.algo.value,
            "pi": self.pi.entries.tolist(),
            "eta": self.eta,
            "gamma": self.gamma,
            "other_reports": list(self.other_reports),
            "belief": self.belief,
            "expert": self.expert,
            "loss_fn": self.loss_fn.value,
            "conditioning": self.conditioning.value,
        }


def _next_prob_given_outcome(cfg: AuditConfig, reports: np.ndarray, y: int) -> float:
    i = cfg.expert
    p = np.asarray(cfg.pi)
    ell = cfg.loss_fn(reports, y)
    if cfg.algo is AuditAlgo.WSU:
        return float(wsu_update(cfg.pi, ell, cfg.eta)[i])
    if cfg.algo is AuditAlgo.HEDGE:
        w = p * np.exp(-cfg.eta * ell)
        return float(w[i] / w.sum())
    if cfg.algo is AuditAlgo.MWU:
        w = p * (1.0 - cfg.eta * ell)
        return float(w[i] / w.sum())
    pt = mix_uniform(cfg.pi, cfg.gamma)
    if cfg.conditioning is Conditioning.CONDITIONAL_ON_SELECTED:
        arms = [(i, 1.0)]
    else:
        arms = [(j, float(pt[j])) for j in range(cfg.pi.k)]
    total = 0.0
    for j, weight in arms:
        est = estimate_losses(j, float(ell[j]), pt)
        total += weight * float(wsu_update(cfg.pi, est, cfg.eta)[i])
    return total


def expected_next_prob(cfg: AuditConfig, report: float) -> float:
    """E[pi_{t+1,i}] over y ~ Bernoulli(belief) when expert i reports ``report``."""
    if not 0.0 <= report <= 1.0:
        raise ValueError("report must lie in [0, 1]")
    reports = cfg.reports(report)
    b = cfg.belief
    return b * _next_prob_given_outcome(cfg, reports, 1) + (1.0 - b) * _next_prob_given_outcome(cfg, reports, 0)


def _next_prob_batch(cfg: AuditConfig, ell: np.ndarray) -> np.ndarray:
    """Row-wise pi_{t+1,i} for a (R, K) table of realized losses."""
    i = cfg.expert
    p = np.asarray(cfg.pi)
    eta = cfg.eta
    if cfg.algo is AuditAlgo.WSU:
        avg = ell @ p
        w = p * (1.0 - eta * (ell - avg[:, None]))
    elif cfg.algo is AuditAlgo.HEDGE:
        w = p * np.exp(-eta * ell)
    elif cfg.algo is AuditAlgo.MWU:
        w = p * (1.0 - eta * ell)
    else:
        pt = np.asarray(mix_uniform(cfg.pi, cfg.gamma))
        if cfg.conditioning is Conditioning.CONDITIONAL_ON_SELECTED:
            arms = [(i, 1.0)]
        else:
            arms = [(j, float(pt[j])) for j in range(p.size)]
        out = np.zeros(ell.shape[0])
        for j, weight in arms:
            est = ell[:, j] / pt[j]
            rel = -p[j] * est[:, None] * np.ones(p.size)
            rel[:, j] += est
            w = p * (1.0 - eta * rel)
            out += weight * w[:, i] / w.sum(axis=1)
        return out
    return w[:, i] / w.sum(axis=1)


def expected_next_prob_grid(cfg: AuditConfig, grid: np.ndarray) -> np.ndarray:
    """Vectorized :func:`expected_next_prob` over an array of reports."""
    grid = np.asarray(grid, dtype=np.float64)
    base = cfg.reports(0.0)
    total = np.zeros(grid.size)
    for y, weight in ((1, cfg.belief), (0, 1.0 - cfg.belief)):
        ell = np.tile(cfg.loss_fn(base, y), (grid.size, 1))
        ell[:, cfg.expert] = cfg.loss_fn(grid, y)
        total += weight * _next_prob_batch(cfg, ell)
    return total


def best_response(cfg: AuditConfig, resolution: int = 1001) -> tuple[float, float]:
    """Grid argmax of :func:`expected_next_prob`.

    Ties (values within 1e-15 of the maximum) go to the grid point closest
    to the belief, then to the lowest report.
    """
    if resolution < 101:
        raise ValueError("use at least 101 grid points")
    grid = np.linspace(0.0, 1.0, resolution)
    vals = expected_next_prob_grid(cfg, grid)
    top = vals.max()
    ties = np.flatnonzero(vals >= top - 1e-15)
    dist = np.abs(grid[ties] - cfg.belief)
    j = ties[np.flatnonzero(dist == dist.min())[0]]
    return float(grid[j]), float(vals[j])


def random_config(
    algo: AuditAlgo,
    rng: np.random.Generator,
    conditioning: Conditioning = Conditioning.CONDITIONAL_ON_SELECTED,
    loss_fn: LossFn = LossFn.SQUARED,
) -> AuditConfig:
    """Random audit scenario; half of the opposing reports sit at 0 or 1.

    Hedge and MWU deviations shrink as eta -> 0, so eta ranges up to 0.49.
    For WSU-UX, eta is drawn inside the valid region eta <= gamma / (2K).
    """
    k = int(rng.integers(2, 6))
    pi = ProbVector(rng.dirichlet(np.ones(k)) * 0.98 + 0.02 / k)
    gamma = float(rng.uniform(0.01, 0.49))
    if algo is AuditAlgo.WSU_UX:
        eta = float(rng.uniform(0.0, 1.0)) * gamma / (2 * k)
        eta = max(eta, 1e-6)
    else:
        eta = float(rng.uniform(0.01, 0.49))
    others = []
    for _ in range(k - 1):
        if rng.random() < 0.5:
            others.append(float(rng.integers(0, 2)))
        else:
            others.append(float(rng.random()))
    return AuditConfig(
        algo, pi, eta, gamma, tuple(others), float(rng.random()), int(rng.integers(0, k)),
        loss_fn, conditioning,
    )


@dataclass
class Verdict:
    algo: str
    conditioning: str
    n_configs: int
    resolution: int
    truthful: bool
    max_deviation: float
    deviations: list[float] = field(repr=False)
    worst: dict | None = None

    @property
    def label(self) -> str:
        return "TRUTHFUL" if self.truthful else "NOT-TRUTHFUL"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("deviations")
        d["verdict"] = self.label
        return d


def ic_verdict(
    algo: AuditAlgo,
    n_configs: int = 200,
    resolution: int = 1001,
    tolerance: float | None = None,
    seed: int = 20240601,
    conditioning: Conditioning = Conditioning.CONDITIONAL_ON_SELECTED,
    loss_fn: LossFn = LossFn.SQUARED,
) -> Verdict:
    """Audit ``n_configs`` random scenarios drawn from ``seed``.

    TRUTHFUL when every best response is within ``tolerance`` (default: one
    grid step) of the belief. The worst scenario is embedded for replay.
    """
    step = 1.0 / (resolution - 1)
    tol = step if tolerance is None else tolerance
    rng = np.random.Generator(np.random.PCG64(seed))
    devs = []
    worst = None
    for _ in range(n_configs):
        cfg = random_config(algo, rng, conditioning, loss_fn)
        r_star, value = best_response(cfg, resolution)
        dev = abs(r_star - cfg.belief)
        if worst is None or dev > worst[0]:
            worst = (dev, cfg, r_star, value)
        devs.append(dev)
    max_dev = max(devs)
    worst_info = None
    if worst is not None:
        dev, cfg, r_star, value = worst
        truthful_value = expected_next_prob(cfg, cfg.belief)
        worst_info = {
            "config": cfg.to_dict(),
            "best_report": r_star,
            "deviation": dev,
            "value_at_best": value,
            "value_at_belief": truthful_value,
        }
    return Verdict(
        algo.value, conditioning.value, n_configs, resolution, max_dev <= tol, max_dev, devs, worst_info
    )
