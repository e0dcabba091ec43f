"""Sequential update rules: Hedge, MWU, WSU, the WSWM payment rule, WSU-UX and EXP3.

Every learner is a plain immutable :class:`LearnerState` plus a pure update.
Bandit steps take a numpy ``Generator`` and consume exactly one uniform draw
per round, which is what lets the compiled kernels in
:mod:`selfish_bandits.simlab.kernels` replay a trial bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import HyperParams, ProbVector, RoundRecord, _seqsum, draw_arm, mix_uniform
from .scoring import DomainError, LossFn

MWU_RENORM_EVERY = 1024


class LearnerKind(enum.Enum):
    HEDGE = "hedge"
    MWU = "mwu"
    WSU = "wsu"
    WSU_UX = "wsu-ux"
    EXP3 = "exp3"

    @property
    def bandit(self) -> bool:
        return self in (LearnerKind.WSU_UX, LearnerKind.EXP3)

    @classmethod
    def parse(cls, name: str) -> "LearnerKind":
        key = name.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown learner {name!r}; choose from {[k.value for k in cls]}")


@dataclass(frozen=True)
class LearnerState:
    """Learner distribution plus whatever raw weights the rule needs.

    Hedge and EXP3 keep log-weights; MWU keeps linear weights that are
    renormalized every 1024 rounds; WSU and WSU-UX carry only ``probs``.
    ``t`` is the 1-based index of the next round to be played.
    """

    kind: LearnerKind
    probs: ProbVector
    params: HyperParams
    t: int = 1
    log_weights: np.ndarray | None = None
    weights: np.ndarray | None = None


def init_state(kind: LearnerKind, params: HyperParams) -> LearnerState:
    k = params.k
    probs = ProbVector.uniform(k)
    if kind in (LearnerKind.HEDGE, LearnerKind.EXP3):
        return LearnerState(kind, probs, params, log_weights=np.zeros(k))
    if kind is LearnerKind.MWU:
        return LearnerState(kind, probs, params, weights=np.ones(k))
    return LearnerState(kind, probs, params)


def state_from_probs(kind: LearnerKind, pi: ProbVector, params: HyperParams) -> LearnerState:
    """A state whose raw weights are proportional to ``pi``."""
    p = np.asarray(pi)
    if kind in (LearnerKind.HEDGE, LearnerKind.EXP3):
        with np.errstate(divide="ignore"):
            return LearnerState(kind, pi, params, log_weights=np.log(p))
    if kind is LearnerKind.MWU:
        return LearnerState(kind, pi, params, weights=p.copy())
    return LearnerState(kind, pi, params)


def _softmax(log_w: np.ndarray) -> ProbVector:
    m = log_w.max()
    w = np.array([math.exp(x - m) for x in log_w])
    return ProbVector(w / _seqsum(w))


def _as_losses(losses, k: int) -> np.ndarray:
    a = np.asarray(losses, dtype=np.float64)
    if a.shape != (k,):
        raise ValueError(f"expected {k} losses, got shape {a.shape}")
    return a


def hedge_update(state: LearnerState, losses: Sequence[float]) -> LearnerState:
    """w_i <- w_i * exp(-eta * l_i), kept in log space."""
    ell = _as_losses(losses, state.probs.k)
    lw = state.log_weights - state.params.eta * ell
    return replace(state, probs=_softmax(lw), log_weights=lw, t=state.t + 1)


def mwu_update(state: LearnerState, losses: Sequence[float]) -> LearnerState:
    """w_i <- w_i * (1 - eta * l_i); requires eta * l_i < 1."""
    ell = _as_losses(losses, state.probs.k)
    eta = state.params.eta
    if np.any(eta * ell >= 1.0):
        raise DomainError("MWU needs eta * loss < 1 for every arm")
    w = state.weights * (1.0 - eta * ell)
    s = _seqsum(w)
    probs = ProbVector(w / s)
    if state.t % MWU_RENORM_EVERY == 0:
        w = w / s
    return replace(state, probs=probs, weights=w, t=state.t + 1)


def wsu_update(pi: ProbVector, losses: Sequence[float], eta: float) -> ProbVector:
    """Weighted-Score Update: pi_i * (1 - eta * (l_i - sum_j pi_j l_j))."""
    p = np.asarray(pi)
    ell = _as_losses(losses, p.size)
    avg = _seqsum(p * ell)
    return ProbVector(p * (1.0 - eta * (ell - avg)))


def wsu_step(state: LearnerState, losses: Sequence[float]) -> LearnerState:
    return replace(state, probs=wsu_update(state.probs, losses, state.params.eta), t=state.t + 1)


def wswm_payments(
    reports: Sequence[float],
    wagers: Sequence[float],
    y: int,
    fn: LossFn = LossFn.SQUARED,
    normalize_wagers: bool = True,
) -> np.ndarray:
    """Weighted-Score Wagering Mechanism payments.

    Gamma_i = m_i * (1 - l(r_i, y) + sum_j w_j l(r_j, y)) where w is the
    wager vector normalized to sum 1 (default) or the raw wagers
    (``normalize_wagers=False``, budget-balanced only when sum(m) == 1).
    """
    m = np.asarray(wagers, dtype=np.float64)
    if np.any(m < 0.0):
        raise DomainError("wagers must be non-negative")
    ell = fn(np.asarray(reports, dtype=np.float64), y)
    total = _seqsum(m)
    if normalize_wagers:
        if total == 0.0:
            return np.zeros_like(m)
        weights = m / total
    else:
        weights = m
    return m * (1.0 - ell + _seqsum(weights * ell))


def wsu_as_wagering(
    pi: ProbVector, reports: Sequence[float], y: int, eta: float, fn: LossFn = LossFn.SQUARED
) -> ProbVector:
    """WSU written as a wagering mechanism.

    Wager eta*pi through WSWM and hand back the remaining (1-eta)*pi
    untouched. With normalized wagers this reproduces :func:`wsu_update`
    on the losses l_i = fn(r_i, y).
    """
    p = np.asarray(pi)
    return ProbVector(wswm_payments(reports, eta * p, y, fn) + (1.0 - eta) * p)


def estimate_losses(chosen: int, loss_value: float, pi_tilde: ProbVector) -> np.ndarray:
    """Importance-weighted estimate: loss / pi_tilde at the chosen arm, 0 elsewhere."""
    q = float(pi_tilde[chosen])
    if q < 1e-15:
        raise ZeroDivisionError(f"selection probability {q!r} of arm {chosen} is too small")
    est = np.zeros(len(pi_tilde))
    est[chosen] = loss_value / q
    return est


def _draw(rng, pi_tilde: ProbVector, forced_arm: int | None) -> int:
    if forced_arm is not None:
        return forced_arm
    return draw_arm(pi_tilde.entries, rng.random())


def wsu_ux_step(
    state: LearnerState, true_losses: Sequence[float], rng, forced_arm: int | None = None
) -> tuple[LearnerState, RoundRecord]:
    """One round of WSU with uniform exploration.

    Draw from the gamma-mixed distribution, estimate losses by importance
    weighting and apply the WSU update to the unmixed distribution.
    ``forced_arm`` skips the draw (no random number is consumed).
    """
    ell = _as_losses(true_losses, state.probs.k)
    eta, gamma = state.params.eta, state.params.gamma
    pt = mix_uniform(state.probs, gamma)
    arm = _draw(rng, pt, forced_arm)
    est = estimate_losses(arm, float(ell[arm]), pt)
    new = wsu_update(state.probs, est, eta)
    rec = RoundRecord(state.t, arm, state.probs, pt, est, ell)
    return replace(state, probs=new, t=state.t + 1), rec


def exp3_step(
    state: LearnerState, true_losses: Sequence[float], rng, forced_arm: int | None = None
) -> tuple[LearnerState, RoundRecord]:
    """Exponential weights on importance-weighted losses with uniform mixing."""
    ell = _as_losses(true_losses, state.probs.k)
    eta, gamma = state.params.eta, state.params.gamma
    pt = mix_uniform(state.probs, gamma)
    arm = _draw(rng, pt, forced_arm)
    est = estimate_losses(arm, float(ell[arm]), pt)
    lw = state.log_weights.copy()
    lw[arm] -= eta * est[arm]
    rec = RoundRecord(state.t, arm, state.probs, pt, est, ell)
    return replace(state, probs=_softmax(lw), log_weights=lw, t=state.t + 1), rec


def full_info_step(state: LearnerState, losses: Sequence[float]) -> LearnerState:
    if state.kind is LearnerKind.HEDGE:
        return hedge_update(state, losses)
    if state.kind is LearnerKind.MWU:
        return mwu_update(state, losses)
    if state.kind is LearnerKind.WSU:
        return wsu_step(state, losses)
    raise ValueError(f"{state.kind.value} is a bandit learner")


def exp3_default_params(k: int, horizon: int) -> HyperParams:
    """Minimax tuning eta = sqrt(ln K / (K T)) with no extra exploration."""
    return HyperParams(math.sqrt(math.log(k) / (k * horizon)), 0.0, k, horizon)


def check_params(kind: LearnerKind, params: HyperParams) -> str | None:
    """Reason the learner cannot run with ``params``, or None if it can."""
    eta, gamma = params.eta, params.gamma
    if kind is LearnerKind.WSU_UX:
        return None if params.valid else "WSU-UX needs eta, gamma in (0,1/2) and eta*K/gamma <= 1/2"
    if kind is LearnerKind.EXP3:
        return None if eta > 0.0 and 0.0 <= gamma < 0.5 else "EXP3 needs eta > 0 and gamma in [0,1/2)"
    if kind is LearnerKind.WSU:
        return None if 0.0 < eta < 0.5 else "WSU needs eta in (0,1/2)"
    if kind is LearnerKind.MWU:
        return None if 0.0 < eta < 1.0 else "MWU needs eta in (0,1)"
    return None if eta > 0.0 else "Hedge needs eta > 0"


# Exact one-round identities used by the identity checks.


def wsu_ux_expected_next(pi: ProbVector, losses: Sequence[float], eta: float, gamma: float) -> np.ndarray:
    """E[pi_{t+1} | history], enumerating the arm draw exactly."""
    ell = _as_losses(losses, pi.k)
    pt = mix_uniform(pi, gamma)
    out = np.zeros(pi.k)
    for i in range(pi.k):
        nxt = wsu_update(pi, estimate_losses(i, float(ell[i]), pt), eta)
        out += pt[i] * np.asarray(nxt)
    return out


def recursive_expectation(p: float, own_loss: float, other_loss: float, eta: float) -> float:
    """Two-arm closed form (1 - C) p + C p^2 with C = eta * (own - other)."""
    c = eta * (own_loss - other_loss)
    return (1.0 - c) * p + c * p * p


def linearized_hedge_update(pi: ProbVector, losses: Sequence[float], eta: float) -> ProbVector:
    """Hedge with exp(-eta l_i) replaced by its first-order expansion around
    the mean loss: w_i = pi_i exp(-eta lbar) (1 - eta (l_i - lbar))."""
    p = np.asarray(pi)
    ell = _as_losses(losses, p.size)
    lbar = float(np.dot(p, ell))
    w = p * math.exp(-eta * lbar) * (1.0 - eta * (ell - lbar))
    return ProbVector(w / w.sum())
