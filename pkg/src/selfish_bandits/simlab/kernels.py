"""Compiled per-trial loops.

Each kernel mirrors the reference steps in :mod:`selfish_bandits.learners`
operation for operation (sequential sums, the same renormalization
sequence, libm exp/log), so a kernel run and a Python run of the same
trial agree bit for bit. Kernels release the GIL so trials can run on a
thread pool.
"""

from __future__ import annotations

import math

import numba
import numpy as np

KIND_WSU_UX = 0
KIND_EXP3 = 1
KIND_HEDGE = 2
KIND_MWU = 3
KIND_WSU = 4

MWU_RENORM_EVERY = 1024

# slots of the scalar output vector
S_LOSS = 0            # sum_t sum_j pi~_{t,j} l_{t,j}
S_SECOND_MOMENT = 1   # sum_t (lhat_{t,1} - sum_j pi_{t,j} lhat_{t,j})^2
S_BIAS = 2            # sum_t sum_j (pi~_{t,j} - pi_{t,j}) lhat_{t,j}
S_LN_PI_FINAL = 3
S_PI_FINAL = 4
S_PULLS1_PHASE1 = 5
S_ERROR_ROUND = 6     # 0 when no drift, else the offending round
S_MAX_DRIFT = 7       # max |sum - 1| seen before any repair
S_MIN_ENTRY = 8       # min entry seen before any clamp
S_REL_MIN = 9         # min of eta * (lhat_1 - sum_j pi_j lhat_j)
S_REL_MAX = 10
S_MULT_MIN = 11       # min over arms of 1 - eta (lhat_i - sum_j pi_j lhat_j)
S_MULT_MAX = 12
S_MONO_VIOL = 13      # rounds in the monotone window where pi_1 decreased
N_SCALARS = 14

CLAMP_FLOOR = -1e-12
SUM_TOLERANCE = 1e-9


@numba.njit(cache=True, nogil=True)
def _seqsum(a):
    s = 0.0
    for x in a:
        s += x
    return s


@numba.njit(cache=True, nogil=True)
def _repair(a, out):
    """simplex_repair into ``out``: returns (ok, drift, min_entry)."""
    lo = a[0]
    for x in a:
        if x < lo:
            lo = x
    s = _seqsum(a)
    drift = abs(s - 1.0)
    if lo < CLAMP_FLOOR or drift > SUM_TOLERANCE or not math.isfinite(s):
        return False, drift, lo
    if lo < 0.0:
        for j in range(a.size):
            if a[j] < 0.0:
                a[j] = 0.0
        s = _seqsum(a)
    for j in range(a.size):
        out[j] = a[j] / s
    return True, drift, lo


@numba.njit(cache=True, nogil=True)
def _softmax(lw, buf, out):
    m = lw[0]
    for x in lw:
        if x > m:
            m = x
    for j in range(lw.size):
        buf[j] = math.exp(lw[j] - m)
    s = _seqsum(buf)
    for j in range(lw.size):
        buf[j] = buf[j] / s
    return _repair(buf, out)


@numba.njit(cache=True, nogil=True)
def run_kernel(kind, losses, eta, gamma, u, ckpt_rounds, t1, mono_lo, mono_hi):
    """Run one trial and return (scalars, checkpoint values).

    ``losses`` is the (T, K) table, ``u`` holds one uniform per round
    (ignored by full-information learners), ``ckpt_rounds`` is a sorted
    array of 1-based rounds t at which pi_{t,1} is recorded (T+1 allowed).
    Arm 1 (index 0) is the reference arm for the moment and log statistics.
    """
    T, K = losses.shape
    out = np.zeros(N_SCALARS)
    ckpt = np.full(ckpt_rounds.size, np.nan)
    p = np.full(K, 1.0 / K)
    q = np.empty(K)
    raw = np.empty(K)
    new = np.empty(K)
    lw = np.zeros(K)
    w = np.ones(K)
    buf = np.empty(K)
    ln_p1 = math.log(1.0 / K)
    out[S_MIN_ENTRY] = np.inf
    out[S_REL_MIN] = np.inf
    out[S_REL_MAX] = -np.inf
    out[S_MULT_MIN] = np.inf
    out[S_MULT_MAX] = -np.inf
    bandit = kind == KIND_WSU_UX or kind == KIND_EXP3
    ck = 0
    for t in range(1, T + 1):
        while ck < ckpt_rounds.size and ckpt_rounds[ck] == t:
            ckpt[ck] = p[0]
            ck += 1
        ell = losses[t - 1]
        old1 = p[0]
        arm = 0
        est = 0.0
        m0 = 1.0
        s = 1.0

        if bandit:
            for j in range(K):
                raw[j] = (1.0 - gamma) * p[j] + gamma / K
            ok, drift, lo = _repair(raw, q)
            if not ok:
                out[S_ERROR_ROUND] = t
                break
        else:
            for j in range(K):
                q[j] = p[j]

        acc = 0.0
        for j in range(K):
            acc += q[j] * ell[j]
        out[S_LOSS] += acc

        if bandit:
            arm = K - 1
            c = 0.0
            for i in range(K - 1):
                c += q[i]
                if u[t - 1] < c:
                    arm = i
                    break
            est = ell[arm] / q[arm]
            if arm == 0 and t <= t1:
                out[S_PULLS1_PHASE1] += 1.0
            avg = 0.0
            for j in range(K):
                avg += p[j] * (est if j == arm else 0.0)
            ref = est if arm == 0 else 0.0
            out[S_SECOND_MOMENT] += (ref - avg) ** 2
            out[S_BIAS] += (q[arm] - p[arm]) * est
            r = eta * (ref - avg)
            out[S_REL_MIN] = min(out[S_REL_MIN], r)
            out[S_REL_MAX] = max(out[S_REL_MAX], r)
        else:
            avg = 0.0
            for j in range(K):
                avg += p[j] * ell[j]
            out[S_SECOND_MOMENT] += (ell[0] - avg) ** 2
            r = eta * (ell[0] - avg)
            out[S_REL_MIN] = min(out[S_REL_MIN], r)
            out[S_REL_MAX] = max(out[S_REL_MAX], r)

        if kind == KIND_WSU_UX or kind == KIND_WSU:
            for j in range(K):
                if kind == KIND_WSU_UX:
                    e = est if j == arm else 0.0
                else:
                    e = ell[j]
                mult = 1.0 - eta * (e - avg)
                out[S_MULT_MIN] = min(out[S_MULT_MIN], mult)
                out[S_MULT_MAX] = max(out[S_MULT_MAX], mult)
                raw[j] = p[j] * mult
            m0 = raw[0] / p[0] if p[0] > 0.0 else 1.0
            ok, drift, lo = _repair(raw, new)
            s = 0.0
            for x in raw:
                s += x
        elif kind == KIND_EXP3:
            lw[arm] -= eta * est
            ok, drift, lo = _softmax(lw, buf, new)
        elif kind == KIND_HEDGE:
            for j in range(K):
                lw[j] = lw[j] - eta * ell[j]
            ok, drift, lo = _softmax(lw, buf, new)
        else:
            for j in range(K):
                w[j] = w[j] * (1.0 - eta * ell[j])
            s = _seqsum(w)
            for j in range(K):
                buf[j] = w[j] / s
            ok, drift, lo = _repair(buf, new)
            if t % MWU_RENORM_EVERY == 0:
                for j in range(K):
                    w[j] = w[j] / s

        out[S_MAX_DRIFT] = max(out[S_MAX_DRIFT], drift)
        out[S_MIN_ENTRY] = min(out[S_MIN_ENTRY], lo)
        if not ok:
            out[S_ERROR_ROUND] = t
            break
        if kind == KIND_WSU_UX or kind == KIND_WSU:
            ln_p1 += math.log(m0) - math.log(s) if m0 > 0.0 else -np.inf
        for j in range(K):
            p[j] = new[j]
        if mono_lo <= t <= mono_hi and p[0] < old1:
            out[S_MONO_VIOL] += 1.0

    while ck < ckpt_rounds.size and ckpt_rounds[ck] == T + 1:
        ckpt[ck] = p[0]
        ck += 1
    out[S_PI_FINAL] = p[0]
    if kind == KIND_WSU_UX or kind == KIND_WSU:
        # log-domain tracking survives underflow of p[0]
        out[S_LN_PI_FINAL] = math.log(p[0]) if p[0] > 1e-300 else ln_p1
    else:
        out[S_LN_PI_FINAL] = math.log(p[0]) if p[0] > 0.0 else -np.inf
    return out, ckpt
