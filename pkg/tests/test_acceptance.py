"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed live. Heavy Monte Carlo runs are cached per module so the
upper-bound check reuses the scaling, trivial-case and claims runs.
"""

import json
import math
import time

import numpy as np
import pytest

from selfish_bandits import cli
from selfish_bandits.core import HyperParams, ProbVector, log_half_floor
from selfish_bandits.environments import lower_bound_sequence, trivial_sequence
from selfish_bandits.ic_audit import AuditAlgo, Conditioning, ic_verdict
from selfish_bandits.learners import (
    LearnerKind,
    exp3_default_params,
    linearized_hedge_update,
    recursive_expectation,
    wsu_update,
    wsu_ux_expected_next,
)
from selfish_bandits.simlab import (
    claim_statistics,
    combiner_lhs,
    combiner_optimizers,
    combiner_rhs,
    log_quadratic_violations,
    lower_bound_combiner_check,
    monte_carlo,
    scaling_fit,
    upper_bound_formula,
)

pytestmark = pytest.mark.acceptance

SEED = 20240601
SCALING_T = (2**12, 2**14, 2**16, 2**18)
CLAIMS_T = 2**17
TRIVIAL_T = 2**16


def verdict(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")


def nontrivial(T):
    return HyperParams(T ** (-2 / 3), T ** (-1 / 3), 2, T)


@pytest.fixture(scope="module")
def scaling_runs():
    out = {}
    for T in SCALING_T:
        model = lower_bound_sequence(T)
        out[("wsu-ux", T)] = monte_carlo(LearnerKind.WSU_UX, model, nontrivial(T), 200, SEED)
        out[("exp3", T)] = monte_carlo(LearnerKind.EXP3, model, exp3_default_params(2, T), 200, SEED)
    return out


@pytest.fixture(scope="module")
def trivial_runs():
    T = TRIVIAL_T
    model = trivial_sequence(T)
    a = HyperParams(0.5 * T ** (-2 / 3), T ** (-1 / 3), 2, T)
    b = HyperParams(T ** (-2 / 3), 2 * T ** (-1 / 3), 2, T)
    return {
        "5a": monte_carlo(LearnerKind.WSU_UX, model, a, 200, SEED),
        "5b": monte_carlo(LearnerKind.WSU_UX, model, b, 200, SEED),
    }


@pytest.fixture(scope="module")
def claims_run():
    T = CLAIMS_T
    st = monte_carlo(LearnerKind.WSU_UX, lower_bound_sequence(T), nontrivial(T), 500, SEED)
    return st, claim_statistics(st)


class TestCriterion1ExactIdentities:
    def test_identities(self, capsys):
        rng = np.random.default_rng(1)
        t0 = time.perf_counter()

        rec_err = 0.0
        for _ in range(1000):
            p1 = rng.uniform(0.01, 0.99)
            gamma = rng.uniform(0.01, 0.49)
            eta = rng.uniform(0.0, 1.0) * gamma / 4
            ell = rng.random(2)
            exact = wsu_ux_expected_next(ProbVector([p1, 1 - p1]), ell, eta, gamma)[0]
            closed = recursive_expectation(p1, ell[0], ell[1], eta)
            rec_err = max(rec_err, abs(exact - closed) / abs(closed))

        lin_err = 0.0
        for _ in range(1000):
            k = int(rng.integers(2, 7))
            pi = ProbVector(rng.dirichlet(np.ones(k)))
            ell, eta = rng.random(k), rng.uniform(0.0, 0.49)
            a = np.asarray(linearized_hedge_update(pi, ell, eta))
            b = np.asarray(wsu_update(pi, ell, eta))
            lin_err = max(lin_err, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))))

        log_viol, _ = log_quadratic_violations(100_000)

        comb_viol = 0
        for _ in range(1000):
            c = rng.uniform(0.01, 10.0, 3)
            T = int(rng.integers(10, 10**7))
            k = int(rng.integers(2, 10))
            gamma = rng.uniform(1e-4, 0.49)
            eta = rng.uniform(1e-6, 1.0) * gamma / (2 * k)
            comb_viol += not lower_bound_combiner_check(*c, HyperParams(eta, gamma, k, T))
        tight = 0.0
        for _ in range(100):
            c = rng.uniform(0.01, 10.0, 3)
            k, T = int(rng.integers(2, 10)), int(rng.integers(10, 10**7))
            eta, gamma = combiner_optimizers(*c, k, T)
            lhs, rhs = combiner_lhs(*c, eta, gamma, k, T), combiner_rhs(*c, k, T)
            tight = max(tight, abs(lhs - rhs) / rhs)
        elapsed = time.perf_counter() - t0

        ok = rec_err <= 1e-12 and lin_err <= 1e-12 and log_viol == 0 and comb_viol == 0 and tight <= 1e-9
        ok = ok and elapsed < 1.0
        verdict(
            capsys, "C1 exact identities", ok,
            f"recursion rel err {rec_err:.2e}, linearized rel err {lin_err:.2e}, log violations {log_viol}, "
            f"combiner violations {comb_viol}, optimum gap {tight:.2e}, {elapsed:.2f}s",
        )
        assert ok


class TestCriterion2StructuralInvariants:
    def test_invariants(self, capsys):
        T = 10**4
        t0 = time.perf_counter()
        st = monte_carlo(LearnerKind.WSU_UX, lower_bound_sequence(T), nontrivial(T), 100, SEED)
        elapsed = time.perf_counter() - t0
        diags = [tr.diagnostics for tr in st.trajectories]
        drift = max(d["max_sum_drift"] for d in diags)
        lo = min(d["min_entry_pre_clamp"] for d in diags)
        rel = (min(d["rel_loss_min"] for d in diags), max(d["rel_loss_max"] for d in diags))
        mult = (min(d["multiplier_min"] for d in diags), max(d["multiplier_max"] for d in diags))
        mono = sum(d["monotone_violations"] for d in diags)
        floor = log_half_floor(T)
        floor_ok = all(tr.ln_pi_final >= floor for tr in st.trajectories)
        # a multiplier 1 - eta*x in [1/2, 2] is the relative loss x*eta in [-1, 1/2] for every arm
        ok = (
            drift <= 1e-9 and lo >= -1e-12
            and rel[0] >= -1.0 and rel[1] <= 0.5
            and mult[0] >= 0.5 and mult[1] <= 2.0
            and mono == 0 and floor_ok and elapsed < 60
        )
        verdict(
            capsys, "C2 structural invariants", ok,
            f"max drift {drift:.1e}, min entry {lo:.2e}, relative loss [{rel[0]:.3g}, {rel[1]:.3g}], "
            f"multipliers [{mult[0]:.4f}, {mult[1]:.4f}], phase-2 decreases {int(mono)}, "
            f"log floor held {floor_ok}, {elapsed:.1f}s",
        )
        assert ok


class TestCriterion3Truthfulness:
    def test_verdicts(self, capsys):
        t0 = time.perf_counter()
        wsu = ic_verdict(AuditAlgo.WSU, 200, 1001)
        ux = ic_verdict(AuditAlgo.WSU_UX, 200, 1001, conditioning=Conditioning.CONDITIONAL_ON_SELECTED)
        ux_u = ic_verdict(AuditAlgo.WSU_UX, 200, 1001, conditioning=Conditioning.UNCONDITIONAL)
        hedge = ic_verdict(AuditAlgo.HEDGE, 200, 1001)
        mwu = ic_verdict(AuditAlgo.MWU, 200, 1001)
        elapsed = time.perf_counter() - t0
        ok = (
            wsu.max_deviation <= 1e-3 and ux.max_deviation <= 1e-3
            and hedge.max_deviation > 0.05 and mwu.max_deviation > 0.05
            and elapsed < 30
        )
        verdict(
            capsys, "C3 truthfulness verdicts", ok,
            f"WSU {wsu.label} ({wsu.max_deviation:.1e}), WSU-UX {ux.label} ({ux.max_deviation:.1e}), "
            f"Hedge {hedge.label} ({hedge.max_deviation:.3f}), MWU {mwu.label} ({mwu.max_deviation:.3f}), "
            f"WSU-UX unconditional {ux_u.label} ({ux_u.max_deviation:.3f}, reported only), {elapsed:.1f}s",
        )
        assert ok


class TestCriterion4Scaling:
    def test_slopes(self, capsys, scaling_runs):
        fits = {}
        for name in ("wsu-ux", "exp3"):
            pts = [
                (T, scaling_runs[(name, T)].scalars["pseudo_regret"].mean, scaling_runs[(name, T)].scalars["pseudo_regret"].se)
                for T in SCALING_T
            ]
            fits[name] = scaling_fit(pts)
        ok = 0.60 <= fits["wsu-ux"].slope <= 0.80 and fits["exp3"].slope <= 0.60
        verdict(
            capsys, "C4 scaling", ok,
            f"WSU-UX slope {fits['wsu-ux'].slope:.4f} (r^2 {fits['wsu-ux'].r_squared:.4f}), "
            f"EXP3 slope {fits['exp3'].slope:.4f} (r^2 {fits['exp3'].r_squared:.4f})",
        )
        assert ok


class TestCriterion5TrivialCases:
    def test_small_eta(self, capsys, trivial_runs):
        T = TRIVIAL_T
        r = trivial_runs["5a"].scalars["pseudo_regret"]
        thr = T ** (2 / 3) / 200
        ok = r.mean >= thr - 3 * r.se
        verdict(capsys, "C5a small eta", ok, f"mean regret {r.mean:.1f} (se {r.se:.2f}) vs {thr:.2f}")
        assert ok

    def test_large_gamma(self, capsys, trivial_runs):
        st = trivial_runs["5b"]
        r = st.scalars["pseudo_regret"]
        thr = st.params.gamma * TRIVIAL_T / 2
        ok = r.mean >= thr - 3 * r.se
        verdict(capsys, "C5b large gamma", ok, f"mean regret {r.mean:.1f} (se {r.se:.2f}) vs {thr:.1f}")
        assert ok


class TestCriterion6Claims:
    def test_claim1(self, capsys, claims_run):
        c = claims_run[1].claim1
        verdict(capsys, "C6 claim 1", c.passed,
                f"mean ln pi + ln 2 = {c.statistic:.4f} vs gate {c.gate} (asymptotic {c.asymptotic_target:.4f})")
        assert c.passed

    def test_claim2(self, capsys, claims_run):
        c = claims_run[1].claim2
        verdict(capsys, "C6 claim 2", c.passed,
                f"mean second moment {c.statistic:.1f} (se {c.se:.1f}) vs threshold {c.gate:.1f}")
        assert c.passed

    def test_claim3(self, capsys, claims_run):
        c = claims_run[1].claim3
        verdict(capsys, "C6 claim 3", c.passed,
                f"mean bias {c.statistic:.1f} vs gate {c.gate:.1f} (asymptotic {c.asymptotic_target:.1f})")
        assert c.passed

    def test_events(self, capsys, claims_run):
        ev = claims_run[1].events
        e2, rec = ev["event_e2"]["frequency"], ev["event_recovered"]["frequency"]
        ok = e2 >= 0.99 and rec >= 0.99
        verdict(capsys, "C6 events", ok,
                f"freq(E2) {e2:.3f}, freq(pi_final >= 3/4) {rec:.3f}, freq(E1) {ev['event_e1']['frequency']:.3f}")
        assert ok

    def test_phase1_decay(self, capsys, claims_run):
        c = claims_run[1].phase1_decay
        verdict(capsys, "C6 phase-1 decay", c.passed,
                f"mean pi_T1 {c.statistic:.4g} (se {c.se:.2g}) vs 1/(KT) = {c.gate:.3g}")
        assert c.passed


class TestCriterion7UpperBound:
    def test_consistency(self, capsys, scaling_runs, trivial_runs, claims_run):
        configs = [st for (name, _), st in scaling_runs.items() if name == "wsu-ux"]
        configs += list(trivial_runs.values()) + [claims_run[0]]
        worst, lines = -math.inf, []
        for st in configs:
            r = st.scalars["pseudo_regret"]
            bound = upper_bound_formula(st.params)
            worst = max(worst, (r.mean - 3 * r.se) / bound)
            lines.append(f"T={st.horizon} {r.mean:.0f}/{bound:.0f}")
        ok = worst <= 1.0
        verdict(capsys, "C7 upper bound", ok, f"max (mean - 3SE)/bound {worst:.3f}; " + ", ".join(lines))
        assert ok


class TestCriterion8Determinism:
    def test_byte_identical(self, capsys, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({
            "learner": ["wsu-ux", "exp3"], "env": "lower-bound", "T": [4096, 16384],
            "trials": 50, "seed": 7,
        }))
        blobs = []
        for name, par in (("p1a", 1), ("p1b", 1), ("p8a", 8), ("p8b", 8)):
            out = tmp_path / name
            code = cli.main(["run", "--config", str(manifest), "--parallelism", str(par), "--out-dir", str(out)])
            assert code == 0
            blobs.append((out / "runs.csv").read_bytes())
        ok = all(b == blobs[0] for b in blobs)
        verdict(capsys, "C8 determinism", ok, f"4 runs (parallelism 1,1,8,8), {len(blobs[0])} bytes each")
        assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
