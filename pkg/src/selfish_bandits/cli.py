"""Command-line experiment runner.

Subcommands: run, scaling, claims, ic-audit, bounds, plot. Settings come
from an optional JSON manifest (``--config``) and are overridden by flags.
``SELFISH_BANDIT_SEED`` overrides the manifest seed but not ``--seed``.

Exit codes: 0 success, 2 invalid parameters / regime mismatch / bad CSV,
3 hard numeric drift.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import io as sio
from .core import HardNumericDrift, HyperParams, Regime
from .environments import (
    EnvKind,
    Epsilon2TooLarge,
    LossModel,
    RegimeMismatch,
    bernoulli_sequence,
    derived_quantities,
    lower_bound_sequence,
    phase_plan,
    trivial_sequence,
)
from .ic_audit import AuditAlgo, Conditioning, ic_verdict
from .learners import LearnerKind, check_params, exp3_default_params
from .simlab.analysis import (
    claim_statistics,
    combiner_lhs,
    combiner_optimizers,
    combiner_rhs,
    lower_bound_combiner_check,
    math_helper_checks,
    scaling_fit,
    tuned_params,
    tuned_upper_bound,
    upper_bound_formula,
)
from .simlab.engine import AggregateStats, monte_carlo

COMMANDS = ("run", "scaling", "claims", "ic-audit", "bounds", "plot")
SEED_ENV = "SELFISH_BANDIT_SEED"

DEFAULTS = {
    "learner": ["wsu-ux"],
    "env": "lower-bound",
    "T": [4096],
    "eta": None,
    "gamma": None,
    "trials": 200,
    "seed": 20240601,
    "parallelism": 1,
    "out_dir": "results",
}

# per-learner policies when eta/gamma are left unset
_DEFAULT_POLICY = {
    LearnerKind.WSU_UX: ("T^-2/3", "T^-1/3"),
    LearnerKind.EXP3: ("exp3-default", "exp3-default"),
    LearnerKind.HEDGE: ("T^-1/2", "0"),
    LearnerKind.MWU: ("T^-1/2", "0"),
    LearnerKind.WSU: ("T^-1/2", "0"),
}

_POWER = re.compile(
    r"^(?:(?P<c>[0-9.eE+-]+)\s*\*\s*)?T\s*\^\s*\(?\s*(?P<num>[+-]?[0-9.]+)\s*(?:/\s*(?P<den>[0-9.]+))?\s*\)?$"
)


class UsageError(ValueError):
    """Bad configuration; mapped to exit code 2."""


def parse_horizon(text) -> int:
    if isinstance(text, int):
        return text
    s = str(text).strip()
    m = re.fullmatch(r"(\d+)\s*\^\s*(\d+)", s)
    try:
        T = int(m.group(1)) ** int(m.group(2)) if m else int(float(s))
    except ValueError:
        raise UsageError(f"bad horizon {text!r}") from None
    if T < 1:
        raise UsageError("horizons must be positive")
    return T


def resolve_policy(policy, which: str, kind: LearnerKind, k: int, horizon: int) -> float:
    """Turn a numeric value or a symbolic policy into a number for one horizon.

    Accepted forms: a float, ``[c*]T^a[/b]`` (an optional ``eta=``/``gamma=``
    prefix is ignored), ``exp3-default`` and ``upper-bound-tuned``.
    """
    if isinstance(policy, (int, float)) and not isinstance(policy, bool):
        return float(policy)
    s = str(policy).strip()
    s = re.sub(r"^(eta|gamma)\s*=\s*", "", s)
    if s == "exp3-default":
        p = exp3_default_params(k, horizon)
        return p.eta if which == "eta" else p.gamma
    if s == "upper-bound-tuned":
        p = tuned_params(k, horizon)
        return p.eta if which == "eta" else p.gamma
    m = _POWER.match(s)
    if m:
        c = float(m.group("c")) if m.group("c") else 1.0
        a = float(m.group("num")) / (float(m.group("den")) if m.group("den") else 1.0)
        return c * horizon**a
    try:
        return float(s)
    except ValueError:
        raise UsageError(f"cannot parse {which} policy {policy!r}") from None


def parse_env(text: str) -> tuple[EnvKind, tuple[float, ...] | None]:
    s = text.strip().lower()
    if s.startswith("bernoulli"):
        _, _, rest = s.partition(":")
        if not rest:
            return EnvKind.BERNOULLI, (0.1, 0.9)
        try:
            ps = tuple(float(x) for x in rest.split(","))
        except ValueError:
            raise UsageError(f"bad bernoulli parameters in {text!r}") from None
        if len(ps) < 2 or any(not 0.0 <= p <= 1.0 for p in ps):
            raise UsageError("bernoulli needs at least two means in [0,1]")
        return EnvKind.BERNOULLI, ps
    for kind in EnvKind:
        if kind.value == s:
            return kind, None
    raise UsageError(f"unknown environment {text!r}")


def build_model(env: str, horizon: int, seed: int) -> LossModel:
    kind, ps = parse_env(env)
    if kind is EnvKind.LOWER_BOUND:
        if horizon < 100:
            raise UsageError("the lower-bound sequence needs T >= 100")
        return lower_bound_sequence(horizon)
    if kind is EnvKind.TRIVIAL_ETA:
        return trivial_sequence(horizon)
    return bernoulli_sequence(horizon, ps, seed=seed)


@dataclass
class ExperimentConfig:
    command: str
    learners: list[LearnerKind]
    env: str
    horizons: list[int]
    eta: object = None
    gamma: object = None
    n_trials: int = 200
    base_seed: int = 20240601
    parallelism: int = 1
    out_dir: Path = Path("results")
    csv_path: Path | None = None
    extra: dict = field(default_factory=dict)

    def params_for(self, kind: LearnerKind, horizon: int, k: int) -> HyperParams:
        eta_p, gamma_p = _DEFAULT_POLICY[kind]
        eta = resolve_policy(self.eta if self.eta is not None else eta_p, "eta", kind, k, horizon)
        gamma = resolve_policy(self.gamma if self.gamma is not None else gamma_p, "gamma", kind, k, horizon)
        return HyperParams(eta, gamma, k, horizon)

    def manifest(self) -> dict:
        return {
            "learners": [k.value for k in self.learners],
            "env": self.env,
            "horizons": list(self.horizons),
            "eta_policy": self.eta,
            "gamma_policy": self.gamma,
            "n_trials": self.n_trials,
            "base_seed": self.base_seed,
            "parallelism": self.parallelism,
        }


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_config(args: argparse.Namespace, environ=None) -> ExperimentConfig:
    """Merge defaults, the JSON manifest, the seed env var and flags (in that order)."""
    environ = os.environ if environ is None else environ
    merged = dict(DEFAULTS)
    if args.config:
        try:
            manifest = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(manifest, dict):
            raise UsageError("config must be a JSON object")
        aliases = {"horizons": "T", "learners": "learner", "n_trials": "trials", "base_seed": "seed",
                   "environment": "env", "out-dir": "out_dir"}
        for key, val in manifest.items():
            key = aliases.get(key, key)
            if key == "command":
                continue
            if key not in merged:
                raise UsageError(f"unknown config key {key!r}")
            merged[key] = val
    if environ.get(SEED_ENV):
        try:
            merged["seed"] = int(environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val

    try:
        learners = [LearnerKind.parse(x) for x in _as_list(merged["learner"])]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    horizons = [parse_horizon(x) for x in _as_list(merged["T"])]
    trials = int(merged["trials"])
    if trials < 2:
        raise UsageError("--trials must be at least 2")
    par = int(merged["parallelism"])
    if par < 1:
        raise UsageError("--parallelism must be positive")
    parse_env(str(merged["env"]))
    return ExperimentConfig(
        command=args.command,
        learners=learners,
        env=str(merged["env"]),
        horizons=horizons,
        eta=merged["eta"],
        gamma=merged["gamma"],
        n_trials=trials,
        base_seed=int(merged["seed"]),
        parallelism=par,
        out_dir=Path(merged["out_dir"]),
        csv_path=Path(args.csv) if getattr(args, "csv", None) else None,
        extra={k: getattr(args, k) for k in ("grid", "configs") if getattr(args, k, None) is not None},
    )


def _timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _header(cfg: ExperimentConfig, command: str) -> dict:
    return {
        "schema_version": sio.SCHEMA_VERSION,
        "command": command,
        "generated_at": _timestamp(),
        "config": cfg.manifest(),
    }


def _run_all(cfg: ExperimentConfig, learners=None) -> list[AggregateStats]:
    """Every (learner, horizon) Monte Carlo run; params are validated first."""
    jobs = []
    for kind in learners or cfg.learners:
        for T in cfg.horizons:
            model = build_model(cfg.env, T, cfg.base_seed)
            params = cfg.params_for(kind, T, model.k)
            reason = check_params(kind, params)
            if reason:
                raise UsageError(
                    f"{kind.value} at T={T}: eta={params.eta!r}, gamma={params.gamma!r} "
                    f"is {params.regime.value}; {reason}"
                )
            jobs.append((kind, model, params))
    return [monte_carlo(kind, model, params, cfg.n_trials, cfg.base_seed, cfg.parallelism) for kind, model, params in jobs]


def _trajectory_rows(results: list[AggregateStats]):
    for st in results:
        marks = set(phase_plan(st.horizon).boundaries) if st.horizon >= 1000 and st.env == "lower-bound" else set()
        for r, v in st.mean_checkpoints.items():
            yield [sio.fmt(x) for x in (sio.SCHEMA_VERSION, st.learner, st.horizon, r, v, r in marks)]


def _write_runs(cfg: ExperimentConfig, results: list[AggregateStats]) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    rows = (sio.trajectory_row(tr) for st in results for tr in st.trajectories)
    sio.write_csv(cfg.out_dir / "runs.csv", sio.RUN_COLUMNS, rows)
    sio.write_csv(cfg.out_dir / "trajectory.csv", sio.TRAJECTORY_COLUMNS, _trajectory_rows(results))


def _stats_entry(st: AggregateStats) -> dict:
    d = st.to_dict()
    d["upper_bound"] = upper_bound_formula(st.params) if st.params.gamma > 0.0 else None
    return d


def cmd_run(cfg: ExperimentConfig) -> int:
    results = _run_all(cfg)
    _write_runs(cfg, results)
    out = _header(cfg, "run")
    out["runs"] = [_stats_entry(st) for st in results]
    sio.write_json(cfg.out_dir / "summary.json", out)
    for st in results:
        r = st.scalars["pseudo_regret"]
        print(f"{st.learner} T={st.horizon} eta={st.params.eta:.6g} gamma={st.params.gamma:.6g} "
              f"mean regret {r.mean:.6g} (se {r.se:.3g})")
    return 0


def scaling_verdict(kind: LearnerKind, slope: float) -> str:
    if kind is LearnerKind.WSU_UX:
        return "PASS" if 0.60 <= slope <= 0.80 else "FAIL"
    if kind is LearnerKind.EXP3:
        return "PASS" if slope <= 0.60 else "FAIL"
    return "n/a"


def cmd_scaling(cfg: ExperimentConfig) -> int:
    if len(set(cfg.horizons)) < 3:
        raise UsageError("scaling needs at least 3 distinct horizons")
    results = _run_all(cfg)
    _write_runs(cfg, results)
    out = _header(cfg, "scaling")
    out["learners"] = {}
    for kind in cfg.learners:
        mine = [st for st in results if st.learner == kind.value]
        pts = [(st.horizon, st.scalars["pseudo_regret"].mean, st.scalars["pseudo_regret"].se) for st in mine]
        fit = scaling_fit(pts)
        verdict = scaling_verdict(kind, fit.slope)
        out["learners"][kind.value] = {
            "per_T": [_stats_entry(st) for st in mine],
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "verdict": verdict,
        }
        print(f"{kind.value}: slope {fit.slope:.4f} (r^2 {fit.r_squared:.4f}) {verdict}")
    sio.write_json(cfg.out_dir / "scaling.json", out)
    return 0


def cmd_claims(cfg: ExperimentConfig) -> int:
    if parse_env(cfg.env)[0] is not EnvKind.LOWER_BOUND:
        raise UsageError("claims are defined on the lower-bound sequence")
    kind = cfg.learners[0]
    for T in cfg.horizons:
        if T < 1000:
            raise UsageError("claims need T >= 1000")
        p = cfg.params_for(kind, T, 2)
        if p.regime is not Regime.NON_TRIVIAL:
            raise RegimeMismatch(f"T={T}: eta={p.eta!r}, gamma={p.gamma!r} is {p.regime.value}, not non-trivial")
    results = _run_all(cfg, [kind])
    _write_runs(cfg, results)
    out = _header(cfg, "claims")
    out["reports"] = []
    for st in results:
        rep = claim_statistics(st).to_dict()
        try:
            dq = derived_quantities(st.params)
            rep["derived"] = {"M": dq.m_exponent, "T_prime": dq.t_prime, "eps1": dq.eps1, "eps2": dq.eps2,
                              "T_prime_le_T2": dq.t_prime_within_phase}
        except Epsilon2TooLarge as exc:
            rep["derived"] = {"error": str(exc)}
        rep["mean_pseudo_regret"] = st.scalars["pseudo_regret"].to_dict()
        rep["upper_bound"] = upper_bound_formula(st.params)
        out["reports"].append(rep)
        flags = " ".join(f"{n}={'ok' if rep[n]['passed'] else 'FAIL'}"
                         for n in ("claim1", "claim2", "claim3", "phase1_decay"))
        print(f"T={st.horizon}: {flags}")
    sio.write_json(cfg.out_dir / "claims.json", out)
    return 0


AUDIT_PLAN = (
    (AuditAlgo.WSU, Conditioning.CONDITIONAL_ON_SELECTED),
    (AuditAlgo.WSU_UX, Conditioning.CONDITIONAL_ON_SELECTED),
    (AuditAlgo.WSU_UX, Conditioning.UNCONDITIONAL),
    (AuditAlgo.HEDGE, Conditioning.CONDITIONAL_ON_SELECTED),
    (AuditAlgo.MWU, Conditioning.CONDITIONAL_ON_SELECTED),
)


def cmd_ic_audit(cfg: ExperimentConfig) -> int:
    n = cfg.extra.get("configs", 200)
    grid = cfg.extra.get("grid", 1001)
    out = _header(cfg, "ic-audit")
    out["n_configs"] = n
    out["resolution"] = grid
    out["verdicts"] = []
    for algo, cond in AUDIT_PLAN:
        v = ic_verdict(algo, n, grid, seed=cfg.base_seed, conditioning=cond)
        out["verdicts"].append(v.to_dict())
        print(f"{algo.value} [{cond.value}]: {v.label} (max |r*-b| = {v.max_deviation:.4g})")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    sio.write_json(cfg.out_dir / "ic_audit.json", out)
    return 0


def cmd_bounds(cfg: ExperimentConfig) -> int:
    out = _header(cfg, "bounds")
    rows = []
    for kind in cfg.learners:
        for T in cfg.horizons:
            k = 2 if parse_env(cfg.env)[1] is None else len(parse_env(cfg.env)[1])
            p = cfg.params_for(kind, T, k)
            tuned = tuned_params(k, T)
            eta_s, gamma_s = combiner_optimizers(1.0, 1.0, 1.0, k, T)
            rows.append({
                "learner": kind.value,
                "T": T,
                "K": k,
                "eta": p.eta,
                "gamma": p.gamma,
                "regime": p.regime.value,
                "upper_bound": upper_bound_formula(p) if p.gamma > 0.0 and p.eta > 0.0 else None,
                "tuned_closed_form": tuned_upper_bound(k, T),
                "tuned_eta": tuned.eta,
                "tuned_gamma": tuned.gamma,
                "tuned_bound": upper_bound_formula(tuned),
                "combiner": {
                    "c": [1.0, 1.0, 1.0],
                    "eta_star": eta_s,
                    "gamma_star": gamma_s,
                    "lhs_at_optimum": combiner_lhs(1.0, 1.0, 1.0, eta_s, gamma_s, k, T),
                    "rhs": combiner_rhs(1.0, 1.0, 1.0, k, T),
                    "holds_at_params": (
                        lower_bound_combiner_check(1.0, 1.0, 1.0, p) if p.eta > 0.0 and p.gamma > 0.0 else None
                    ),
                },
            })
            print(f"{kind.value} T={T}: bound {rows[-1]['upper_bound']} tuned {rows[-1]['tuned_bound']:.6g}")
    helpers = math_helper_checks()
    out["bounds"] = rows
    out["helper_checks"] = {
        "log_grid_points": helpers.log_grid_points,
        "log_violations": helpers.log_violations,
        "log_max_gap": helpers.log_max_gap,
        "second_moment_mean_term": helpers.second_moment_mean_term,
        "second_moment_mean_bound": helpers.second_moment_mean_bound,
        "second_moment_arm_terms": helpers.second_moment_arm_terms,
        "second_moment_arm_bound": helpers.second_moment_arm_bound,
        "passed": helpers.passed,
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    sio.write_json(cfg.out_dir / "bounds.json", out)
    return 0


def cmd_plot(cfg: ExperimentConfig) -> int:
    from .plotting import plot_regret, plot_trajectory

    if cfg.csv_path is None:
        raise UsageError("plot needs a run CSV path")
    try:
        rows = sio.read_run_csv(cfg.csv_path)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    written = [plot_regret(rows, cfg.out_dir / "regret_loglog.svg")]
    traj = cfg.csv_path.with_name("trajectory.csv")
    if traj.exists():
        written.append(plot_trajectory(traj, cfg.out_dir / "pi1_trajectory.svg"))
    for p in written:
        print(p)
    return 0


HANDLERS = {
    "run": cmd_run,
    "scaling": cmd_scaling,
    "claims": cmd_claims,
    "ic-audit": cmd_ic_audit,
    "bounds": cmd_bounds,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON manifest; flags override its keys")
    common.add_argument("--learner", action="append", help="wsu-ux, exp3, hedge, mwu or wsu (repeatable)")
    common.add_argument("--env", help="lower-bound, trivial-eta or bernoulli[:p1,p2,...]")
    common.add_argument("--T", dest="T", action="append", help="horizon, e.g. 65536 or 2^16 (repeatable)")
    common.add_argument("--eta", help="number, [c*]T^a/b, exp3-default or upper-bound-tuned")
    common.add_argument("--gamma", help="number, [c*]T^a/b, exp3-default or upper-bound-tuned")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--parallelism", type=int)
    common.add_argument("--out-dir", dest="out_dir")

    parser = argparse.ArgumentParser(prog="selfish-bandits", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "ic-audit":
            p.add_argument("--configs", type=int, help="random scenarios per learner (default 200)")
            p.add_argument("--grid", type=int, help="report grid resolution (default 1001)")
        if name == "plot":
            p.add_argument("csv", help="runs.csv written by run/scaling/claims")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return HANDLERS[cfg.command](cfg)
    except HardNumericDrift as exc:
        print(f"error: {exc}; reproduce with trial seed {exc.seed}", file=sys.stderr)
        return 3
    except (UsageError, RegimeMismatch, sio.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
