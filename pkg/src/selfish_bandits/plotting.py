"""Static SVG figures from run CSVs.

Uses the non-interactive matplotlib ``Figure`` API with a fixed hash salt
and no date metadata, so the same CSV always yields the same bytes. Each
learner's line carries the SVG id ``regret-<learner>`` or ``pi1-<learner>-T<T>``.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .simlab.analysis import scaling_fit

matplotlib.rcParams["svg.hashsalt"] = "selfish-bandits"
matplotlib.rcParams["svg.fonttype"] = "path"

_SVG_META = {"Date": None}


def regret_points(rows: list[dict[str, str]]) -> dict[str, list[tuple[int, float, float]]]:
    """(T, mean, standard error) per learner, sorted by T."""
    groups: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        groups[r["learner"]][int(r["T"])].append(float(r["pseudo_regret"]))
    out = {}
    for learner, by_t in groups.items():
        pts = []
        for T in sorted(by_t):
            v = by_t[T]
            mean = math.fsum(v) / len(v)
            sd = math.sqrt(math.fsum((x - mean) ** 2 for x in v) / (len(v) - 1)) if len(v) > 1 else 0.0
            pts.append((T, mean, sd / math.sqrt(len(v))))
        out[learner] = pts
    return out


def plot_regret(rows: list[dict[str, str]], path: Path) -> Path:
    """Log-log regret against T, one line per learner plus its OLS fit."""
    pts = regret_points(rows)
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot()
    notes = []
    for learner in sorted(pts):
        p = [x for x in pts[learner] if x[1] > 0.0]
        if not p:
            continue
        Ts = [x[0] for x in p]
        (line,) = ax.plot(Ts, [x[1] for x in p], marker="o", label=learner)
        line.set_gid(f"regret-{learner}")
        if len(p) >= 3:
            fit = scaling_fit(p)
            fitted = [math.exp(fit.intercept) * T**fit.slope for T in Ts]
            (fl,) = ax.plot(Ts, fitted, linestyle="--", color=line.get_color())
            fl.set_gid(f"fit-{learner}")
            notes.append(f"{learner} {fit.slope:.3f}")
        else:
            notes.append(f"{learner} n/a")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("horizon T (log scale)")
    ax.set_ylabel("mean pseudo-regret (log scale)\nfitted exponent of T: " + ", ".join(notes))
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    return Path(path)


def plot_trajectory(traj_csv: Path, path: Path) -> Path:
    """Mean pi_{t,1} against t with dotted markers at the phase boundaries."""
    series: dict[tuple[str, int], list[tuple[int, float]]] = defaultdict(list)
    marks: dict[tuple[str, int], list[int]] = defaultdict(list)
    with open(traj_csv, newline="") as fh:
        for r in csv.DictReader(fh):
            key = (r["learner"], int(r["T"]))
            series[key].append((int(r["round"]), float(r["mean_pi1"])))
            if r["phase_boundary"] == "1":
                marks[key].append(int(r["round"]))
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot()
    for key in sorted(series):
        learner, T = key
        s = sorted(series[key])
        (line,) = ax.plot([x[0] for x in s], [x[1] for x in s], label=f"{learner} T={T}")
        line.set_gid(f"pi1-{learner}-T{T}")
        for b in marks[key]:
            ax.axvline(b, color=line.get_color(), linestyle=":", linewidth=0.8)
    ax.set_xlabel("round t")
    ax.set_ylabel("mean probability of arm 1")
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    return Path(path)
