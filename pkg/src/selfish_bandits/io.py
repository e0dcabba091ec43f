"""Machine-readable outputs: the per-trial CSV schema and JSON writing.

Floats are written with 17 significant digits so every double survives a
round trip exactly.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable

from .simlab.engine import Trajectory

SCHEMA_VERSION = "1"

RUN_COLUMNS = (
    "schema_version",
    "trial",
    "seed",
    "T",
    "eta",
    "gamma",
    "learner",
    "env",
    "pseudo_regret",
    "ln_pi_final",
    "pi_T1",
    "pi_T1T2",
    "e1",
    "e2",
    "recovered",
    "second_moment_sum",
    "bias_sum",
    "arm1_pulls_phase1",
)

TRAJECTORY_COLUMNS = ("schema_version", "learner", "T", "round", "mean_pi1", "phase_boundary")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def trajectory_row(tr: Trajectory) -> list[str]:
    return [
        fmt(v)
        for v in (
            SCHEMA_VERSION,
            tr.seed.trial_index,
            tr.seed.stream,
            tr.horizon,
            tr.eta,
            tr.gamma,
            tr.learner,
            tr.env,
            tr.pseudo_regret,
            tr.ln_pi_final,
            tr.pi_at_T1_plus_1,
            tr.pi_at_T1T2_plus_1,
            tr.event_e1,
            tr.event_e2,
            tr.event_recovered,
            tr.second_moment_sum,
            tr.bias_sum,
            tr.arm1_pulls_phase1,
        )
    ]


def write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable[str]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    Path(path).write_text(buf.getvalue())


class SchemaError(ValueError):
    pass


def read_run_csv(path: Path) -> list[dict[str, str]]:
    """Rows of a run CSV; raises SchemaError on a foreign header or no data."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        if tuple(header) != RUN_COLUMNS:
            raise SchemaError(f"{path}: header does not match run schema v{SCHEMA_VERSION}")
        rows = [dict(zip(header, r)) for r in reader if r]
    if not rows:
        raise SchemaError(f"{path} has a header but no rows")
    for r in rows:
        if r["schema_version"] != SCHEMA_VERSION:
            raise SchemaError(f"{path}: unsupported schema version {r['schema_version']!r}")
    return rows


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, ".17g")
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):
        return _encode(obj.item(), indent, level)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with insertion-ordered keys and 17-digit floats; NaN/inf become null."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps(obj))
