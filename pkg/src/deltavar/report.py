"""Deterministic report serialization and trajectory CSV files."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .calculus import derivative_stack
from .errors import DeltaVarError
from .timescale import LOOKUP_TOL, TimeScale
from .variational import Trajectory


def fmt_float(x: float) -> str:
    """17 significant digits: enough for an exact round trip."""
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and every float at 17 significant digits.

    Non-finite floats become ``null``.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def trajectory_table(y: Trajectory, r: int) -> dict:
    """Rows ``t, y, y^Delta, ..., y^{Delta^r}``; undefined entries are null."""
    stack = derivative_stack(y.y, r)
    columns = ["t", "y"] + [f"y^Delta^{i}" for i in range(1, r + 1)]
    rows = []
    for k, t in enumerate(y.ts.points):
        row = [float(t)]
        for g in stack:
            row.append(float(g.values[k]) if k < len(g) else None)
        rows.append(row)
    return {"columns": columns, "rows": rows}


class TrajectoryFileError(DeltaVarError, ValueError):
    pass


def write_trajectory_csv(y: Trajectory, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "y"])
    for t, v in zip(y.ts.points, y.values):
        writer.writerow([fmt_float(t), fmt_float(v)])
    Path(path).write_text(buf.getvalue())


def read_trajectory_csv(path, ts: TimeScale) -> Trajectory:
    """Read a ``t,y`` CSV whose t column must list the points of ``ts`` in order."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TrajectoryFileError(f"cannot read {path}: {exc.strerror}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t", "y"]:
        raise TrajectoryFileError("header must be exactly 't,y'")
    body = [r for r in rows[1:] if r]
    if len(body) != len(ts):
        raise TrajectoryFileError(f"expected {len(ts)} rows, got {len(body)}")
    values = []
    for lineno, (row, expected) in enumerate(zip(body, ts.points), start=2):
        if len(row) != 2:
            raise TrajectoryFileError(f"line {lineno}: expected 2 columns")
        try:
            t, v = float(row[0]), float(row[1])
        except ValueError:
            raise TrajectoryFileError(f"line {lineno}: not a number") from None
        if not (math.isfinite(t) and math.isfinite(v)):
            raise TrajectoryFileError(f"line {lineno}: non-finite value")
        if abs(t - expected) > LOOKUP_TOL:
            raise TrajectoryFileError(f"line {lineno}: t={row[0]} is not the time-scale point {expected!r}")
        values.append(v)
    return Trajectory.from_values(ts, values)
