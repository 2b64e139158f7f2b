"""Plain-text output formats.

Floats are written with ``repr`` so files round-trip exactly and identical
inputs give byte-identical files.  CSV files that carry metadata start with
one ``# {json}`` line before the header row.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .billiard import TrajectoryRecord

__all__ = [
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_trajectory_jsonl",
    "write_chain_csv",
    "write_json",
    "write_histogram_csv",
    "write_columns",
    "read_columns",
]


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def write_trajectory_csv(path, traj: TrajectoryRecord) -> Path:
    """``step,s,theta,branch`` with steps numbered from 1; the start is in the metadata."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("# " + _dumps(traj.metadata()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "s", "theta", "branch"])
        for k, (s, t, b) in enumerate(traj.steps, start=1):
            w.writerow([k, repr(s), repr(t), b])
    return path


def read_trajectory_csv(path) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    """Metadata and the ``s``, ``theta`` and ``branch`` columns."""
    with Path(path).open(encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing metadata line")
        meta = json.loads(first[2:])
        rows = list(csv.DictReader(fh))
    s = np.array([float(r["s"]) for r in rows])
    theta = np.array([float(r["theta"]) for r in rows])
    branch = np.array([int(r["branch"]) for r in rows], dtype=np.int8)
    return meta, s, theta, branch


def write_trajectory_jsonl(path, traj: TrajectoryRecord) -> Path:
    """First line ``{"meta": ...}``, then one ``{"step", "s", "theta", "branch"}`` object per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_dumps({"meta": traj.metadata()}) + "\n")
        for k, (s, t, b) in enumerate(traj.steps, start=1):
            fh.write(_dumps({"step": k, "s": s, "theta": t, "branch": b}) + "\n")
    return path


def write_chain_csv(path, P) -> Path:
    """``from_index,to_index,probability`` for every positive entry, row-major."""
    coo = P.tocoo()
    order = np.lexsort((coo.col, coo.row))
    rows = [[int(coo.row[k]), int(coo.col[k]), repr(float(coo.data[k]))] for k in order]
    return write_columns(path, ["from_index", "to_index", "probability"], rows)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n", encoding="utf-8")
    return path


def write_histogram_csv(path, masses) -> Path:
    """``bin_left,bin_right,mass`` on equal cells of ``(0, pi)``."""
    masses = np.asarray(masses, dtype=float)
    edges = np.linspace(0.0, math.pi, len(masses) + 1)
    rows = [[repr(float(a)), repr(float(b)), repr(float(m))] for a, b, m in zip(edges[:-1], edges[1:], masses)]
    return write_columns(path, ["bin_left", "bin_right", "mass"], rows)


def write_columns(path, header, rows) -> Path:
    """Generic CSV writer; floats are written with ``repr``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_columns(path) -> dict[str, np.ndarray]:
    with Path(path).open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[j]) for r in body]) for j, name in enumerate(header)}
