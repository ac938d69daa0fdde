"""Serialisation of fields, traces and contours (CSV, little-endian binary, JSON)."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import MappedGrid
from .operators import ScalarField

_HEADER = np.dtype("<u4")
_PAYLOAD = np.dtype("<f8")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_field_csv(field: ScalarField, path) -> None:
    g = field.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "x", "y", "value"])
        for i in range(g.Nx):
            for j in range(g.Ns):
                w.writerow([i, j, _fmt(g.x[i]), _fmt(g.Y[i, j]), _fmt(field.values[i, j])])


def write_field_bin(field: ScalarField, path) -> None:
    """Header (Nx, Ns) as little-endian uint32, then row-major little-endian doubles."""
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(np.array([g.Nx, g.Ns], dtype=_HEADER).tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype=_PAYLOAD).tobytes())


def read_field_bin(path, grid: MappedGrid | None = None):
    """Values array, or a ScalarField when a matching grid is given."""
    raw = Path(path).read_bytes()
    nx, ns = np.frombuffer(raw[:8], dtype=_HEADER)
    vals = np.frombuffer(raw[8:], dtype=_PAYLOAD)
    if vals.size != nx * ns:
        raise ValueError(f"payload has {vals.size} values, header says {nx}x{ns}")
    vals = vals.reshape(int(nx), int(ns)).copy()
    return ScalarField(vals, grid) if grid is not None else vals


def write_trace_csv(x, values, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for a, b in zip(x, values):
            w.writerow([_fmt(a), _fmt(b)])


def write_contours_csv(contours, path) -> None:
    """One row per vertex: contour id, vertex index, kind, level, x, y."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["contour", "vertex", "kind", "level", "x", "y"])
        for c_id, c in enumerate(contours):
            for k, (x, y) in enumerate(c.points):
                w.writerow([c_id, k, c.kind, _fmt(c.level), _fmt(x), _fmt(y)])


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))
