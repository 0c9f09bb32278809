"""Field snapshot I/O.

A snapshot is a pair of files sharing a base path: ``<base>.f64`` holds the
raw little-endian float64 samples in row-major axis order, and
``<base>.json`` is a sidecar with the grid and labeling metadata
{dim, counts, lengths, bc, time, label}.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .grid import Grid, ScalarField


def write_snapshot(field: ScalarField, base: str | Path, time: float = 0.0,
                   label: str = "") -> tuple[Path, Path]:
    base = Path(base)
    raw = base.with_suffix(".f64")
    meta = base.with_suffix(".json")
    raw.write_bytes(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    sidecar = {
        "dim": field.grid.dim,
        "counts": list(field.grid.counts),
        "lengths": list(field.grid.lengths),
        "bc": field.grid.bc,
        "time": float(time),
        "label": label,
    }
    meta.write_text(json.dumps(sidecar, indent=1, sort_keys=True) + "\n")
    return raw, meta


def read_snapshot(base: str | Path) -> tuple[ScalarField, dict]:
    base = Path(base)
    meta = json.loads(base.with_suffix(".json").read_text())
    counts = tuple(int(n) for n in meta["counts"])
    grid = Grid(tuple(float(l) for l in meta["lengths"]), counts, meta["bc"])
    data = np.frombuffer(base.with_suffix(".f64").read_bytes(), dtype="<f8")
    if data.size != int(np.prod(counts)):
        raise ShapeError(f"snapshot holds {data.size} samples, grid needs {np.prod(counts)}")
    return ScalarField(grid, data.reshape(counts).astype(np.float64)), meta
