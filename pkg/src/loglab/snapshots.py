"""Field snapshots: raw little-endian complex64 samples in C order, plus a
sidecar ``key = value`` header with the grid, time and problem
parameters."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import Field, Grid

DTYPE = np.dtype("<c8")


def write_snapshot(path, f: Field, t: float, meta: dict | None = None) -> tuple[Path, Path]:
    path = Path(path)
    data = path.with_suffix(".bin")
    header = path.with_suffix(".txt")
    np.ascontiguousarray(f.values, dtype=DTYPE).tofile(data)
    g = f.grid
    lines = [
        "format = complex64-le",
        "order = C",
        f"dim = {g.dim}",
        f"n = {g.n}",
        f"length = {g.length!r}",
        f"t = {float(t)!r}",
    ]
    for k, v in (meta or {}).items():
        lines.append(f"{k} = {v}")
    header.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return data, header


def read_snapshot(path) -> tuple[Field, float, dict]:
    path = Path(path)
    meta = {}
    for line in path.with_suffix(".txt").read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, _, v = line.partition("=")
            meta[k.strip()] = v.strip()
    if meta.get("format") != "complex64-le":
        raise ValueError(f"unsupported snapshot format {meta.get('format')!r}")
    g = Grid(int(meta["dim"]), int(meta["n"]), float(meta["length"]))
    vals = np.fromfile(path.with_suffix(".bin"), dtype=DTYPE)
    if vals.size != g.size:
        raise ValueError(f"snapshot holds {vals.size} samples, header says {g.size}")
    return Field(g, vals.astype(complex).reshape(g.shape)), float(meta["t"]), meta
