"""Planar sets and scalar fields on dyadic grids.

A raster lives on a square window split into N x N cells, N a power of two
so that coarser dyadic squares always align with cell boundaries.  Sets are
one bit per cell, fields one float per cell.  Arrays are indexed
``[iy, ix]`` with row 0 at the bottom of the window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "RasterSet",
    "ScalarField",
    "RasterParseError",
    "axis_swap",
    "cells_of_points",
    "complement_in_window",
    "generate_random",
    "indicator",
    "integral",
    "load_raster",
    "measure",
    "sample_values",
    "save_raster",
]


class RasterParseError(ValueError):
    """Malformed raster file; carries the byte offset of the defect."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Square window of side `side` at `origin`, split into n x n cells."""

    n: int
    origin: tuple[float, float] = (0.0, 0.0)
    side: float = 1.0

    def __post_init__(self):
        if not _is_pow2(self.n):
            raise ValueError(f"resolution must be a power of two, got {self.n}")
        if not (math.isfinite(self.side) and self.side > 0):
            raise ValueError(f"window side must be positive, got {self.side}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "side", float(self.side))

    @property
    def h(self) -> float:
        """Cell size."""
        return self.side / self.n

    def compatible(self, other: "GridSpec") -> bool:
        return self == other

    def cell_centers_1d(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.n) + 0.5) * self.h

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        h = self.h
        return (self.origin[0] + (ix + 0.5) * h, self.origin[1] + (iy + 0.5) * h)


def _check_grid(grid: GridSpec, arr: np.ndarray, dtype) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.shape != (grid.n, grid.n):
        raise ValueError(f"array shape {arr.shape} does not match grid n={grid.n}")
    if arr.dtype != dtype or not arr.flags.c_contiguous or arr.flags.writeable:
        arr = np.array(arr, dtype=dtype, order="C")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RasterSet:
    """Measurable subset of the window: cell (ix, iy) set iff bitmap[iy, ix]."""

    grid: GridSpec
    bitmap: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bitmap", _check_grid(self.grid, self.bitmap, bool))

    @property
    def cell_count(self) -> int:
        return int(self.bitmap.sum())


@dataclass(frozen=True)
class ScalarField:
    """Real-valued grid function on the window."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = _check_grid(self.grid, self.values, np.float64)
        if not np.isfinite(vals).all():
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", vals)


def measure(a: RasterSet) -> float:
    """Lebesgue measure of the set: cell area times set-cell count, exact."""
    h = a.grid.h
    return a.cell_count * (h * h)


def indicator(a: RasterSet) -> ScalarField:
    return ScalarField(a.grid, a.bitmap.astype(np.float64))


def complement_in_window(a: RasterSet) -> ScalarField:
    """The field g with g + indicator(a) == 1 cell-wise on the window."""
    return ScalarField(a.grid, 1.0 - a.bitmap.astype(np.float64))


def integral(field: ScalarField) -> float:
    h = field.grid.h
    return float(field.values.sum()) * (h * h)


def cells_of_points(grid: GridSpec, xs: np.ndarray, ys: np.ndarray):
    """Canonical cell lookup for arbitrary points.

    A point belongs to the half-open cell containing it; points on the
    window's far edges clamp to the last cell.  Returns integer index
    arrays ``(ix, iy)`` plus a boolean mask of points inside the closed
    window.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    x0, y0 = grid.origin
    s = grid.side
    h = grid.h
    inside = (xs >= x0) & (xs <= x0 + s) & (ys >= y0) & (ys <= y0 + s)
    ix = np.clip(np.floor((xs - x0) / h), 0, grid.n - 1).astype(np.int64)
    iy = np.clip(np.floor((ys - y0) / h), 0, grid.n - 1).astype(np.int64)
    return ix, iy, inside


def sample_values(obj, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate a set indicator or field at points; outside the window reads 0."""
    if isinstance(obj, RasterSet):
        grid, data = obj.grid, obj.bitmap
    else:
        grid, data = obj.grid, obj.values
    ix, iy, inside = cells_of_points(grid, xs, ys)
    out = np.where(inside, data[iy, ix].astype(np.float64), 0.0)
    return out


def axis_swap(a: RasterSet) -> RasterSet:
    """Reflect the set across the diagonal: (x, y) in A iff (y, x) in swap(A)."""
    x0, y0 = a.grid.origin
    grid = GridSpec(a.grid.n, (y0, x0), a.grid.side)
    return RasterSet(grid, np.ascontiguousarray(a.bitmap.T))


def generate_random(grid: GridSpec, delta: float, seed: int) -> RasterSet:
    """Random set with exactly ceil(delta * n^2) cells, deterministic in seed."""
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    n2 = grid.n * grid.n
    k = math.ceil(delta * n2)
    rng = np.random.default_rng(seed)
    idx = rng.choice(n2, size=k, replace=False)
    bitmap = np.zeros(n2, dtype=bool)
    bitmap[idx] = True
    return RasterSet(grid, bitmap.reshape(grid.n, grid.n))


# ---------------------------------------------------------------------------
# Plain-bitmap file format: first line "PB <N>", then N rows of N chars
# '0'/'1', row 0 at the bottom of the window.  Optional sidecar
# "<name>.meta.json" with keys window_origin: [x, y], window_side: S.
# ---------------------------------------------------------------------------


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def save_raster(a: RasterSet, path, write_sidecar: bool | None = None) -> None:
    path = Path(path)
    lines = [f"PB {a.grid.n}"]
    for iy in range(a.grid.n):
        lines.append("".join("1" if v else "0" for v in a.bitmap[iy]))
    path.write_text("\n".join(lines) + "\n")
    default_window = a.grid.origin == (0.0, 0.0) and a.grid.side == 1.0
    if write_sidecar or (write_sidecar is None and not default_window):
        meta = {"window_origin": list(a.grid.origin), "window_side": a.grid.side}
        _sidecar_path(path).write_text(json.dumps(meta))


def load_raster(path) -> RasterSet:
    path = Path(path)
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise RasterParseError("missing header line", 0)
    header = raw[:nl]
    parts = header.split()
    if len(parts) != 2 or parts[0] != b"PB":
        raise RasterParseError(f"bad header {header!r}, expected 'PB <N>'", 0)
    try:
        n = int(parts[1])
    except ValueError:
        raise RasterParseError(f"bad resolution field {parts[1]!r}", len(parts[0]) + 1) from None
    if not _is_pow2(n):
        raise ValueError(f"resolution must be a power of two, got {n}")

    bitmap = np.zeros((n, n), dtype=bool)
    offset = nl + 1
    for iy in range(n):
        end = raw.find(b"\n", offset)
        row = raw[offset:end] if end >= 0 else raw[offset:]
        if len(row) != n:
            raise RasterParseError(f"row {iy} has {len(row)} characters, expected {n}", offset)
        for ix, ch in enumerate(row):
            if ch == 0x31:
                bitmap[iy, ix] = True
            elif ch != 0x30:
                raise RasterParseError(f"invalid character {chr(ch)!r} in row {iy}", offset + ix)
        offset = (end + 1) if end >= 0 else len(raw)

    grid = GridSpec(n)
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        grid = GridSpec(n, tuple(meta["window_origin"]), meta["window_side"])
    return RasterSet(grid, bitmap)
