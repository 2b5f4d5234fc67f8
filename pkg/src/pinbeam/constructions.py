"""Constructed raster sets: stripe patterns that kill whole scale blocks,
arc carvings, and block checkerboards.

These are the counter-instances the inequality harness and the search are
exercised against.  The stripe construction is the workhorse: vertical dead
strips placed so that from every column some scale in the block has its
whole arc span inside a strip, making the block's infimum vanish at every
set cell by construction.
"""

from __future__ import annotations

import math

import numpy as np

from .kernel import Cutoff, CurveParams, support_radius, t_grid
from .prospect import ScaleLadder
from .raster import GridSpec, RasterSet, cells_of_points

__all__ = [
    "carve_block_arcs",
    "checkerboard",
    "dead_strip_set",
]


def dead_strip_set(
    n: int,
    params: CurveParams,
    ladder: ScaleLadder,
    j: int,
    pad_cells: int = 2,
    phase_cells: int = 0,
) -> RasterSet:
    """Unit-window set of full-height columns with periodic dead strips.

    Strips of width ceil(b_j (theta - eta) / h) + 2 * pad_cells repeat with
    period floor(eta * c_j / h), so every pinned point has a scale t in
    [c_j, b_j] whose arc samples all fall in dead columns (or outside the
    window).  Requires beta > 1 and a grid fine enough that the period
    exceeds the strip width.
    """
    if params.beta <= 1:
        raise ValueError("strip construction works in the beta > 1 system")
    grid = GridSpec(n)
    h = grid.h
    b, c = ladder.block(j)
    period = math.floor(params.eta * c / h)
    width = math.ceil(b * (params.theta - params.eta) / h) + 2 * pad_cells
    if width >= period:
        raise ValueError(
            f"strip width {width} cells exceeds period {period}; "
            "increase n or narrow theta - eta"
        )
    cols = np.ones(n, dtype=bool)
    for start in range(phase_cells % period, n + period, period):
        cols[max(0, start) : min(n, start + width)] = False
    bitmap = np.broadcast_to(cols, (n, n))
    return RasterSet(grid, np.ascontiguousarray(bitmap))


def carve_block_arcs(
    a: RasterSet,
    region_mask: np.ndarray,
    ladder: ScaleLadder,
    j: int,
    cutoff: Cutoff,
    min_per_octave: int = 16,
) -> RasterSet:
    """Delete every cell hit by block-j arcs pinned at cells of the region.

    The enumeration uses the same scale grid and sampling convention as the
    search, so the carved set is exactly the one on which those points fail
    block j.
    """
    grid = a.grid
    b, c = ladder.block(j)
    ts = t_grid(c, b, grid.h, support_radius(cutoff.params), min_per_octave)
    ox = np.outer(ts, cutoff.nodes).ravel()
    oy = np.outer(ts, cutoff.node_powers).ravel()
    bitmap = a.bitmap.copy()
    h = grid.h
    x0, y0 = grid.origin
    for iy, ix in np.argwhere(region_mask):
        xc = x0 + (ix + 0.5) * h
        yc = y0 + (iy + 0.5) * h
        jx, jy, inside = cells_of_points(grid, xc + ox, yc + oy)
        bitmap[jy[inside], jx[inside]] = False
    return RasterSet(grid, bitmap)


def checkerboard(n: int, block_cells: int, solid_first: bool = True) -> RasterSet:
    """Alternating solid blocks of the given cell size on the unit window."""
    if n % block_cells != 0:
        raise ValueError(f"block size {block_cells} must divide n = {n}")
    k = n // block_cells
    tile = (np.add.outer(np.arange(k), np.arange(k)) % 2) == (0 if solid_first else 1)
    bitmap = np.kron(tile, np.ones((block_cells, block_cells), dtype=bool))
    return RasterSet(GridSpec(n), bitmap)
