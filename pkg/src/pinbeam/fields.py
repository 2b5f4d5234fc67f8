"""Field-wide extrema of curve averages over a scale grid.

Evaluating the averaging operator at every cell center reduces to summing
integer-shifted copies of the input: a sample offset (t*u, t*u^beta) moves
every cell center by the same whole number of cells.  For each scale the
node shifts are grouped (summing weights of nodes that share a cell shift),
then a compiled loop accumulates the shifted copies and tracks the running
extremum per cell.

Results are deterministic: shifts are processed in sorted order and each
output cell is owned by a single sequential pass.
"""

from __future__ import annotations

import os

import numpy as np

from .kernel import Cutoff, support_radius, t_grid
from .raster import GridSpec

__all__ = ["extremal_conv_field", "shift_table"]

MODE_MAX = 0
MODE_ABSMAX = 1
MODE_MIN = 2

_MODES = {"max": MODE_MAX, "absmax": MODE_ABSMAX, "min": MODE_MIN}

_USE_NUMBA = os.environ.get("PINBEAM_DISABLE_NUMBA", "") != "1"
if _USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        _USE_NUMBA = False


def shift_table(cutoff: Cutoff, grid: GridSpec, ts: np.ndarray):
    """Grouped integer cell shifts for each scale in ts.

    Returns flat arrays (dx, dy, w) and a pointer array tptr such that the
    groups of scale k occupy slice tptr[k]:tptr[k+1].  Weights of nodes
    falling in the same cell are summed.
    """
    h = grid.h
    dxs, dys, ws, tptr = [], [], [], [0]
    u = cutoff.nodes
    up = cutoff.node_powers
    w = cutoff.weights
    for t in ts:
        sx = np.floor(0.5 + (t / h) * u).astype(np.int64)
        sy = np.floor(0.5 + (t / h) * up).astype(np.int64)
        key = np.stack([sx, sy], axis=1)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        gw = np.bincount(inv, weights=w, minlength=uniq.shape[0])
        dxs.append(uniq[:, 0])
        dys.append(uniq[:, 1])
        ws.append(gw)
        tptr.append(tptr[-1] + uniq.shape[0])
    return (
        np.concatenate(dxs),
        np.concatenate(dys),
        np.concatenate(ws),
        np.asarray(tptr, dtype=np.int64),
    )


def _extremal_numpy(q, dx, dy, w, tptr, base, mode, out):
    n = q.shape[0]
    acc = np.empty_like(q)
    for k in range(tptr.shape[0] - 1):
        acc[:] = 0.0
        for g in range(tptr[k], tptr[k + 1]):
            sx, sy, wg = int(dx[g]), int(dy[g]), w[g]
            if sy >= n or sx >= n or sy < -n or sx < -n:
                continue
            r0, r1 = max(0, -sy), min(n, n - sy)
            c0, c1 = max(0, -sx), min(n, n - sx)
            if r0 < r1 and c0 < c1:
                acc[r0:r1, c0:c1] += wg * q[r0 + sy : r1 + sy, c0 + sx : c1 + sx]
        val = acc - base
        if mode == MODE_ABSMAX:
            np.abs(val, out=val)
        if k == 0:
            out[:] = val
        elif mode == MODE_MIN:
            np.minimum(out, val, out=out)
        else:
            np.maximum(out, val, out=out)


if _USE_NUMBA:

    @njit(cache=True)
    def _extremal_numba(q, dx, dy, w, tptr, base, mode, out):  # pragma: no cover
        n = q.shape[0]
        acc = np.empty(n, dtype=np.float64)
        for r in range(n):
            for k in range(tptr.shape[0] - 1):
                for c in range(n):
                    acc[c] = 0.0
                for g in range(tptr[k], tptr[k + 1]):
                    rr = r + dy[g]
                    if 0 <= rr < n:
                        d = dx[g]
                        lo = 0 if d >= 0 else -d
                        hi = n - d if d >= 0 else n
                        if lo < hi:
                            ww = w[g]
                            for c in range(lo, hi):
                                acc[c] += ww * q[rr, c + d]
                for c in range(n):
                    v = acc[c] - base[r, c]
                    if mode == MODE_ABSMAX:
                        v = abs(v)
                    if k == 0:
                        out[r, c] = v
                    elif mode == MODE_MIN:
                        if v < out[r, c]:
                            out[r, c] = v
                    else:
                        if v > out[r, c]:
                            out[r, c] = v


def extremal_conv_field(
    q: np.ndarray,
    grid: GridSpec,
    cutoff: Cutoff,
    interval,
    mode: str,
    base: np.ndarray | None = None,
    min_per_octave: int = 16,
    ts: np.ndarray | None = None,
) -> np.ndarray:
    """Per-cell extremum over scales of the curve average of q (minus base).

    mode 'max' tracks the signed maximum of the average, 'min' the signed
    minimum, 'absmax' the maximum of |average - base|.  `base` defaults to
    zero.  Evaluation is at cell centers; samples outside the window read 0.
    """
    c, b = interval
    if ts is None:
        ts = t_grid(c, b, grid.h, support_radius(cutoff.params), min_per_octave)
    q = np.ascontiguousarray(q, dtype=np.float64)
    if base is None:
        base_arr = np.zeros_like(q)
    else:
        base_arr = np.ascontiguousarray(base, dtype=np.float64)
    dx, dy, w, tptr = shift_table(cutoff, grid, ts)
    out = np.empty_like(q)
    kern = _extremal_numba if _USE_NUMBA else _extremal_numpy
    kern(q, dx, dy, w, tptr, base_arr, _MODES[mode], out)
    return out
