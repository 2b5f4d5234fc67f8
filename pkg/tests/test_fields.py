"""Field-engine correctness against an independent per-cell reimplementation."""

import math

import numpy as np
import pytest

from pinbeam import CurveParams, GridSpec, build_cutoff, support_radius
from pinbeam.fields import _USE_NUMBA, _extremal_numpy, extremal_conv_field, shift_table
from pinbeam.kernel import t_grid

P = CurveParams(2.0, 1.0, 2.4)


def brute_extremum(q, grid, cutoff, ts, mode, base=None):
    """Node-by-node recomputation of the cell-center extremum."""
    n = grid.n
    h = grid.h
    base = np.zeros((n, n)) if base is None else base
    out = np.empty((n, n))
    for r in range(n):
        for c in range(n):
            best = None
            for t in ts:
                acc = 0.0
                for u, up, w in zip(cutoff.nodes, cutoff.node_powers, cutoff.weights):
                    cc = c + math.floor(0.5 + t * u / h)
                    rr = r + math.floor(0.5 + t * up / h)
                    if 0 <= cc < n and 0 <= rr < n:
                        acc += w * q[rr, cc]
                v = acc - base[r, c]
                if mode == "absmax":
                    v = abs(v)
                if best is None:
                    best = v
                elif mode == "min":
                    best = min(best, v)
                else:
                    best = max(best, v)
            out[r, c] = best
    return out


@pytest.fixture(scope="module")
def small_case():
    n = 16
    grid = GridSpec(n)
    cutoff = build_cutoff(P, 16, 0.5)
    rng = np.random.default_rng(8)
    q = rng.random((n, n))
    interval = (0.0625, 0.125)
    ts = t_grid(*interval, grid.h, support_radius(P))
    return grid, cutoff, q, interval, ts


@pytest.mark.parametrize("mode", ["max", "absmax", "min"])
def test_engine_matches_brute_force(small_case, mode):
    grid, cutoff, q, interval, ts = small_case
    got = extremal_conv_field(q, grid, cutoff, interval, mode)
    want = brute_extremum(q, grid, cutoff, ts, mode)
    assert np.abs(got - want).max() < 1e-12


def test_engine_with_base_matches_brute_force(small_case):
    grid, cutoff, q, interval, ts = small_case
    base = np.full_like(q, 0.3)
    got = extremal_conv_field(q, grid, cutoff, interval, "absmax", base=base)
    want = brute_extremum(q, grid, cutoff, ts, "absmax", base=base)
    assert np.abs(got - want).max() < 1e-12


@pytest.mark.skipif(not _USE_NUMBA, reason="numba path disabled")
def test_numba_and_numpy_paths_agree_bitwise(small_case):
    grid, cutoff, q, interval, ts = small_case
    dx, dy, w, tptr = shift_table(cutoff, grid, ts)
    base = np.zeros_like(q)
    out_np = np.empty_like(q)
    _extremal_numpy(q, dx, dy, w, tptr, base, 1, out_np)
    out = extremal_conv_field(q, grid, cutoff, interval, "absmax")
    assert (out == out_np).all()


def test_shift_weights_sum_to_one(small_case):
    grid, cutoff, q, interval, ts = small_case
    dx, dy, w, tptr = shift_table(cutoff, grid, ts)
    for k in range(len(ts)):
        assert math.fsum(w[tptr[k] : tptr[k + 1]]) == pytest.approx(1.0, abs=1e-12)


def test_constant_field_sup_is_one_in_interior():
    # away from the boundary every shifted copy stays inside, so the grouped
    # average of a constant-1 field is exactly the weight total
    n = 64
    grid = GridSpec(n)
    cutoff = build_cutoff(P, 32, 0.5)
    q = np.ones((n, n))
    out = extremal_conv_field(q, grid, cutoff, (0.01, 0.02), "max")
    d = support_radius(P)
    margin = math.ceil(0.02 * d / grid.h) + 1
    interior = out[: n - margin, : n - margin]
    assert np.abs(interior - 1.0).max() < 1e-12
