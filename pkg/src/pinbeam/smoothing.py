"""Poisson smoothing, dyadic martingale averages, and square functions.

The Poisson kernel is sampled at cell-center displacements, truncated, and
renormalized so its discrete mass is exactly 1; convolution goes through a
direct path for small kernels and a transform path otherwise, with kernel
spectra cached per (grid, scale).  Martingale averages are computed by a
cascade of 2x2 block means so that coarsening a block-constant field is
bit-exact, which makes E_k E_m = E_min an identity rather than a tolerance.
"""

from __future__ import annotations

import math
from collections import OrderedDict

import numpy as np
from scipy import fft as sfft
from scipy.signal import convolve as _direct_convolve

from .raster import GridSpec, ScalarField

__all__ = [
    "dyadic_level_bounds",
    "lp_norm",
    "martingale_average",
    "martingale_difference",
    "poisson_kernel",
    "poisson_smooth",
    "poisson_smooth_multi",
    "square_function_s1",
    "square_function_s2",
]

TRUNCATION_FACTOR = 50.0
DIRECT_COST_CAP = 2e8  # direct path only when taps <= 1e4 and taps * n^2 is small


def poisson_point(t: float, x, y):
    """Closed-form kernel value t / (2 pi (t^2 + x^2 + y^2)^(3/2))."""
    return t / (2.0 * math.pi * (t * t + np.asarray(x) ** 2 + np.asarray(y) ** 2) ** 1.5)


def poisson_kernel(grid: GridSpec, t: float) -> np.ndarray:
    """Truncated, renormalized Poisson kernel sampled at cell displacements.

    phi_t(x, y) = t / (2 pi (t^2 + x^2 + y^2)^(3/2)), kept on the disc of
    radius 50 t (capped at the window extent, beyond which displacements
    cannot occur between window cells) and rescaled so the discrete mass
    h^2 * sum equals 1.
    """
    if not t > 0:
        raise ValueError(f"Poisson scale must be positive, got {t}")
    h = grid.h
    r_tr = TRUNCATION_FACTOR * t
    rad = min(math.ceil(r_tr / h), grid.n - 1)
    d = np.arange(-rad, rad + 1) * h
    xx, yy = np.meshgrid(d, d, indexing="ij")
    ker = poisson_point(t, xx, yy)
    ker[xx * xx + yy * yy > r_tr * r_tr] = 0.0
    ker /= ker.sum() * (h * h)
    return ker


class _SpectrumCache:
    def __init__(self, maxsize: int = 4):
        self.maxsize = maxsize
        self._store: OrderedDict = OrderedDict()

    def get(self, key, build):
        if key in self._store:
            self._store.move_to_end(key)
            return self._store[key]
        val = build()
        self._store[key] = val
        while len(self._store) > self.maxsize:
            self._store.popitem(last=False)
        return val


_kernel_spectra = _SpectrumCache()


def _fft_smooth(values: np.ndarray, grid: GridSpec, scales, kernels) -> list[np.ndarray]:
    n = grid.n
    rads = [(k.shape[0] - 1) // 2 for k in kernels]
    rad_max = max(rads)
    size = sfft.next_fast_len(n + 2 * rad_max)
    f_hat = sfft.rfft2(values, (size, size))
    outs = []
    for t, ker, rad in zip(scales, kernels, rads):
        key = (grid.n, grid.origin, grid.side, float(t), size)
        k_hat = _kernel_spectra.get(key, lambda: sfft.rfft2(ker, (size, size)))
        conv = sfft.irfft2(f_hat * k_hat, (size, size))
        outs.append(np.ascontiguousarray(conv[rad : rad + n, rad : rad + n]))
    return outs


def poisson_smooth_multi(field: ScalarField, scales) -> list[ScalarField]:
    """Poisson-smooth one field at several scales, sharing the field transform."""
    grid = field.grid
    h = grid.h
    kernels = [poisson_kernel(grid, t) for t in scales]
    direct = [
        k.size <= 1e4 and k.size * grid.n * grid.n <= DIRECT_COST_CAP for k in kernels
    ]
    outs: list[ScalarField | None] = [None] * len(kernels)
    fft_idx = [i for i, d in enumerate(direct) if not d]
    if fft_idx:
        convs = _fft_smooth(
            field.values, grid, [scales[i] for i in fft_idx], [kernels[i] for i in fft_idx]
        )
        for i, cv in zip(fft_idx, convs):
            outs[i] = ScalarField(grid, cv * (h * h))
    for i, d in enumerate(direct):
        if d:
            cv = _direct_convolve(field.values, kernels[i], mode="same", method="direct")
            outs[i] = ScalarField(grid, cv * (h * h))
    return outs  # type: ignore[return-value]


def poisson_smooth(field: ScalarField, t: float) -> ScalarField:
    """Convolve with the truncated renormalized Poisson kernel at scale t."""
    return poisson_smooth_multi(field, [t])[0]


# ---------------------------------------------------------------------------
# Dyadic martingale averages.
# ---------------------------------------------------------------------------


def dyadic_level_bounds(grid: GridSpec) -> tuple[int, int]:
    """Inclusive range of levels k whose squares of side 2^-k the grid resolves."""
    k_max = round(math.log2(grid.n / grid.side))
    k_min = k_max - round(math.log2(grid.n))
    return k_min, k_max


def _level_depth(grid: GridSpec, k: int) -> int:
    """Cells-per-square doubling depth for level k, with alignment checks."""
    side = 2.0 ** (-k)
    cells = side / grid.h
    depth = round(math.log2(cells)) if cells > 0 else -1
    if depth < 0 or depth > round(math.log2(grid.n)) or 2.0**depth != cells:
        raise ValueError(
            f"level {k} (squares of side {side:g}) not resolvable on grid h={grid.h:g}"
        )
    for coord in grid.origin:
        ratio = coord / side
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"window origin {grid.origin} not aligned to level {k} squares")
    return depth


def _downsample_once(v: np.ndarray) -> np.ndarray:
    a = v.reshape(v.shape[0] // 2, 2, v.shape[1] // 2, 2)
    s = (a[:, 0, :, 0] + a[:, 0, :, 1]) + (a[:, 1, :, 0] + a[:, 1, :, 1])
    return s * 0.25


def martingale_average(field: ScalarField, k: int) -> ScalarField:
    """Conditional expectation onto dyadic squares of side 2^-k.

    Constant on each square, equal to the cell-exact mean there; idempotent
    and integral-preserving.
    """
    depth = _level_depth(field.grid, k)
    v = field.values
    for _ in range(depth):
        v = _downsample_once(v)
    f = 2**depth
    if f > 1:
        v = np.repeat(np.repeat(v, f, axis=0), f, axis=1)
    return ScalarField(field.grid, v)


def martingale_difference(field: ScalarField, i: int) -> ScalarField:
    """Detail between consecutive dyadic levels: E_{i+1} h - E_i h."""
    fine = martingale_average(field, i + 1)
    coarse = martingale_average(field, i)
    return ScalarField(field.grid, fine.values - coarse.values)


# ---------------------------------------------------------------------------
# Square functions and norms.
# ---------------------------------------------------------------------------


def square_function_s1(field: ScalarField, i_lo: int, i_hi: int) -> ScalarField:
    """Pointwise l2 aggregate of consecutive Poisson differences.

    sqrt(sum_{i=i_lo}^{i_hi} |P_{2^{-i+1}} h - P_{2^{-i}} h|^2).
    """
    if i_lo > i_hi:
        raise ValueError(f"empty level range [{i_lo}, {i_hi}]")
    scales = [2.0 ** (-i + 1) for i in range(i_lo, i_hi + 1)] + [2.0 ** (-i_hi)]
    smooth = poisson_smooth_multi(field, scales)
    acc = np.zeros_like(field.values)
    for j in range(len(scales) - 1):
        diff = smooth[j].values - smooth[j + 1].values
        acc += diff * diff
    return ScalarField(field.grid, np.sqrt(acc))


def square_function_s2(field: ScalarField, i_lo: int, i_hi: int) -> ScalarField:
    """Pointwise l2 aggregate of Poisson-vs-martingale differences.

    sqrt(sum_{i=i_lo}^{i_hi} |P_{2^{-i}} h - E_i h|^2).
    """
    if i_lo > i_hi:
        raise ValueError(f"empty level range [{i_lo}, {i_hi}]")
    levels = list(range(i_lo, i_hi + 1))
    smooth = poisson_smooth_multi(field, [2.0 ** (-i) for i in levels])
    acc = np.zeros_like(field.values)
    for sm, i in zip(smooth, levels):
        diff = sm.values - martingale_average(field, i).values
        acc += diff * diff
    return ScalarField(field.grid, np.sqrt(acc))


def lp_norm(field: ScalarField, p: float) -> float:
    """(h^2 * sum |v|^p)^(1/p)."""
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    h = field.grid.h
    return float((np.abs(field.values) ** p).sum() * h * h) ** (1.0 / p)
