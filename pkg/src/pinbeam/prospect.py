"""Dyadic-ladder search for pinned beams, with verifiable certificates.

The search scans set cells in row-major order; for each point it walks the
scale blocks [c_j, b_j] in ascending j and certifies the first pair whose
arcs meet the set at every scale sample.  The certificate translates the
scale block into an interval of curve coefficients and records one witness
per sampled scale, so its claim is finitely checkable by direct membership
lookups.  Exponents below 1 route through the coordinate swap and the
certificate is expressed back in the caller's system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import (
    CurveParams,
    Cutoff,
    build_cutoff,
    param_from_scale,
    scale_from_param,
    support_radius,
    t_grid,
    validate_params,
)
from .raster import GridSpec, RasterSet, axis_swap, cells_of_points

__all__ = [
    "BeamCertificate",
    "BeamSample",
    "DenseWindowResult",
    "ExhaustionReport",
    "ResolutionError",
    "SamplingConfig",
    "ScaleLadder",
    "default_ladder",
    "dyadic_round_down",
    "dyadic_round_up",
    "find_dense_window",
    "is_dyadic",
    "j_bound",
    "ladder_from_coefficients",
    "normalize_window",
    "prospect",
    "verify_certificate",
]


class ResolutionError(ValueError):
    """Requested scales are below what the grid resolves."""

    def __init__(self, message: str, min_resolution: int):
        super().__init__(f"{message}; minimal admissible resolution N = {min_resolution}")
        self.min_resolution = min_resolution


def is_dyadic(x: float) -> bool:
    """True iff x is an exact power of two."""
    if not (x > 0 and math.isfinite(x)):
        return False
    return math.frexp(x)[0] == 0.5


def dyadic_round_up(x: float) -> float:
    """Smallest power of two >= x."""
    if not x > 0:
        raise ValueError(f"need x > 0, got {x}")
    m, e = math.frexp(x)
    return x if m == 0.5 else math.ldexp(1.0, e)


def dyadic_round_down(x: float) -> float:
    """Largest power of two <= x."""
    if not x > 0:
        raise ValueError(f"need x > 0, got {x}")
    m, e = math.frexp(x)
    return x if m == 0.5 else math.ldexp(0.5, e)


@dataclass(frozen=True)
class ScaleLadder:
    """Interleaved dyadic scale pairs 1 > b_1 > c_1 > ... > b_J > c_J > 0."""

    entries: tuple[tuple[float, float], ...]

    def __post_init__(self):
        entries = tuple((float(b), float(c)) for b, c in self.entries)
        if not entries:
            raise ValueError("ladder must have at least one block")
        seq = [1.0]
        for b, c in entries:
            seq.extend((b, c))
        for hi, lo in zip(seq, seq[1:]):
            if not lo < hi:
                raise ValueError(f"ladder not strictly interleaved: {lo} >= {hi}")
        if seq[-1] <= 0:
            raise ValueError("ladder scales must be positive")
        for b, c in entries:
            if not (is_dyadic(b) and is_dyadic(c)):
                raise ValueError(f"ladder scales must be dyadic, got ({b}, {c})")
        object.__setattr__(self, "entries", entries)

    @property
    def depth(self) -> int:
        return len(self.entries)

    def block(self, j: int) -> tuple[float, float]:
        """(b_j, c_j) for 1-based block index j."""
        if not 1 <= j <= self.depth:
            raise ValueError(f"block index {j} outside 1..{self.depth}")
        return self.entries[j - 1]


def default_ladder(depth: int) -> ScaleLadder:
    """Consecutive dyadic scales b_j = 2^(-2j+1), c_j = 2^(-2j)."""
    if depth < 1:
        raise ValueError(f"need depth >= 1, got {depth}")
    return ScaleLadder(tuple((2.0 ** (-2 * j + 1), 2.0 ** (-2 * j)) for j in range(1, depth + 1)))


def j_bound(delta: float, cprime: float) -> int:
    """Ladder depth floor(delta^-cprime) + 1 that forces a certified block."""
    if not (0 < delta <= 0.5):
        raise ValueError(f"need 0 < delta <= 1/2, got {delta}")
    if cprime < 1:
        raise ValueError(f"need cprime >= 1, got {cprime}")
    return int(math.floor(delta**-cprime)) + 1


def ladder_from_coefficients(b_coeffs, c_coeffs, r: float, beta: float) -> ScaleLadder:
    """Ladder induced by coefficient bounds C_1 > B_1 > ... on a 2R window.

    Block j takes the scale of B_{J+1-j} rounded up to a dyadic and the
    scale of C_{J+1-j} rounded down, after normalizing lengths by 2R.  The
    interleaving invariant is enforced post-rounding.
    """
    if len(b_coeffs) != len(c_coeffs):
        raise ValueError("coefficient lists must have equal length")
    depth = len(b_coeffs)
    entries = []
    for j in range(1, depth + 1):
        t_hi = scale_from_param(b_coeffs[depth - j], beta)
        t_lo = scale_from_param(c_coeffs[depth - j], beta)
        entries.append((dyadic_round_up(t_hi / (2 * r)), dyadic_round_down(t_lo / (2 * r))))
    return ScaleLadder(tuple(entries))


# ---------------------------------------------------------------------------
# Prospecting.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingConfig:
    nodes: int = 128
    plateau_frac: float = 0.5
    min_per_octave: int = 16
    subsample: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class BeamSample:
    t: float
    a: float
    u: float
    hit: tuple[float, float]


@dataclass(frozen=True)
class BeamCertificate:
    """A pinned point and a coefficient interval whose curves all meet the set."""

    beta: float
    eta: float
    theta: float
    point: tuple[float, float]
    j: int
    t_interval: tuple[float, float]  # (c_j, b_j)
    a_interval: tuple[float, float]
    t_grid_ratio: float
    samples: tuple[BeamSample, ...]
    gap: tuple[float, float]


@dataclass(frozen=True)
class ExhaustionReport:
    """Per scanned point, one violating scale per block: no beam was found."""

    ladder: ScaleLadder
    points: tuple[tuple[tuple[float, float], tuple[tuple[int, float], ...]], ...]
    scanned: int


@dataclass(frozen=True)
class _WorkingSystem:
    raster: RasterSet
    params: CurveParams
    cutoff: Cutoff
    swapped: bool


def _working_system(a: RasterSet, params: CurveParams, sampling: SamplingConfig) -> _WorkingSystem:
    verdict = validate_params(params)
    if not verdict.ok:
        raise ValueError(f"inadmissible curve parameters: {verdict.reason}")
    if params.requires_swap:
        work_params = params.swapped()
        work_raster = axis_swap(a)
        swapped = True
    else:
        work_params, work_raster, swapped = params, a, False
    cutoff = build_cutoff(work_params, sampling.nodes, sampling.plateau_frac)
    return _WorkingSystem(work_raster, work_params, cutoff, swapped)


def _check_ladder_resolution(grid: GridSpec, ladder: ScaleLadder, theta: float) -> None:
    b_last, c_last = ladder.block(ladder.depth)
    if theta * b_last < grid.h:
        n_min = 2 ** math.ceil(math.log2(grid.side / (theta * b_last)))
        raise ResolutionError(
            f"finest ladder block (b_J={b_last:g}) has arcs below cell size {grid.h:g}",
            n_min,
        )


def _scan_cells(work: RasterSet, sampling: SamplingConfig) -> np.ndarray:
    cells = np.argwhere(work.bitmap)  # (k, 2) rows (iy, ix), row-major order
    if sampling.subsample is not None and cells.shape[0] > sampling.subsample:
        rng = np.random.default_rng(sampling.seed)
        keep = rng.choice(cells.shape[0], size=sampling.subsample, replace=False)
        cells = cells[np.sort(keep)]
    return cells


def _block_tables(work: _WorkingSystem, ladder: ScaleLadder, min_per_octave: int):
    grid = work.raster.grid
    radius = support_radius(work.params)
    tables = []
    for j in range(1, ladder.depth + 1):
        b, c = ladder.block(j)
        ts = t_grid(c, b, grid.h, radius, min_per_octave)
        ox = np.outer(ts, work.cutoff.nodes)
        oy = np.outer(ts, work.cutoff.node_powers)
        ratio = (b / c) ** (1.0 / (len(ts) - 1)) if len(ts) > 1 else 1.0
        tables.append((ts, ox, oy, ratio))
    return tables


def _hits_matrix(work_raster: RasterSet, xc: float, yc: float, ox, oy) -> np.ndarray:
    ix, iy, inside = cells_of_points(work_raster.grid, xc + ox, yc + oy)
    return inside & work_raster.bitmap[iy, ix]


def _certificate(
    params: CurveParams,
    swapped: bool,
    xc: float,
    yc: float,
    j: int,
    ts: np.ndarray,
    ox: np.ndarray,
    oy: np.ndarray,
    ratio: float,
    hits: np.ndarray,
) -> BeamCertificate:
    rows = np.arange(len(ts))
    first = hits.argmax(axis=1)
    u_work = ox[rows, first]
    v_work = oy[rows, first]
    if swapped:
        point = (yc, xc)
        u_orig, v_orig = v_work, u_work
    else:
        point = (xc, yc)
        u_orig, v_orig = u_work, v_work
    hits_x = point[0] + u_orig
    hits_y = point[1] + v_orig
    samples = tuple(
        BeamSample(float(t), param_from_scale(float(t), params.beta), float(u), (float(hx), float(hy)))
        for t, u, hx, hy in zip(ts, u_orig, hits_x, hits_y)
    )
    c, b = float(ts[0]), float(ts[-1])
    ends = sorted((param_from_scale(b, params.beta), param_from_scale(c, params.beta)))
    return BeamCertificate(
        beta=params.beta,
        eta=params.eta,
        theta=params.theta,
        point=(float(point[0]), float(point[1])),
        j=j,
        t_interval=(c, b),
        a_interval=(ends[0], ends[1]),
        t_grid_ratio=float(ratio),
        samples=samples,
        gap=(float(u_orig.min()), float(u_orig.max())),
    )


def prospect(
    a: RasterSet,
    ladder: ScaleLadder,
    params: CurveParams,
    sampling: SamplingConfig = SamplingConfig(),
) -> BeamCertificate | ExhaustionReport:
    """Search for a pinned point and block whose arcs all meet the set.

    Scans set cells in row-major order and blocks in ascending j; returns a
    certificate for the first (point, j) such that every scale sample in
    [c_j, b_j] has a witness, else an exhaustion report listing one
    violating scale per (point, block).
    """
    if a.cell_count == 0:
        raise ValueError("cannot prospect an empty set")
    work = _working_system(a, params, sampling)
    _check_ladder_resolution(work.raster.grid, ladder, work.params.theta)
    tables = _block_tables(work, ladder, sampling.min_per_octave)
    cells = _scan_cells(work.raster, sampling)
    grid = work.raster.grid
    h = grid.h
    x0, y0 = grid.origin

    exhaustion: list = []
    for iy, ix in cells:
        xc = x0 + (ix + 0.5) * h
        yc = y0 + (iy + 0.5) * h
        violations = []
        for j, (ts, ox, oy, ratio) in enumerate(tables, start=1):
            hits = _hits_matrix(work.raster, xc, yc, ox, oy)
            ok_t = hits.any(axis=1)
            if ok_t.all():
                return _certificate(params, work.swapped, xc, yc, j, ts, ox, oy, ratio, hits)
            violations.append((j, float(ts[int(ok_t.argmin())])))
        point = (yc, xc) if work.swapped else (xc, yc)
        exhaustion.append(((float(point[0]), float(point[1])), tuple(violations)))
    return ExhaustionReport(ladder=ladder, points=tuple(exhaustion), scanned=len(cells))


# ---------------------------------------------------------------------------
# Certificate verification (independent oracle).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    failures: tuple[str, ...] = ()


def verify_certificate(
    a: RasterSet,
    cert: BeamCertificate,
    refinement: int = 1,
    sampling: SamplingConfig = SamplingConfig(),
) -> VerificationResult:
    """Re-check a certificate against the raster.

    Every claimed hit is re-tested by direct cell lookup; the scale interval
    is re-scanned on a grid `refinement` times finer; the coefficient
    interval is re-derived from the scale interval.  Any discrepancy is
    reported with the offending sample or scale.
    """
    failures = []
    params = CurveParams(cert.beta, cert.eta, cert.theta)
    if params.requires_swap:
        work_params = params.swapped()
        work_raster = axis_swap(a)
        px, py = cert.point[1], cert.point[0]
    else:
        work_params = params
        work_raster = a
        px, py = cert.point

    for idx, s in enumerate(cert.samples):
        hx, hy = s.hit
        ix, iy, inside = cells_of_points(a.grid, np.array([hx]), np.array([hy]))
        if not inside[0] or not a.bitmap[iy[0], ix[0]]:
            failures.append(f"sample {idx}: claimed hit ({hx:.17g}, {hy:.17g}) is not in the set")

    cutoff = build_cutoff(work_params, sampling.nodes, sampling.plateau_frac)
    c, b = cert.t_interval
    ts_std = t_grid(c, b, work_raster.grid.h, support_radius(work_params), sampling.min_per_octave)
    n_fine = (len(ts_std) - 1) * max(1, int(refinement)) + 1
    ts_fine = np.geomspace(c, b, n_fine) if n_fine > 1 else np.array([c])
    ox = np.outer(ts_fine, cutoff.nodes)
    oy = np.outer(ts_fine, cutoff.node_powers)
    hits = _hits_matrix(work_raster, px, py, ox, oy)
    ok_t = hits.any(axis=1)
    if not ok_t.all():
        t_bad = float(ts_fine[int(ok_t.argmin())])
        failures.append(f"refined scan: no witness at scale t = {t_bad:.17g}")

    ends = sorted((param_from_scale(b, cert.beta), param_from_scale(c, cert.beta)))
    for want, got, name in zip(ends, cert.a_interval, ("low", "high")):
        if abs(want - got) > 1e-12 * max(abs(want), abs(got), 1.0):
            failures.append(f"coefficient interval {name} end {got!r} != derived {want!r}")

    return VerificationResult(ok=not failures, failures=tuple(failures))


# ---------------------------------------------------------------------------
# Dense-window extraction (positive-density reduction).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DenseWindowResult:
    found: bool
    r: float
    center: tuple[float, float]
    ratio: float


def _window_counts(bitmap: np.ndarray, m: int) -> np.ndarray:
    n = bitmap.shape[0]
    sat = np.zeros((n + 1, n + 1), dtype=np.int64)
    np.cumsum(np.cumsum(bitmap, axis=0), axis=1, out=sat[1:, 1:])
    return sat[m:, m:] - sat[:-m, m:] - sat[m:, :-m] + sat[:-m, :-m]


def find_dense_window(big_a: RasterSet, delta: float, r_list) -> DenseWindowResult:
    """Largest listed R whose best cell-aligned 2R-window has density >= delta.

    The maximization over translates is exact; on a miss the result carries
    the best ratio seen (found=False).
    """
    grid = big_a.grid
    h = grid.h
    best = DenseWindowResult(False, 0.0, (math.nan, math.nan), -1.0)
    for r in sorted(r_list, reverse=True):
        m_f = 2.0 * r / h
        m = round(m_f)
        if m < 1 or m > grid.n or abs(m_f - m) > 1e-9:
            raise ValueError(f"window half-side {r} is not resolvable on grid h={h:g}")
        counts = _window_counts(big_a.bitmap, m)
        flat = int(np.argmax(counts))
        iy0, ix0 = divmod(flat, counts.shape[1])
        ratio = counts[iy0, ix0] / (m * m)
        center = (grid.origin[0] + (ix0 + m / 2.0) * h, grid.origin[1] + (iy0 + m / 2.0) * h)
        if ratio >= delta:
            return DenseWindowResult(True, r, center, float(ratio))
        if ratio > best.ratio:
            best = DenseWindowResult(False, r, center, float(ratio))
    return best


def normalize_window(big_a: RasterSet, r: float, center) -> RasterSet:
    """Window content re-indexed onto the unit square.

    The window [-R, R]^2 + center is mapped by (p - corner) / 2R so that the
    result's measure equals the window density exactly.
    """
    grid = big_a.grid
    h = grid.h
    m_f = 2.0 * r / h
    m = round(m_f)
    if abs(m_f - m) > 1e-9 or m < 1:
        raise ValueError(f"window side 2R = {2 * r} is not a whole number of cells")
    cx_f = (center[0] - r - grid.origin[0]) / h
    cy_f = (center[1] - r - grid.origin[1]) / h
    cx, cy = round(cx_f), round(cy_f)
    if abs(cx_f - cx) > 1e-6 or abs(cy_f - cy) > 1e-6:
        raise ValueError("window corner is not cell-aligned")
    if cx < 0 or cy < 0 or cx + m > grid.n or cy + m > grid.n:
        raise ValueError("window extends outside the raster domain")
    block = np.ascontiguousarray(big_a.bitmap[cy : cy + m, cx : cx + m])
    return RasterSet(GridSpec(m, (0.0, 0.0), 1.0), block)
