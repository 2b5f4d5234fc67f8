import numpy as np
import pytest

from pinbeam import GridSpec, RasterSet


@pytest.fixture
def unit64():
    return GridSpec(64)


def full_square(n: int) -> RasterSet:
    return RasterSet(GridSpec(n), np.ones((n, n), dtype=bool))


def empty_square(n: int) -> RasterSet:
    return RasterSet(GridSpec(n), np.zeros((n, n), dtype=bool))


def single_cell(n: int, ix: int, iy: int) -> RasterSet:
    bm = np.zeros((n, n), dtype=bool)
    bm[iy, ix] = True
    return RasterSet(GridSpec(n), bm)
