from __future__ import annotations

import numpy as np
import pytest

from pxwell.exponents import build_field
from pxwell.grid import Grid, GridFunction, project_mean_zero
from pxwell.witnesses import mode_field


@pytest.fixture
def grid1d():
    return Grid((64,), (1.0,))


@pytest.fixture
def grid2d():
    return Grid((24, 24), (1.0, 1.0))


def random_gridfunction(grid, rng, amp=1.0):
    return GridFunction(grid, amp * rng.standard_normal(grid.shape))


def mixed_mode(grid, coefs=((1, 1, 1.0), (2, 0, 0.3), (0, 1, 0.2))):
    vals = np.zeros(grid.shape)
    for *ks, c in coefs:
        vals += c * mode_field(grid, tuple(ks)).values
    return project_mean_zero(GridFunction(grid, vals))


def random_exponent(grid, rng, lo=1.2, hi=4.0):
    """Smooth random exponent field strictly above 1."""
    coords = grid.centers()
    wobble = rng.uniform(0.05, 0.4)
    base = rng.uniform(lo + 2 * wobble + 0.05, hi - 0.5)
    vals = base + wobble * np.sin(2 * np.pi * coords[0] / grid.lengths[0])
    if grid.dimension == 2:
        vals = vals + wobble * np.cos(np.pi * coords[1] / grid.lengths[1])
    return build_field(np.asarray(vals), grid)
