"""Mean-zero trial fields built from Neumann-compatible cosine modes.

Products of cos(k pi x / L) are exactly mean-zero under the midpoint rule
(for 1 <= k < 2n), so the witness families used by the embedding, depth and
level-set estimators stay in the zero-mean class to round-off.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .grid import Grid, GridFunction, project_mean_zero

__all__ = ["mode_field", "mode_catalogue", "random_field"]


def mode_field(grid: Grid, ks: tuple[int, ...]) -> GridFunction:
    """Product of cosine modes, one wavenumber per axis; not all zero."""
    if all(k == 0 for k in ks):
        raise ValueError("all-zero mode is constant, not a witness")
    vals = np.ones(grid.shape)
    coords = grid.centers()
    for axis, k in enumerate(ks):
        if k == 0:
            continue
        vals = vals * np.cos(k * np.pi * coords[axis] / grid.lengths[axis])
    return GridFunction(grid, vals)


def mode_catalogue(grid: Grid, kmax: int = 3) -> list[GridFunction]:
    """All pure modes with wavenumbers up to kmax (deterministic order)."""
    ranges = [range(kmax + 1)] * grid.dimension
    out = []
    for ks in product(*ranges):
        if all(k == 0 for k in ks):
            continue
        out.append(mode_field(grid, ks))
    return out


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    kmax: int = 4,
    amp_range: tuple[float, float] = (1e-1, 1e1),
) -> GridFunction:
    """Band-limited random combination of modes with log-uniform amplitude."""
    ranges = [range(kmax + 1)] * grid.dimension
    vals = np.zeros(grid.shape)
    coords = grid.centers()
    for ks in product(*ranges):
        if all(k == 0 for k in ks):
            continue
        c = rng.normal()
        term = np.full(grid.shape, c)
        for axis, k in enumerate(ks):
            if k:
                term = term * np.cos(k * np.pi * coords[axis] / grid.lengths[axis])
        vals += term
    lo, hi = amp_range
    amp = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    scale = np.max(np.abs(vals))
    if scale == 0.0:
        vals = np.cos(np.pi * coords[0] / grid.lengths[0])
        scale = np.max(np.abs(vals))
    return project_mean_zero(GridFunction(grid, amp * vals / scale))
