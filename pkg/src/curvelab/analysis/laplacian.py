"""Finite-difference operators on invariant fields.

With isothermal coordinates the Laplace-Beltrami operator of ds^2 = F|dz|^2
is (1/F)(d_xx + d_yy) = (4/F) d dbar, with the div-grad sign convention.
"""
from __future__ import annotations

import numpy as np

from ..errors import GridError
from .fields import Grid, InvariantField

# central stencils: offsets -> weights
_D1 = {2: {-1: -0.5, 1: 0.5}, 4: {-2: 1 / 12, -1: -2 / 3, 1: 2 / 3, 2: -1 / 12}}
_D2 = {
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    4: {-2: -1 / 12, -1: 4 / 3, 0: -5 / 2, 1: 4 / 3, 2: -1 / 12},
    6: {-3: 1 / 90, -2: -3 / 20, -1: 3 / 2, 0: -49 / 18, 1: 3 / 2, 2: -3 / 20, 3: 1 / 90},
}


def _shift(a: np.ndarray, k: int, axis: int, periodic: bool):
    """a[i + k] along axis; non-periodic out-of-range entries are NaN."""
    if periodic:
        return np.roll(a, -k, axis=axis)
    out = np.full_like(a, np.nan)
    n = a.shape[axis]
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k >= 0:
        src[axis], dst[axis] = slice(k, n), slice(0, n - k)
    else:
        src[axis], dst[axis] = slice(0, n + k), slice(-k, n)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _stencil(a, weights, axis, periodic, lead=0):
    """Apply a 1-D stencil along a grid axis (``lead`` leading non-grid axes)."""
    out = 0.0
    for k, w in weights.items():
        out = out + w * _shift(a, k, axis + lead, periodic)
    return out


def _masked(a: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, a, np.nan)


def check_grid(grid: Grid, minimum: int = 5):
    if grid.nx < minimum or grid.ny < minimum:
        raise GridError(f"grid {grid.nx}x{grid.ny} too coarse (need >= {minimum} nodes per direction)")


def d_dx(values, grid: Grid, accuracy: int = 2, lead: int = 0):
    return _stencil(values, _D1[accuracy], 0, grid.periodic_x, lead) / grid.hx


def d_dy(values, grid: Grid, accuracy: int = 2, lead: int = 0):
    return _stencil(values, _D1[accuracy], 1, grid.periodic_y, lead) / grid.hy


def flat_laplacian(values, grid: Grid, accuracy: int = 2, lead: int = 0):
    """d_xx + d_yy; entries whose stencil leaves a non-periodic grid are NaN."""
    with np.errstate(invalid="ignore"):
        return (
            _stencil(values, _D2[accuracy], 0, grid.periodic_x, lead) / grid.hx**2
            + _stencil(values, _D2[accuracy], 1, grid.periodic_y, lead) / grid.hy**2
        )


def laplacian(field: InvariantField, F_field: InvariantField, accuracy: int = 2) -> InvariantField:
    """Laplace-Beltrami of a field (second-order 5-point stencil by default).

    Boundary nodes of non-periodic axes and nodes next to masked ones are
    masked in the result.
    """
    grid = field.grid
    check_grid(grid)
    if F_field.grid != grid:
        raise GridError("field and conformal factor live on different grids")
    vals = _masked(field.values, field.mask)
    with np.errstate(all="ignore"):
        lap = flat_laplacian(vals, grid, accuracy) / F_field.values
    mask = field.mask & F_field.mask & np.isfinite(lap) & (F_field.values > 0)
    return InvariantField(grid, np.where(mask, lap, 0.0 * lap), mask, f"lap({field.name})")


def dbar(field: InvariantField) -> InvariantField:
    """(1/2)(d_x + i d_y) by central differences."""
    grid = field.grid
    check_grid(grid, 3)
    vals = _masked(field.values.astype(complex), field.mask)
    with np.errstate(all="ignore"):
        out = 0.5 * (d_dx(vals, grid) + 1j * d_dy(vals, grid))
    mask = field.mask & np.isfinite(out)
    return InvariantField(grid, np.where(mask, out, 0), mask, f"dbar({field.name})")
