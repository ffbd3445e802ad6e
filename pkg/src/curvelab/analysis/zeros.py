"""Zeros of absolute-value-type functions and their orders."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.optimize import least_squares

from ..errors import GridError
from .fields import InvariantField

ORDER_TOL = 0.2


@dataclass
class Zero:
    x: float
    y: float
    order: float  # fitted log-log slope
    even_order: int
    integer_order: int
    consistent: bool  # even, positive and within ORDER_TOL of the fit
    rms: float  # fit residual in log space
    npoints: int

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class ZeroOrderReport:
    zeros: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return int(sum(z.even_order for z in self.zeros))

    @property
    def N_integer(self) -> int:
        """Sum of orders rounded to integers (for moduli of holomorphic data)."""
        return int(sum(z.integer_order for z in self.zeros))

    @property
    def confident(self) -> bool:
        return all(z.consistent for z in self.zeros)

    def to_json(self):
        return {"N": self.N, "N_integer": self.N_integer, "confident": self.confident, "zeros": [z.to_json() for z in self.zeros]}


def _local_minima(u: np.ndarray, periodic) -> np.ndarray:
    mode = ["wrap" if p else "nearest" for p in periodic]
    big = np.where(np.isfinite(u), u, np.inf)
    mins = ndimage.minimum_filter(big, size=3, mode=mode)
    return np.isfinite(u) & (big <= mins)


def _fit(X, Y, u, z0, h, rmin=3.0, rmax=10.0):
    """Least-squares fit of log u = k log r + (quadratic in dx, dy) on an annulus around z0."""

    def select(c):
        r = np.hypot(X - c[0], Y - c[1])
        return (r >= rmin * h) & (r <= rmax * h) & np.isfinite(u) & (u > 0)

    def design(c, sel):
        dx, dy = X[sel] - c[0], Y[sel] - c[1]
        A = np.stack([np.log(np.hypot(dx, dy)), np.ones(dx.size), dx, dy, dx * dx, dx * dy, dy * dy], axis=1)
        return A, np.log(u[sel])

    def resid(c, sel):
        A, b = design(c, sel)
        coef, *_ = np.linalg.lstsq(A, b, rcond=None)
        return A @ coef - b

    sel = select(z0)
    if sel.sum() < 12:
        return None
    # the node set is frozen while the centre moves so the residual stays smooth
    sol = least_squares(resid, np.asarray(z0, float), args=(sel,), x_scale=h, diff_step=1e-3)
    c = sol.x
    if np.hypot(c[0] - z0[0], c[1] - z0[1]) > 2 * h:
        return None
    sel = select(c)
    A, b = design(c, sel)
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - b) ** 2)))
    return c, float(coef[0]), rms, len(b)


def zero_orders(field: InvariantField, rel_threshold: float = 1e-2, region=None) -> ZeroOrderReport:
    """Locate isolated zeros of a nonnegative field and fit their orders.

    Candidate zeros are grid-local minima below ``rel_threshold`` times the
    field maximum. Around each one the order is the slope of log u against
    log |z - z0| over the annulus 3h <= |z - z0| <= 10h, with z0 refined by
    least squares. Fits with slope below 0.5 are local minima rather than
    zeros and are dropped. ``region(x, y)`` optionally restricts which zeros
    are counted (used to split an atlas).
    """
    grid = field.grid
    u = np.abs(np.where(field.mask, field.values, np.nan))
    finite = np.isfinite(u)
    if not finite.any():
        raise GridError("field has no valid nodes")
    umax = float(np.max(u[finite]))
    if umax == 0.0:
        raise GridError("field vanishes identically; zeros are not isolated")
    tiny = finite & (u <= 1e-12 * umax)
    lab, n = ndimage.label(tiny)
    if n and np.max(np.bincount(lab.ravel())[1:]) > 4:
        raise GridError("zero set is not isolated at this grid resolution")

    X, Y = grid.mesh()
    h = grid.h
    cand = _local_minima(u, (grid.periodic_x, grid.periodic_y)) & (u < rel_threshold * umax)
    zeros = []
    for i, j in zip(*np.nonzero(cand)):
        z0 = (X[i, j], Y[i, j])
        if any(np.hypot(z.x - z0[0], z.y - z0[1]) < 3 * h for z in zeros):
            continue
        fit = _fit(X, Y, u, z0, h)
        if fit is None:
            continue
        (zx, zy), k, rms, npts = fit
        if k < 0.5:
            continue
        if region is not None and not region(zx, zy):
            continue
        even = max(2, 2 * int(round(k / 2)))
        zeros.append(
            Zero(float(zx), float(zy), k, even, int(round(k)), abs(k - even) <= ORDER_TOL, rms, npts)
        )
    return ZeroOrderReport(zeros)
