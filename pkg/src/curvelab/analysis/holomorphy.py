"""Discrete Cauchy-Riemann test for Hopf coefficients."""
from __future__ import annotations

import numpy as np

from ..config import tolerance
from ..dsl import SurfaceSpec
from ..jet import DEFAULT_ORDER
from .fields import Grid, InvariantField, sample_field
from .identities import CheckReport
from .laplacian import dbar

ZERO_REL = 1e-8


def holomorphy_of_field(f: InvariantField, F: InvariantField, r: int, identity: str = "holomorphy") -> CheckReport:
    """sup |dbar f| * L / sup |f| with L the longer side of the grid rectangle.

    f_r is taken in the fixed coordinate z of the grid, so no frame gauge
    enters. When f is negligible against F^(r+1) (the natural size of a
    Hopf coefficient) the residual is measured against sup F^(r+1) instead,
    which makes it an absolute test of f_r = 0.
    """
    grid = f.grid
    L = max(grid.x1 - grid.x0, grid.y1 - grid.y0)
    db = dbar(f)
    fmax = f.sup_norm()
    scale = float(np.max(F.valid_values() ** (r + 1)))
    absolute = fmax <= ZERO_REL * scale
    denom = scale if absolute else fmax
    res = db.map(lambda v: np.abs(v) * L / denom, identity)
    rep = CheckReport.from_residual(identity, res, tolerance("holomorphy", grid.h))
    rep.details = {"mode": "absolute" if absolute else "relative", "sup_hopf": fmax, "r": r}
    return rep


def holomorphy_residual(spec: SurfaceSpec, grid: Grid, r: int, order: int = DEFAULT_ORDER) -> CheckReport:
    f = sample_field(spec, grid, f"hopf_{r}", order)
    F = sample_field(spec, grid, "F", order)
    return holomorphy_of_field(f, F, r, f"holomorphy_{r}")
