"""Gauss-Bonnet and Euler-number bookkeeping on closed surfaces.

A torus is covered by one periodic chart. A sphere given by a chart z is
covered by z and by w = z / |z|^2 (the same map composed with inversion),
glued with a smooth partition of unity that switches over between
|z| = 0.8 and |z| = 1.25.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsl import SurfaceSpec, parse_expr, substitute
from ..errors import GridError, InvalidInput
from ..jet import DEFAULT_ORDER
from .fields import Grid, InvariantField, kstar_algebraic, surface_sample
from .zeros import zero_orders

R_IN, R_OUT = 0.8, 1.25


def _smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(all="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(rho):
    """1 on |z| <= R_IN, 0 on |z| >= R_OUT, smooth in between."""
    return 1.0 - _smoothstep((rho - R_IN) / (R_OUT - R_IN))


@dataclass(frozen=True)
class Chart:
    spec: SurfaceSpec
    grid: Grid
    weight: np.ndarray  # partition-of-unity weight per node
    owns: object  # (x, y) -> bool: zeros counted in this chart


def inverted(spec: SurfaceSpec) -> SurfaceSpec:
    """The same surface in the coordinate w = z / |z|^2."""
    xs = parse_expr("x/(x^2+y^2)")
    ys = parse_expr("y/(x^2+y^2)")
    comps = [substitute(c, x=xs, y=ys) for c in spec.components]
    return spec.with_components(comps, name=f"{spec.name}~inv")


def _cell_grid(R: float, n: int) -> Grid:
    # cell centres of an n x n partition of [-R, R]^2; n even keeps the
    # origin (a pole of the inverted chart) off the grid
    n += n % 2
    h = 2 * R / n
    return Grid(n, n, -R + h / 2, R - h / 2, -R + h / 2, R - h / 2)


def sphere_atlas(spec: SurfaceSpec, n: int = 96) -> list:
    g = _cell_grid(R_OUT, n)
    X, Y = g.mesh()
    rho = np.hypot(X, Y)
    with np.errstate(divide="ignore"):
        w2 = 1.0 - bump(1.0 / rho)
    return [
        Chart(spec, g, bump(rho), lambda x, y: np.hypot(x, y) < 1.0),
        Chart(inverted(spec), g, w2, lambda x, y: np.hypot(x, y) <= 1.0),
    ]


def torus_atlas(spec: SurfaceSpec, n: int = 64) -> list:
    if not spec.periodic:
        raise InvalidInput(f"{spec.name} has no periods")
    g = Grid.for_spec(spec, n)
    return [Chart(spec, g, np.ones(g.shape), None)]


def atlas_for(spec: SurfaceSpec, kind: str, n: int) -> list:
    if kind == "torus":
        return torus_atlas(spec, n)
    if kind == "sphere":
        return sphere_atlas(spec, n)
    raise InvalidInput(f"unknown atlas kind {kind!r}")


def integrate(atlas, fn, order=DEFAULT_ORDER) -> float:
    """Sum over charts of the weighted integral of fn(sample) dA."""
    total = 0.0
    for ch in atlas:
        s = surface_sample(ch.spec, ch.grid, order)
        live = ch.weight > 0
        if not np.all(s.valid[live]):
            raise GridError(f"atlas coverage gap: singular nodes inside the support of {ch.spec.name}")
        with np.errstate(all="ignore"):
            vals = fn(s) * s.flag.F * ch.weight
        # isolated flag singularities (zeros of Hopf data) carry no area
        vals = np.where(live & np.isfinite(vals), vals, 0.0)
        total += float(np.sum(vals)) * ch.grid.hx * ch.grid.hy
    return total


def _count_zeros(atlas, fn, order) -> dict:
    """Zeros of the nonnegative field fn(sample) over all charts."""
    zeros, vanishing = [], True
    for ch in atlas:
        s = surface_sample(ch.spec, ch.grid, order)
        u = np.abs(fn(s))
        scale = np.nanmax(u) if np.any(np.isfinite(u)) else 0.0
        if not scale > 1e-9:
            continue
        vanishing = False
        fld = InvariantField(ch.grid, np.nan_to_num(u, nan=0.0), np.isfinite(u))
        rep = zero_orders(fld, region=ch.owns)
        zeros.extend(rep.zeros)
    N = int(sum(z.integer_order for z in zeros))
    return {"vanishes": vanishing, "N": N, "zeros": [z.to_json() for z in zeros]}


def global_topology(spec: SurfaceSpec, kind: str, n: int = 96, order: int = DEFAULT_ORDER) -> dict:
    """Euler characteristic by Gauss-Bonnet, Hopf zero counts and Euler-number relations."""
    atlas = atlas_for(spec, kind, n)
    chi = integrate(atlas, lambda s: s.flag.K, order) / (2 * np.pi)
    chi_int = int(round(chi))
    report = {"name": spec.name, "atlas": kind, "chi": chi, "chi_rounded": chi_int, "orders": []}
    sample0 = surface_sample(atlas[0].spec, atlas[0].grid, order)
    depth = sample0.depth
    m = (spec.ambient_dim - 2) // 2  # [(n-1)/2] for the sphere S^n, n = dim - 1
    for r in range(1, depth + 1):
        entry = {"r": r}
        if np.all(sample0.flag.rank[r - 1][sample0.mask] == 0):
            # totally geodesic past this order: every later form vanishes
            entry.update(hopf_vanishes=True, N_hopf=None, expected_N_hopf=-(2 * r + 2) * chi_int,
                         hopf_consistent=True, chi_N=0.0, N_a_plus=None, N_a_minus=None,
                         clause="ii", vacuous=True, euler_consistent=True)
            report["orders"].append(entry)
            break

        def hopf_u(s, r=r):
            return np.abs(s.flag.hopf(r)) / s.flag.F ** (r + 1)

        hz = _count_zeros(atlas, hopf_u, order)
        entry["hopf_vanishes"] = hz["vanishes"]
        entry["N_hopf"] = None if hz["vanishes"] else hz["N"]
        entry["expected_N_hopf"] = -(2 * r + 2) * chi_int
        entry["hopf_consistent"] = hz["vanishes"] or hz["N"] == -(2 * r + 2) * chi_int
        try:
            chiN = integrate(atlas, lambda s, r=r: kstar_algebraic(s.flag, r), order) / (2 * np.pi)
        except GridError:
            chiN = float("nan")
        entry["chi_N"] = chiN
        Nap = _count_zeros(atlas, lambda s, r=r: sum(s.flag.semi_axes(r)), order)["N"]
        Nam = _count_zeros(atlas, lambda s, r=r: np.subtract(*s.flag.semi_axes(r)), order)
        Nam = None if Nam["vanishes"] else Nam["N"]
        entry["N_a_plus"], entry["N_a_minus"] = Nap, Nam
        chiN_int = int(round(chiN)) if np.isfinite(chiN) else None
        if hz["vanishes"]:
            entry["clause"] = "ii"
            ok = chiN_int is not None and (r + 1) * chi_int - chiN_int == -Nap
        elif r < m:
            entry["clause"] = "i"
            ok = chiN_int == 0 and (r + 1) * chi_int == -Nap and Nam is not None and (r + 1) * chi_int == -Nam
        else:
            entry["clause"] = "iii"
            ok = (
                chiN_int is not None
                and (r + 1) * chi_int - chiN_int == -Nap
                and Nam is not None
                and (r + 1) * chi_int + chiN_int == -Nam
            )
        entry["vacuous"] = False
        entry["euler_consistent"] = bool(ok)
        report["orders"].append(entry)
    return report


def euler_characteristic(spec: SurfaceSpec, kind: str, n: int = 96, order: int = 4) -> float:
    """(1/2 pi) times the total curvature."""
    return integrate(atlas_for(spec, kind, n), lambda s: s.flag.K, order) / (2 * np.pi)
