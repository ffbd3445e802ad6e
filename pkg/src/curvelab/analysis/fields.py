"""Rectangular grids and invariant fields sampled on them."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..dsl import SurfaceSpec
from ..errors import GridError, InvalidInput, OrderUnavailable
from ..invariants import CONFORMAL_TOL, FlagField, curvature_from_jet, flag_from_partials, partials_from_jet
from ..jet import DEFAULT_ORDER, eval_jets
from ..octonion import pseudoholomorphy_field


@dataclass(frozen=True)
class Grid:
    """nx x ny nodes on [x0, x1] x [y0, y1].

    Along a periodic axis the right endpoint is omitted (it equals the left
    one), so the spacing is L / n instead of L / (n - 1).
    """

    nx: int
    ny: int
    x0: float
    x1: float
    y0: float
    y1: float
    periodic_x: bool = False
    periodic_y: bool = False

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise GridError("grid needs at least 2 nodes per direction")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GridError("empty grid rectangle")

    @classmethod
    def for_spec(cls, spec: SurfaceSpec, nx: int, ny: int | None = None, periodic: bool | None = None):
        ny = nx if ny is None else ny
        (x0, x1), (y0, y1) = spec.domain
        per = spec.periodic if periodic is None else periodic
        if per:
            Lx, Ly = spec.periods
            return cls(nx, ny, x0, x0 + Lx, y0, y0 + Ly, True, True)
        return cls(nx, ny, x0, x1, y0, y1)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx if self.periodic_x else self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny if self.periodic_y else self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def refined(self, factor: int = 2) -> "Grid":
        """Same rectangle with the spacing divided by ``factor``."""
        nx = self.nx * factor if self.periodic_x else (self.nx - 1) * factor + 1
        ny = self.ny * factor if self.periodic_y else (self.ny - 1) * factor + 1
        return Grid(nx, ny, self.x0, self.x1, self.y0, self.y1, self.periodic_x, self.periodic_y)

    def to_json(self) -> dict:
        return {
            "nx": self.nx, "ny": self.ny, "x": [self.x0, self.x1], "y": [self.y0, self.y1],
            "periodic": [self.periodic_x, self.periodic_y], "hx": self.hx, "hy": self.hy,
        }


@dataclass(frozen=True, eq=False)
class InvariantField:
    grid: Grid
    values: np.ndarray
    mask: np.ndarray  # True where the value is valid
    name: str = ""

    def __post_init__(self):
        if self.values.shape != self.grid.shape or self.mask.shape != self.grid.shape:
            raise GridError("field shape does not match its grid")

    def valid_values(self) -> np.ndarray:
        return self.values[self.mask]

    def sup_norm(self) -> float:
        v = self.valid_values()
        return float(np.max(np.abs(v))) if v.size else 0.0

    def l2_norm(self) -> float:
        """Root mean square over valid nodes."""
        v = self.valid_values()
        return float(np.sqrt(np.mean(np.abs(v) ** 2))) if v.size else 0.0

    @property
    def masked_fraction(self) -> float:
        return float(1.0 - self.mask.mean())

    def map(self, fn, name=None) -> "InvariantField":
        with np.errstate(all="ignore"):
            vals = fn(self.values)
        mask = self.mask & np.isfinite(vals)
        return InvariantField(self.grid, np.where(mask, vals, 0.0 * vals), mask, name or self.name)

    def combine(self, other: "InvariantField", fn, name=None) -> "InvariantField":
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        with np.errstate(all="ignore"):
            vals = fn(self.values, other.values)
        mask = self.mask & other.mask & np.isfinite(vals)
        return InvariantField(self.grid, np.where(mask, vals, 0.0 * vals), mask, name or self.name)

    def to_csv(self) -> str:
        X, Y = self.grid.mesh()
        lines = ["x,y,value" if not np.iscomplexobj(self.values) else "x,y,re,im"]
        for i in range(self.grid.nx):
            for j in range(self.grid.ny):
                if not self.mask[i, j]:
                    continue
                v = self.values[i, j]
                if np.iscomplexobj(self.values):
                    lines.append(f"{X[i, j]:.17g},{Y[i, j]:.17g},{v.real:.17g},{v.imag:.17g}")
                else:
                    lines.append(f"{X[i, j]:.17g},{Y[i, j]:.17g},{v:.17g}")
        return "\n".join(lines) + "\n"


class SurfaceSample:
    """Jets and osculating flag of a spec at every node of a grid."""

    def __init__(self, spec: SurfaceSpec, grid: Grid, order: int = DEFAULT_ORDER, rotation=0.0):
        self.spec = spec
        self.grid = grid
        self.order = order
        X, Y = grid.mesh()
        self.jet = eval_jets(spec, X, Y, order)
        self.valid = self.jet.valid
        self.flag: FlagField = flag_from_partials(partials_from_jet(self.jet), rotation=rotation)
        self.flag.K = curvature_from_jet(self.jet) if order >= 3 else None
        self.mask = self._regular_mask()

    def _regular_mask(self) -> np.ndarray:
        ff = self.flag
        ok = self.valid & ff.regular & (ff.conformality_residual <= CONFORMAL_TOL)
        # nodes whose rank signature differs from the typical one are singular
        # points of the flag; they are excluded rather than guessed
        sig = np.stack(ff.rank, axis=-1)
        keys = [tuple(s) for s in sig[ok]]
        if keys:
            modal = Counter(keys).most_common(1)[0][0]
            ok &= np.all(sig == np.asarray(modal), axis=-1)
        return ok

    @property
    def depth(self) -> int:
        return self.flag.depth

    def field(self, values, name, extra_mask=None) -> InvariantField:
        vals = np.asarray(values)
        mask = self.mask & np.isfinite(vals)
        if extra_mask is not None:
            mask &= extra_mask
        return InvariantField(self.grid, np.where(mask, vals, 0.0 * vals), mask, name)


@lru_cache(maxsize=16)
def surface_sample(spec: SurfaceSpec, grid: Grid, order: int = DEFAULT_ORDER) -> SurfaceSample:
    return SurfaceSample(spec, grid, order)


_ID_RE = re.compile(r"^([A-Za-z_]+?)(?:_(\d+))?$")

SCALAR_IDS = ("F", "K", "conformality", "minimality", "pseudoholomorphy", "tau", "u1", "u2")
ORDER_IDS = (
    "kappa", "mu", "Kperp", "a_plus", "a_minus", "hopf", "alpha_norm", "eccentricity",
    "circularity", "Kstar", "H_a", "H_b", "rank",
)


def parse_invariant_id(inv: str):
    m = _ID_RE.match(inv)
    if not m:
        raise InvalidInput(f"bad invariant id {inv!r}")
    base, r = m.group(1), m.group(2)
    if base in SCALAR_IDS and r is None:
        return base, None
    if base in ORDER_IDS and r is not None:
        return base, int(r)
    raise InvalidInput(
        f"unknown invariant id {inv!r}; expected one of {SCALAR_IDS} or <name>_<r> with name in {ORDER_IDS}"
    )


def kstar_algebraic(ff: FlagField, r: int) -> np.ndarray:
    """Intrinsic curvature of N_r from the normal curvatures and fundamental-form norms.

    Rank-1 (line) bundles are flat, so their value is 0.
    """
    ff.check_order(r)
    with np.errstate(all="ignore"):
        kp = ff.Kperp(r)
        nxt = ff.alpha_norm2(r + 1) if r + 1 <= ff.depth else np.zeros_like(kp)
        if r == 1:
            val = kp - nxt / (2 * kp)
        else:
            kp_prev = ff.Kperp(r - 1)
            val = kp / kp_prev**2 * ff.alpha_norm2(r - 1) / 2 ** (r - 2) - nxt / (2**r * kp)
    return np.where(ff.rank[r - 1] == 2, val, 0.0)


def invariant_values(sample: SurfaceSample, inv: str) -> np.ndarray:
    base, r = parse_invariant_id(inv)
    ff = sample.flag
    if r is not None and not 1 <= r <= ff.depth:
        raise OrderUnavailable(f"{inv}: flag depth of {sample.spec.name} is {ff.depth}")
    if base == "F":
        return ff.F
    if base == "K":
        if ff.K is None:
            raise OrderUnavailable("K needs jet order >= 3")
        return ff.K
    if base == "conformality":
        return ff.conformality_residual
    if base == "minimality":
        return ff.minimality
    if base == "tau":
        return ff.tau.astype(float)
    if base in ("u1", "u2"):
        # absolute-value-type quantities whose subharmonicity drives the rigidity arguments
        need = 1 if base == "u1" else 2
        if ff.depth < need or ff.K is None:
            raise OrderUnavailable(f"{inv} needs flag depth {need} and jet order >= 3")
        with np.errstate(all="ignore"):
            if base == "u1":
                return (ff.alpha_norm2(1) ** 2 / 4 - ff.Kperp(1) ** 2) ** 3 / (1 - ff.K) ** 4
            return (ff.alpha_norm2(2) ** 2 - 16 * ff.Kperp(2) ** 2) / (1 - ff.K) ** 2
    if base == "pseudoholomorphy":
        if sample.spec.ambient_dim != 7:
            raise InvalidInput("pseudoholomorphy needs ambient dimension 7")
        j = sample.jet
        return pseudoholomorphy_field(j.c(0, 0), j.c(1, 0), j.c(0, 1))
    if base in ("kappa", "mu", "a_plus", "a_minus", "eccentricity"):
        kappa, mu = ff.semi_axes(r)
        with np.errstate(all="ignore"):
            return {
                "kappa": kappa,
                "mu": mu,
                "a_plus": kappa + mu,
                "a_minus": kappa - mu,
                "eccentricity": np.sqrt(np.maximum(kappa**2 - mu**2, 0)) / kappa,
            }[base]
    if base == "Kperp":
        return ff.Kperp(r)
    if base == "hopf":
        return ff.hopf(r)
    if base == "alpha_norm":
        return ff.alpha_norm2(r)
    if base == "circularity":
        with np.errstate(all="ignore"):
            return 2**r * ff.Kperp(r) / ff.alpha_norm2(r)
    if base == "Kstar":
        return kstar_algebraic(ff, r)
    if base == "H_a":
        return ff.Ha[r - 1]
    if base == "H_b":
        return ff.Hb[r - 1]
    if base == "rank":
        return ff.rank[r - 1].astype(float)
    raise InvalidInput(inv)


def sample_field(spec: SurfaceSpec, grid: Grid, invariant_id: str, order: int = DEFAULT_ORDER) -> InvariantField:
    """Field of one invariant; singular or irregular nodes are masked, not fatal.

    ``alpha_norm_r`` is |alpha_{r+1}|^2, the squared length of the fundamental
    form whose curvature ellipse has order r.
    """
    parse_invariant_id(invariant_id)
    sample = surface_sample(spec, grid, order)
    return sample.field(invariant_values(sample, invariant_id), invariant_id)
