"""Surfaces given by their values on a grid, plus the checks that apply to them."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..analysis.fields import Grid
from ..dsl import SurfaceSpec
from ..errors import GridError, InvalidInput
from ..jet import eval_jets
from ..io import atomic_write
from .fd import diff, half_width, partials

UNIT_TOL = 1e-8
MARGIN = 3  # nodes at a non-periodic edge excluded from residuals
FORMAT_TAG = "curvelab-surface"
FORMAT_VERSION = "v1"


@dataclass(eq=False)
class SampledSurface:
    """Points g(x_i, y_j) on the unit sphere of R^dim.

    ``points`` has shape (nx, ny, dim); ``derivatives`` (if given) holds
    (g_x, g_y) stacked as (2, nx, ny, dim).
    """

    grid: Grid
    points: np.ndarray
    derivatives: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)
    frames: object = None  # FrameField for integrated surfaces

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 3 or self.points.shape[:2] != self.grid.shape:
            raise InvalidInput(f"points of shape {self.points.shape} do not fit a {self.grid.nx}x{self.grid.ny} grid")
        dev = np.max(np.abs(np.linalg.norm(self.points, axis=-1) - 1.0))
        if not dev <= UNIT_TOL:
            raise InvalidInput(f"points are not on the unit sphere (max deviation {dev:.3g})")

    @property
    def dim(self) -> int:
        return self.points.shape[-1]

    @property
    def periodic(self) -> tuple:
        return (self.grid.periodic_x, self.grid.periodic_y)

    @property
    def mask(self) -> np.ndarray:
        m = np.ones(self.grid.shape, dtype=bool)
        if not self.grid.periodic_x:
            m[:MARGIN] = m[-MARGIN:] = False
        if not self.grid.periodic_y:
            m[:, :MARGIN] = m[:, -MARGIN:] = False
        return m

    def cloud(self) -> np.ndarray:
        return self.points.reshape(-1, self.dim)

    def fd_partials(self, order: int = 2) -> dict:
        """Sixth-order finite-difference partials, ambient axis first (as jets give them)."""
        need = 2 * half_width(order, 6) + 1
        if min(self.grid.shape) < need:
            raise GridError(f"grid too coarse for order-{order} differences (need {need} nodes per direction)")
        P = partials(self.points, self.grid.hx, self.grid.hy, order, self.periodic)
        return {k: np.moveaxis(v, -1, 0) for k, v in P.items()}

    def metric(self):
        """(E, F, G) of the induced metric from finite differences."""
        P = self.fd_partials(1)
        gx, gy = P[(1, 0)], P[(0, 1)]
        return np.sum(gx * gx, 0), np.sum(gx * gy, 0), np.sum(gy * gy, 0)

    def derivative_consistency(self) -> float:
        """Relative deviation of stored derivatives from finite differences."""
        if self.derivatives is None:
            return 0.0
        P = self.fd_partials(1)
        m = self.mask
        scale = np.max(np.linalg.norm(self.derivatives, axis=-1)[:, m])
        dev = 0.0
        for k, key in enumerate([(1, 0), (0, 1)]):
            d = np.moveaxis(P[key], 0, -1) - self.derivatives[k]
            dev = max(dev, float(np.max(np.linalg.norm(d, axis=-1)[m])))
        return dev / scale

    # serialization

    def dumps(self) -> str:
        g = self.grid
        out = io.StringIO()
        out.write(f"{FORMAT_TAG} {FORMAT_VERSION} {g.nx} {g.ny} {self.dim}\n")
        out.write(f"# grid {g.x0!r} {g.x1!r} {g.y0!r} {g.y1!r} {int(g.periodic_x)} {int(g.periodic_y)}\n")
        X, Y = g.mesh()
        for i in range(g.nx):
            for j in range(g.ny):
                vals = " ".join(f"{v:.17g}" for v in (X[i, j], Y[i, j], *self.points[i, j]))
                out.write(vals + "\n")
        return out.getvalue()

    def save(self, path):
        atomic_write(path, self.dumps())


def loads_surface(text: str) -> SampledSurface:
    lines = text.splitlines()
    if not lines:
        raise InvalidInput("empty surface file")
    head = lines[0].split()
    if len(head) != 5 or head[0] != FORMAT_TAG:
        raise InvalidInput(f"not a {FORMAT_TAG} file (header {lines[0]!r})")
    if head[1] != FORMAT_VERSION:
        raise InvalidInput(f"unsupported surface format version {head[1]!r}")
    try:
        nx, ny, dim = (int(v) for v in head[2:])
    except ValueError:
        raise InvalidInput(f"bad header {lines[0]!r}") from None
    gridline = None
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            parts = s[1:].split()
            if parts and parts[0] == "grid":
                gridline = parts[1:]
            continue
        vals = s.split()
        if len(vals) != dim + 2:
            raise InvalidInput(f"line {ln}: expected {dim + 2} numbers, found {len(vals)}")
        try:
            rows.append([float(v) for v in vals])
        except ValueError:
            raise InvalidInput(f"line {ln}: not a number") from None
    if len(rows) != nx * ny:
        raise InvalidInput(f"expected {nx * ny} nodes, found {len(rows)}")
    data = np.asarray(rows).reshape(nx, ny, dim + 2)
    if gridline is not None:
        x0, x1, y0, y1 = (float(v) for v in gridline[:4])
        px, py = (bool(int(v)) for v in gridline[4:6])
        grid = Grid(nx, ny, x0, x1, y0, y1, px, py)
    else:
        grid = Grid(nx, ny, data[0, 0, 0], data[-1, 0, 0], data[0, 0, 1], data[0, -1, 1])
    X, Y = grid.mesh()
    if not (np.allclose(X, data[..., 0], atol=1e-12, rtol=1e-12) and np.allclose(Y, data[..., 1], atol=1e-12, rtol=1e-12)):
        raise InvalidInput("node coordinates do not form the declared regular grid")
    return SampledSurface(grid, data[..., 2:], provenance={"source": "file"})


def load_surface(path) -> SampledSurface:
    with open(path) as fh:
        return loads_surface(fh.read())


def sample_spec(spec: SurfaceSpec, grid: Grid) -> SampledSurface:
    """Exact values and first derivatives of a spec at the grid nodes."""
    X, Y = grid.mesh()
    jet = eval_jets(spec, X, Y, 1)
    if not np.all(jet.valid):
        raise InvalidInput(f"{spec.name} is singular at some grid node")
    pts = np.moveaxis(jet.partial(0, 0), 0, -1)
    der = np.stack([np.moveaxis(jet.partial(1, 0), 0, -1), np.moveaxis(jet.partial(0, 1), 0, -1)])
    return SampledSurface(grid, pts, der, {"source": "spec", "name": spec.name})


# deformation data


@dataclass(frozen=True)
class DeformationSpec:
    """Weights a on the unit sphere and strictly increasing angles in [0, pi)."""

    a: tuple
    theta: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        th = tuple(float(v) for v in self.theta)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "theta", th)
        if len(a) < 1:
            raise InvalidInput("need at least one member (m >= 1)")
        if len(a) != len(th):
            raise InvalidInput(f"{len(a)} weights but {len(th)} angles")
        norm = math.fsum(v * v for v in a)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidInput(f"weights must satisfy sum a_j^2 = 1 (got {norm!r})")
        if not all(0.0 <= t < math.pi for t in th):
            raise InvalidInput("angles must lie in [0, pi)")
        if any(t1 >= t2 for t1, t2 in zip(th, th[1:])):
            raise InvalidInput("angles must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.a)

    @property
    def nondegenerate(self) -> bool:
        """All weights nonzero (the open part of the weight sphere)."""
        return all(v != 0.0 for v in self.a)


def direct_sum(members: list, a) -> SampledSurface:
    """a_1 g_1 + ... + a_m g_m as a map into the product of the ambient spaces."""
    if not members:
        raise InvalidInput("direct sum of no surfaces")
    a = [float(v) for v in a]
    if len(a) != len(members):
        raise InvalidInput(f"{len(members)} members but {len(a)} weights")
    if abs(math.fsum(v * v for v in a) - 1.0) > 1e-12:
        raise InvalidInput("weights must satisfy sum a_j^2 = 1")
    grid = members[0].grid
    if any(s.grid != grid for s in members):
        raise InvalidInput("direct sum members live on different grids")
    pts = np.concatenate([w * s.points for w, s in zip(a, members)], axis=-1)
    pts /= np.linalg.norm(pts, axis=-1, keepdims=True)  # rounding only
    der = None
    if all(s.derivatives is not None for s in members):
        der = np.concatenate([w * s.derivatives for w, s in zip(a, members)], axis=-1)
    prov = {"source": "direct_sum", "weights": a, "members": [s.provenance for s in members]}
    return SampledSurface(grid, pts, der, prov)


# verification


def _require_same_grid(A: SampledSurface, B: SampledSurface):
    if A.grid.shape != B.grid.shape:
        raise InvalidInput(f"grids differ: {A.grid.shape} vs {B.grid.shape}")


def conformality_residual(S: SampledSurface) -> float:
    E, F, G = S.metric()
    m = S.mask
    return float(np.max((np.maximum(np.abs(E - G), np.abs(F)) / E)[m]))


def laplace_beltrami(S: SampledSurface) -> np.ndarray:
    """Delta g in the induced metric (general coordinates), grid axes first."""
    P = S.fd_partials(1)
    gx, gy = P[(1, 0)], P[(0, 1)]
    E, F, G = (np.sum(u * v, 0) for u, v in ((gx, gx), (gx, gy), (gy, gy)))
    det = E * G - F * F
    if np.any(det <= 0):
        raise InvalidInput("induced metric degenerates on the grid")
    root = np.sqrt(det)
    fx = (G * gx - F * gy) / root
    fy = (E * gy - F * gx) / root
    h, per = (S.grid.hx, S.grid.hy), S.periodic
    div = diff(fx, 1, h[0], 1, 6, per[0]) + diff(fy, 2, h[1], 1, 6, per[1])
    return np.moveaxis(div / root, 0, -1)


def minimality_residual(S: SampledSurface) -> float:
    """sup |Delta g + 2g| / max(1, |Delta g|) over unmasked nodes."""
    lap = laplace_beltrami(S)
    num = np.linalg.norm(lap + 2 * S.points, axis=-1)
    den = np.maximum(1.0, np.linalg.norm(lap, axis=-1))
    return float(np.max((num / den)[S.mask]))


def isometry_residual(A: SampledSurface, B: SampledSurface) -> float:
    """sup |F_A - F_B| / sup F_A with F = (E + G)/2 from finite differences.

    Off-diagonal and E - G differences are included, so this measures the
    full first fundamental form rather than the conformal factor alone.
    """
    _require_same_grid(A, B)
    EA, FA, GA = A.metric()
    EB, FB, GB = B.metric()
    m = A.mask & B.mask
    dev = np.maximum.reduce([np.abs(EA - EB), np.abs(FA - FB), np.abs(GA - GB)])
    return float(np.max(dev[m]) / np.max(EA[m]))


def substantial_dimension(S: SampledSurface, rtol: float = 1e-8) -> int:
    """Rank of the node-point matrix: 1 + dimension of the smallest great sphere containing S."""
    C = S.cloud()
    if C.shape[0] < S.dim:
        raise GridError(f"{C.shape[0]} nodes cannot certify rank up to {S.dim}")
    s = np.linalg.svd(C, compute_uv=False)
    return int(np.sum(s > rtol * s[0]))
