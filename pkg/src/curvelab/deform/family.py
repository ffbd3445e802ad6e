"""Associated families by frame integration, and polar surfaces.

A full frame E = [g, e_1, e_2, nu_1, ..., nu_q] (columns, e_k = g_k / sqrt(F))
of a minimal surface obeys dE = E (Om_x dx + Om_y dy) with skew Om. The
tangent-normal block of Om carries the second fundamental form; for the
member g_theta it is replaced by

    B_x -> cos(theta) B_x + sin(theta) B_y,   B_y -> -sin(theta) B_x + cos(theta) B_y,

i.e. alpha(J_theta X, Y), while the position, tangent and normal-normal
blocks (the intrinsic data and the normal connection) are kept. The
normal frames of source and target then correspond through a parallel
bundle isometry T_theta by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..analysis.fields import Grid
from ..dsl import SurfaceSpec
from ..errors import CompatibilityError, ConformalityError, DegenerateDifferential, InvalidInput, OrderUnavailable
from ..invariants import CONFORMAL_TOL, flag_from_partials, partials_from_jet
from ..jet import eval_jets
from .fd import diff
from .sampled import SampledSurface

MINIMAL_TOL = 1e-6
COMPAT_TOL = 1e-5  # row-first vs column-first frames
SUBSTEPS = 3  # RK4 steps per grid spacing


def polar(M: np.ndarray) -> np.ndarray:
    """Nearest matrix with orthonormal columns (batched over leading axes)."""
    U, _, Vt = np.linalg.svd(M, full_matrices=False)
    return U @ Vt


def _propagate(P_N: np.ndarray, start: np.ndarray, i0: int, j0: int) -> np.ndarray:
    """Smooth normal frames: polar projection from node to node, centre row first."""
    nx, ny = P_N.shape[:2]
    out = np.empty(P_N.shape[:2] + start.shape)
    out[i0, j0] = start
    for i in range(i0 + 1, nx):
        out[i, j0] = polar(P_N[i, j0] @ out[i - 1, j0])
    for i in range(i0 - 1, -1, -1):
        out[i, j0] = polar(P_N[i, j0] @ out[i + 1, j0])
    for j in range(j0 + 1, ny):
        out[:, j] = polar(P_N[:, j] @ out[:, j - 1])
    for j in range(j0 - 1, -1, -1):
        out[:, j] = polar(P_N[:, j] @ out[:, j + 1])
    return out


@dataclass
class SourceConnection:
    """Frames and connection matrices of a minimal surface on a refined grid.

    Arrays live on the grid refined by 2 * substeps, so RK4 steps of size
    h / substeps find their midpoint data at odd fine indices.
    """

    spec: SurfaceSpec
    grid: Grid
    fine: Grid
    E: np.ndarray  # (NX, NY, D, D)
    lam: np.ndarray
    Om_x: np.ndarray
    Om_y: np.ndarray
    flatness: float  # relative residual of d Om + Om ^ Om on the source
    substeps: int = SUBSTEPS

    @property
    def dim(self) -> int:
        return self.E.shape[-1]

    def rotated(self, theta: float):
        c, s = np.cos(theta), np.sin(theta)
        Ox, Oy = self.Om_x.copy(), self.Om_y.copy()
        Bx, By = self.Om_x[..., 3:, 1:3], self.Om_y[..., 3:, 1:3]
        Ox[..., 3:, 1:3] = c * Bx + s * By
        Oy[..., 3:, 1:3] = -s * Bx + c * By
        Ox[..., 1:3, 3:] = -np.swapaxes(Ox[..., 3:, 1:3], -1, -2)
        Oy[..., 1:3, 3:] = -np.swapaxes(Oy[..., 3:, 1:3], -1, -2)
        return Ox, Oy


def source_connection(spec: SurfaceSpec, grid: Grid, substeps: int = SUBSTEPS) -> SourceConnection:
    if grid.periodic_x or grid.periodic_y:
        raise InvalidInput("frame integration needs a simply connected patch; use a non-periodic grid")
    fine = grid.refined(2 * substeps)
    X, Y = fine.mesh()
    jet = eval_jets(spec, X, Y, 2)
    if not np.all(jet.valid):
        raise DegenerateDifferential(f"{spec.name} is singular inside the patch")
    P = {k: np.moveaxis(v, 0, -1) for k, v in partials_from_jet(jet).items()}
    g, gx, gy = P[(0, 0)], P[(1, 0)], P[(0, 1)]
    gxx, gxy, gyy = P[(2, 0)], P[(1, 1)], P[(0, 2)]

    def dot(a, b):
        return np.sum(a * b, axis=-1)

    F = dot(gx, gx)
    conf = np.maximum(np.abs(F - dot(gy, gy)), np.abs(dot(gx, gy))) / F
    if np.max(conf) > CONFORMAL_TOL:
        raise ConformalityError(f"{spec.name}: coordinates are not isothermal on the patch")
    lap = (gxx + gyy) / F[..., None]
    if np.max(np.linalg.norm(lap + 2 * g, axis=-1)) > MINIMAL_TOL:
        raise InvalidInput(f"{spec.name} is not minimal; the associated family is undefined")
    lam = np.sqrt(F)
    e1, e2 = gx / lam[..., None], gy / lam[..., None]
    D = g.shape[-1]
    q = D - 3
    if q < 1:
        raise OrderUnavailable("surface has no normal directions in its sphere")
    T = np.stack([g, e1, e2], axis=-1)
    P_N = np.eye(D) - T @ np.swapaxes(T, -1, -2)
    i0, j0 = fine.nx // 2, fine.ny // 2
    _, V = np.linalg.eigh(P_N[i0, j0])
    nu = _propagate(P_N, V[:, -q:], i0, j0)
    E = np.concatenate([T, nu], axis=-1)

    hx, hy = fine.hx, fine.hy
    Ex = diff(E, 0, hx)
    Ey = diff(E, 1, hy)
    Ox = np.swapaxes(E, -1, -2) @ Ex
    Oy = np.swapaxes(E, -1, -2) @ Ey
    Ox = 0.5 * (Ox - np.swapaxes(Ox, -1, -2))
    Oy = 0.5 * (Oy - np.swapaxes(Oy, -1, -2))
    # everything but the normal-normal block is known exactly from the jets
    for O in (Ox, Oy):
        O[..., :3, :] = 0.0
        O[..., :, :3] = 0.0
    Ox[..., 1, 0], Oy[..., 2, 0] = lam, lam
    w12x = dot(gxx, gy) / F
    w12y = dot(gxy, gy) / F
    Ox[..., 2, 1], Oy[..., 2, 1] = w12x, w12y
    # tangent-normal block: <d_x e_j, nu> = <g_{x x_j}, nu> / lambda
    def proj(v):
        return np.einsum("...dk,...d->...k", nu, v)

    Bx = np.stack([proj(gxx), proj(gxy)], axis=-1) / lam[..., None, None]
    By = np.stack([proj(gxy), proj(gyy)], axis=-1) / lam[..., None, None]
    Ox[..., 3:, 1:3], Oy[..., 3:, 1:3] = Bx, By
    for O in (Ox, Oy):
        O[..., 0, 1], O[..., 0, 2], O[..., 1, 2] = -O[..., 1, 0], -O[..., 2, 0], -O[..., 2, 1]
        O[..., 1:3, 3:] = -np.swapaxes(O[..., 3:, 1:3], -1, -2)
    curv = diff(Ox, 1, hy) - diff(Oy, 0, hx) + Oy @ Ox - Ox @ Oy
    scale = max(np.max(np.abs(Ox)), np.max(np.abs(Oy)))
    inner = (slice(4, -4), slice(4, -4))
    flat = float(np.max(np.abs(curv[inner])) / scale**2)
    return SourceConnection(spec, grid, fine, E, lam, Ox, Oy, flat, substeps)


def _rk4_line(E0, Om, h, sign, sub):
    """Integrate dE/ds = E Om along one axis of the fine arrays.

    ``Om`` holds the connection on the fine line that starts at E0's node
    and moves in direction ``sign``; each grid step of size h is taken as
    ``sub`` RK4 steps. Returns coarse-node frames and the max drift from
    orthonormality before re-projection.
    """
    nsteps = (Om.shape[0] - 1) // 2
    out = np.empty((nsteps // sub + 1,) + E0.shape)
    out[0] = E0
    drift = 0.0
    E = E0
    s = sign * h / sub
    eye = np.eye(E0.shape[-1])
    for k in range(nsteps):
        O0, Om_, O1 = Om[2 * k], Om[2 * k + 1], Om[2 * k + 2]
        k1 = E @ O0
        k2 = (E + 0.5 * s * k1) @ Om_
        k3 = (E + 0.5 * s * k2) @ Om_
        k4 = (E + s * k3) @ O1
        E = E + s / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = max(drift, float(np.max(np.abs(np.swapaxes(E, -1, -2) @ E - eye))))
        E = polar(E)
        if (k + 1) % sub == 0:
            out[(k + 1) // sub] = E
    return out, drift


def _integrate(E0, Oa, Ob, ha, hb, ia, ib, sub):
    """Frames on the coarse grid: first along axis a through (ia, ib), then along b.

    Oa, Ob are fine arrays with the a axis first; ia, ib are coarse indices.
    """
    f = 2 * sub
    Na, Nb = Oa.shape[:2]
    na, nb = (Na - 1) // f + 1, (Nb - 1) // f + 1
    out = np.empty((na, nb) + E0.shape)
    fa, fb = f * ia, f * ib
    fwd, d1 = _rk4_line(E0, Oa[fa:, fb], ha, 1, sub)
    bwd, d2 = _rk4_line(E0, Oa[fa::-1, fb], ha, -1, sub)
    out[ia:, ib] = fwd
    out[: ia + 1, ib] = bwd[::-1]
    # then every coarse a-node at once along b
    cols = Ob[::f]
    up, d3 = _rk4_line(out[:, ib], np.moveaxis(cols[:, fb:], 1, 0), hb, 1, sub)
    dn, d4 = _rk4_line(out[:, ib], np.moveaxis(cols[:, fb::-1], 1, 0), hb, -1, sub)
    out[:, ib:] = np.moveaxis(up, 0, 1)
    out[:, : ib + 1] = np.moveaxis(dn[::-1], 0, 1)
    return out, max(d1, d2, d3, d4)


@dataclass
class FrameField:
    """Source and integrated frames of one associated-family member."""

    theta: float
    source: np.ndarray  # (nx, ny, D, D) coarse-node source frames
    target: np.ndarray
    drift: float
    path_difference: float  # rows-first vs columns-first, sup over nodes
    corner_difference: float
    flatness: float

    def T_theta(self) -> np.ndarray:
        """Normal-bundle identification nu_k -> nu_k^theta as ambient maps (per node)."""
        Ns, Nt = self.source[..., 3:], self.target[..., 3:]
        return Nt @ np.swapaxes(Ns, -1, -2)

    def orthonormality(self) -> float:
        eye = np.eye(self.target.shape[-1])
        return float(np.max(np.abs(np.swapaxes(self.target, -1, -2) @ self.target - eye)))


def associated_family(spec: SurfaceSpec, theta: float, grid: Grid, source: SourceConnection | None = None,
                      check: bool = True) -> SampledSurface:
    """The member g_theta on a grid patch, base frame fixed at the centre node."""
    src = source if source is not None else source_connection(spec, grid)
    Ox, Oy = src.rotated(theta)
    ic, jc = grid.nx // 2, grid.ny // 2
    sub = src.substeps
    f = 2 * sub
    E0 = src.E[f * ic, f * jc]
    rows, drift1 = _integrate(E0, Ox, Oy, grid.hx, grid.hy, ic, jc, sub)
    cols_t, drift2 = _integrate(
        E0, np.swapaxes(Oy, 0, 1), np.swapaxes(Ox, 0, 1), grid.hy, grid.hx, jc, ic, sub
    )
    cols = np.swapaxes(cols_t, 0, 1)
    gap = np.max(np.abs(rows - cols), axis=(-1, -2))
    corner = float(max(gap[0, 0], gap[0, -1], gap[-1, 0], gap[-1, -1]))
    if check and float(np.max(gap)) > COMPAT_TOL:
        raise CompatibilityError(
            f"frame integration is path dependent (max gap {np.max(gap):.3g}, source flatness "
            f"{src.flatness:.3g}); the Gauss-Codazzi-Ricci data of the source look inconsistent"
        )
    E = 0.5 * (rows + cols)
    E = polar(E)
    frames = FrameField(theta, src.E[::f, ::f], E, max(drift1, drift2), float(np.max(gap)), corner, src.flatness)
    lam = src.lam[::f, ::f][..., None]
    der = np.stack([lam * E[..., :, 1], lam * E[..., :, 2]])
    prov = {"source": "associated_family", "name": spec.name, "theta": float(theta),
            "drift": frames.drift, "path_difference": frames.path_difference}
    return SampledSurface(grid, E[..., :, 0], der, prov, frames)


def h_values(S: SampledSurface, r: int = 1) -> tuple:
    """(H_a, H_b) of order r from finite-difference partials of a sampled surface."""
    ff = flag_from_partials(S.fd_partials(r + 1), depth=r)
    return ff.Ha[r - 1], ff.Hb[r - 1]


def polar_surface(src, grid: Grid | None = None, order: int = 3) -> SampledSurface:
    """Unit field spanning N_2, sign fixed by continuity from the centre node.

    ``src`` is a SurfaceSpec (exact jets on ``grid``) or a SampledSurface
    (finite differences on its own grid).
    """
    if isinstance(src, SurfaceSpec):
        if grid is None:
            raise InvalidInput("polar_surface of a spec needs a grid")
        X, Y = grid.mesh()
        jet = eval_jets(src, X, Y, order)
        if not np.all(jet.valid):
            raise DegenerateDifferential(f"{src.name} is singular on the grid")
        P = partials_from_jet(jet)
        name = src.name
    else:
        grid = src.grid
        P = src.fd_partials(order)
        name = src.provenance.get("name", "sampled")
    ff = flag_from_partials(P, depth=2)
    if ff.depth < 2:
        raise OrderUnavailable(f"{name}: N_2 has rank 0 (no second normal space)")
    rk = ff.rank[1]
    if not np.all(rk == 1):
        bad = "rank 0" if np.all(rk == 0) else "rank not identically 1"
        raise OrderUnavailable(f"{name}: N_2 has {bad} on the grid")
    xi = np.moveaxis(ff.normals[1][:, 0], 0, -1).copy()  # (nx, ny, D)
    ic, jc = grid.nx // 2, grid.ny // 2
    for i in list(range(ic + 1, grid.nx)) + list(range(ic - 1, -1, -1)):
        ref = xi[i - 1, jc] if i > ic else xi[i + 1, jc]
        if np.dot(xi[i, jc], ref) < 0:
            xi[i, jc] *= -1
    for j in list(range(jc + 1, grid.ny)) + list(range(jc - 1, -1, -1)):
        ref = xi[:, j - 1] if j > jc else xi[:, j + 1]
        flip = np.sum(xi[:, j] * ref, axis=-1) < 0
        xi[flip, j] *= -1
    # every neighbour pair must now agree, including across periodic seams
    dx = np.sum(xi[1:] * xi[:-1], axis=-1)
    dy = np.sum(xi[:, 1:] * xi[:, :-1], axis=-1)
    worst = min(dx.min(), dy.min())
    if grid.periodic_x:
        worst = min(worst, np.sum(xi[0] * xi[-1], axis=-1).min())
    if grid.periodic_y:
        worst = min(worst, np.sum(xi[:, 0] * xi[:, -1], axis=-1).min())
    if worst <= 0:
        raise CompatibilityError(f"{name}: sign continuation of N_2 obstructed (the line bundle is not trivial on the patch)")
    xi /= np.linalg.norm(xi, axis=-1, keepdims=True)
    return SampledSurface(grid, xi, None, {"source": "polar_surface", "name": f"{name}*"})
