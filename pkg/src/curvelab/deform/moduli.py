"""Empirical probe of which associated-family sums close up on a torus.

For every angle tuple on a grid of the ordered simplex 0 <= theta_1 < ... <
theta_m < pi the direct sum G = sum a_j g_{theta_j} is built over two
fundamental domains in each lattice direction, and G(p + P) is compared with
G(p) for each period P: once directly ("unaligned": does G descend to the
torus?) and once after the best rigid motion ("aligned": is the shifted map
congruent to G?).
"""
from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..analysis.fields import Grid
from ..dsl import SurfaceSpec
from ..errors import GridError, InvalidInput
from .family import associated_family, source_connection

MIN_RESOLUTION = 8


@dataclass
class ModuliReport:
    name: str
    m: int
    a: tuple
    thetas: np.ndarray  # the angle samples k * pi / R
    aligned: np.ndarray  # (R,)*m landscape, NaN off the ordered simplex
    unaligned: np.ndarray
    level: float
    components: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "m": self.m,
            "a": list(self.a),
            "resolution": len(self.thetas),
            "level": self.level,
            "components": self.components,
            "diagnostics": self.diagnostics,
        }

    def to_csv(self) -> str:
        out = io.StringIO()
        cols = [f"theta{j + 1}" for j in range(self.m)]
        out.write(",".join(cols + ["aligned", "unaligned"]) + "\n")
        for idx in _ordered(len(self.thetas), self.m):
            th = ",".join(f"{self.thetas[k]:.17g}" for k in idx)
            out.write(f"{th},{self.aligned[idx]:.17g},{self.unaligned[idx]:.17g}\n")
        return out.getvalue()


def _ordered(R: int, m: int):
    return itertools.combinations(range(R), m)


def _components(land: np.ndarray, thetas, level: float) -> list:
    low = np.isfinite(land) & (land < level)
    lab, n = ndimage.label(low)
    comps = []
    for c in range(1, n + 1):
        idx = np.argwhere(lab == c)
        vals = land[lab == c]
        best = tuple(idx[np.argmin(vals)])
        comps.append({
            "size": int(len(idx)),
            "min_residual": float(vals.min()),
            "argmin_theta": [float(thetas[k]) for k in best],
            "theta_indices": idx.tolist(),
        })
    return comps


def moduli_probe(spec: SurfaceSpec, m: int, a, resolution: int = 16, nodes: int = 24,
                 level: float = 1e-3, substeps: int = 3) -> ModuliReport:
    """Residual landscape over the angle simplex (see module docstring).

    ``nodes`` grid points per period are used for the members; ``level`` is
    the sublevel threshold for the reported connected components.
    """
    if not spec.periodic:
        raise InvalidInput(f"{spec.name} has no periods; the probe needs a closed domain")
    if resolution < MIN_RESOLUTION:
        raise GridError(f"angle resolution {resolution} too coarse (need >= {MIN_RESOLUTION})")
    a = tuple(float(v) for v in a)
    if m < 1 or len(a) != m:
        raise InvalidInput(f"need m >= 1 weights, got {len(a)} for m = {m}")
    if abs(math.fsum(v * v for v in a) - 1.0) > 1e-12:
        raise InvalidInput("weights must satisfy sum a_j^2 = 1")
    if resolution < m:
        raise GridError("fewer angle samples than members")

    (x0, _), (y0, _) = spec.domain
    Px, Py = spec.periods
    n = nodes
    grid = Grid(2 * n + 1, 2 * n + 1, x0, x0 + 2 * Px, y0, y0 + 2 * Py)
    src = source_connection(spec, grid, substeps)
    thetas = np.arange(resolution) * np.pi / resolution
    base = (slice(0, n + 1), slice(0, n + 1))
    shifts = [(slice(n, 2 * n + 1), slice(0, n + 1)), (slice(0, n + 1), slice(n, 2 * n + 1))]
    N = (n + 1) ** 2

    A, B = [], [[] for _ in shifts]
    drift = path = 0.0
    for th in thetas:
        g = associated_family(spec, th, grid, src, check=False)
        drift = max(drift, g.frames.drift)
        path = max(path, g.frames.path_difference)
        A.append(g.points[base].reshape(N, -1))
        for s, sh in enumerate(shifts):
            B[s].append(g.points[sh].reshape(N, -1))
    A = np.stack(A)  # (R, N, D)
    D = A.shape[-1]

    shape = (resolution,) * m
    aligned = np.full(shape, np.nan)
    unaligned = np.full(shape, np.nan)
    for s in range(len(shifts)):
        Bs = np.stack(B[s])
        ms = np.mean(np.sum((Bs - A) ** 2, axis=-1), axis=-1)  # per member
        C = np.einsum("kni,lnj->klij", Bs, A)  # cross-covariances B_k^T A_l
        for idx in _ordered(resolution, m):
            M = np.empty((m * D, m * D))
            for p, kp in enumerate(idx):
                for q, kq in enumerate(idx):
                    M[p * D:(p + 1) * D, q * D:(q + 1) * D] = a[p] * a[q] * C[kp, kq]
            sig = np.linalg.svd(M, compute_uv=False)
            al = math.sqrt(max(0.0, 2.0 - 2.0 * float(np.sum(sig)) / N))
            un = math.sqrt(sum(a[p] ** 2 * ms[k] for p, k in enumerate(idx)))
            aligned[idx] = al if s == 0 else max(aligned[idx], al)
            unaligned[idx] = un if s == 0 else max(unaligned[idx], un)

    comps = {
        "unaligned": _components(unaligned, thetas, level),
        "aligned": _components(aligned, thetas, level),
    }
    diag = {"drift": drift, "path_difference": path, "nodes_per_period": n, "substeps": substeps}
    return ModuliReport(spec.name, m, a, thetas, aligned, unaligned, level, comps, diag)
