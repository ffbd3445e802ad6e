"""Cayley numbers, the 7-dimensional cross product and the almost complex structure on S^6.

Multiplication convention: e_i e_j = e_k (and e_j e_i = -e_k) for the oriented
triples (i, j, k) and their cyclic shifts

    (1,2,3) (1,4,5) (1,7,6) (2,4,6) (2,5,7) (3,4,7) (3,6,5)

with e_i^2 = -1. Which explicit surfaces are pseudoholomorphic depends on
this choice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsl import SurfaceSpec
from .errors import DegenerateDifferential, InvalidInput

FANO_TRIPLES = ((1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5))


def _structure_constants() -> np.ndarray:
    C = np.zeros((8, 8, 8))
    C[0, 0, 0] = 1.0
    for i in range(1, 8):
        C[0, i, i] = C[i, 0, i] = 1.0
        C[i, i, 0] = -1.0
    for a, b, c in FANO_TRIPLES:
        for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
            C[p, q, r] = 1.0
            C[q, p, r] = -1.0
    return C


# STRUCT[i, j, k]: coefficient of e_k in e_i e_j
STRUCT = _structure_constants()
# cross product constants on Im O, indices shifted to 0..6
CROSS = STRUCT[1:, 1:, 1:].copy()


@dataclass(frozen=True, eq=False)
class Octonion:
    re: float
    im: np.ndarray

    @classmethod
    def from_array(cls, a) -> "Octonion":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), a[1:].copy())

    @classmethod
    def unit(cls, k: int) -> "Octonion":
        a = np.zeros(8)
        a[k] = 1.0
        return cls.from_array(a)

    def to_array(self) -> np.ndarray:
        return np.concatenate([[self.re], self.im])

    def conj(self) -> "Octonion":
        return Octonion(self.re, -self.im)

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_array()))

    def __mul__(self, other):
        if isinstance(other, Octonion):
            return cayley_mul(self, other)
        return Octonion(self.re * other, self.im * other)

    def __add__(self, other):
        return Octonion.from_array(self.to_array() + other.to_array())

    def __sub__(self, other):
        return Octonion.from_array(self.to_array() - other.to_array())

    def __repr__(self):
        return f"Octonion({self.to_array()!r})"


def mul8(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of octonions stored as 8-vectors along the first axis (batched)."""
    return np.einsum("ijk,i...,j...->k...", STRUCT, a, b)


def cayley_mul(a: Octonion, b: Octonion) -> Octonion:
    return Octonion.from_array(mul8(a.to_array(), b.to_array()))


def cross7(u, v) -> np.ndarray:
    """u x v = Im(uv) for imaginary octonions; vectors along the first axis."""
    return np.einsum("ijk,i...,j...->k...", CROSS, np.asarray(u, float), np.asarray(v, float))


def associator(a: Octonion, b: Octonion, c: Octonion) -> Octonion:
    return (a * (b * c)) - ((a * b) * c)


@dataclass(frozen=True, eq=False)
class TangentPair:
    """A point p of S^6 in Im O together with a vector tangent at p."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        p, v = np.asarray(self.p, float), np.asarray(self.v, float)
        if p.shape != (7,) or v.shape != (7,):
            raise InvalidInput("tangent pair needs two 7-vectors")
        if abs(np.linalg.norm(p) - 1.0) > 1e-8:
            raise InvalidInput(f"|p| = {np.linalg.norm(p)!r} is not 1")
        if abs(p @ v) > 1e-8 * max(1.0, np.linalg.norm(v)):
            raise InvalidInput(f"<p, v> = {p @ v!r} is not 0")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)


def nk_almost_complex(tp: TangentPair) -> np.ndarray:
    """J_p v = p x v."""
    return cross7(tp.p, tp.v)


def _tangent_frame(fx: np.ndarray, fy: np.ndarray):
    nx = np.linalg.norm(fx, axis=0)
    e1 = fx / nx
    w = fy - np.sum(fy * e1, axis=0) * e1
    nw = np.linalg.norm(w, axis=0)
    return e1, w / nw, nx, nw


def pseudoholomorphy_field(g: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """|e2 - g x e1| for the oriented orthonormal frame (e1, e2) of span(gx, gy).

    Arrays carry the 7 ambient coordinates on the first axis. Degenerate
    points give NaN.
    """
    with np.errstate(all="ignore"):
        e1, e2, nx, nw = _tangent_frame(gx, gy)
        res = np.linalg.norm(e2 - cross7(g, e1), axis=0)
        scale = np.maximum(nx, np.linalg.norm(gy, axis=0))
        return np.where(nw > 1e-10 * scale, res, np.nan)


def pseudoholomorphy_residual(spec: SurfaceSpec, p) -> float:
    """Failure of the differential to be complex linear, scaled by |dg(e1)|.

    With e1 = d/dx normalized and J e1 = e2 the next vector of the oriented
    orthonormal tangent frame, the residual is |dg(J e1) - J_g dg(e1)| / |dg(e1)|,
    which is 0 for a pseudoholomorphic curve and 2 for an antiholomorphic one.
    """
    from .jet import eval_jet

    if spec.ambient_dim != 7:
        raise InvalidInput(f"pseudoholomorphy needs ambient dimension 7, got {spec.ambient_dim}")
    jet = eval_jet(spec, p, 1)
    g, gx, gy = jet.c(0, 0), jet.c(1, 0), jet.c(0, 1)
    nx = np.linalg.norm(gx)
    w = gy - (gy @ gx) / nx**2 * gx
    if nx < 1e-12 or np.linalg.norm(w) < 1e-10 * max(nx, np.linalg.norm(gy)):
        raise DegenerateDifferential(f"{spec.name}: rank < 2 at {tuple(p)}")
    return float(pseudoholomorphy_field(g, gx, gy))
