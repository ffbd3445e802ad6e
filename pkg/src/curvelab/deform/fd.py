"""High-order finite differences on regular grids.

Interior nodes use central stencils; near a non-periodic edge the same
number of points is shifted inward, so every node gets a value of the same
formal order (with a larger error constant at the edge).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple, m: int) -> np.ndarray:
    """Weights w with sum_k w_k u(x + o_k h) ~ h^m u^(m)(x)."""
    o = np.asarray(offsets, dtype=float)
    V = np.vander(o, increasing=True).T
    rhs = np.zeros(len(o))
    rhs[m] = math.factorial(m)
    return np.linalg.solve(V, rhs)


def half_width(m: int, accuracy: int) -> int:
    return (m + 1) // 2 - 1 + accuracy // 2


def diff(a: np.ndarray, axis: int, h: float, m: int = 1, accuracy: int = 6, periodic: bool = False):
    """m-th derivative along ``axis`` with the given formal order of accuracy."""
    if m == 0:
        return a
    a = np.moveaxis(np.asarray(a), axis, 0)
    n = a.shape[0]
    p = half_width(m, accuracy)
    width = 2 * p + 1
    offs = tuple(range(-p, p + 1))
    w = fd_weights(offs, m)
    if periodic:
        out = sum(wk * np.roll(a, -k, axis=0) for k, wk in zip(offs, w))
    else:
        if n < width:
            raise ValueError(f"need at least {width} nodes for this stencil, have {n}")
        out = np.empty(a.shape, dtype=np.result_type(a, float))
        out[p : n - p] = sum(wk * a[p + k : n - p + k] for k, wk in zip(offs, w))
        for i in list(range(p)) + list(range(n - p, n)):
            s = min(max(i - p, 0), n - width)
            wi = fd_weights(tuple(range(s - i, s - i + width)), m)
            out[i] = np.tensordot(wi, a[s : s + width], axes=(0, 0))
    return np.moveaxis(out / h**m, 0, axis)


def partials(points: np.ndarray, hx: float, hy: float, order: int, periodic=(False, False), accuracy: int = 6):
    """{(i, j): d_x^i d_y^j points} for i + j <= order; points has grid axes first."""
    out = {}
    for i in range(order + 1):
        dx = diff(points, 0, hx, i, accuracy, periodic[0])
        for j in range(order + 1 - i):
            out[(i, j)] = diff(dx, 1, hy, j, accuracy, periodic[1])
    return out
