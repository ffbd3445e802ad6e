"""Rigid alignment of sampled surfaces (orthogonal Procrustes)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from ..errors import InvalidInput
from .sampled import SampledSurface

CONGRUENT_REL = 1e-4  # verdict threshold relative to the cloud diameter
DIAMETER_SAMPLES = 3000


@dataclass
class CongruenceReport:
    Q: np.ndarray  # orthogonal map with Q a_i ~ b_i
    residual: float  # RMS distance after alignment
    diameter: float
    unique: bool  # cross-covariance rank >= dim - 1
    rank: int
    congruent: bool

    def to_json(self) -> dict:
        return {
            "residual": self.residual,
            "diameter": self.diameter,
            "threshold": CONGRUENT_REL * self.diameter,
            "verdict": "congruent" if self.congruent else "not congruent",
            "unique": self.unique,
            "cross_covariance_rank": self.rank,
            "Q": self.Q.tolist(),
        }


def _diameter(C: np.ndarray) -> float:
    step = max(1, len(C) // DIAMETER_SAMPLES)
    return float(np.max(pdist(C[::step]))) if len(C[::step]) > 1 else 0.0


def procrustes(A: np.ndarray, B: np.ndarray):
    """Q in O(d) minimising sum |Q a_i - b_i|^2, with the singular values of B^T A."""
    M = B.T @ A
    U, s, Vt = np.linalg.svd(M)
    return U @ Vt, s


def congruence(A: SampledSurface, B: SampledSurface, match_derivatives: bool = False, pad: bool = False) -> CongruenceReport:
    """Best orthogonal map taking A's nodes to B's nodes, node by node.

    With ``match_derivatives`` the clouds are augmented by first-derivative
    vectors (from stored data or finite differences), which pins down Q on
    directions the points alone do not see. With ``pad`` the lower
    dimensional surface is put in the larger space by appending zeros.
    """
    if A.grid.shape != B.grid.shape:
        raise InvalidInput(f"grids differ: {A.grid.shape} vs {B.grid.shape}")
    a, b = A.cloud(), B.cloud()
    if a.shape[1] != b.shape[1]:
        if not pad:
            raise InvalidInput(f"ambient dimensions differ: {a.shape[1]} vs {b.shape[1]}")
        d = max(a.shape[1], b.shape[1])
        a = np.pad(a, ((0, 0), (0, d - a.shape[1])))
        b = np.pad(b, ((0, 0), (0, d - b.shape[1])))
    d = a.shape[1]
    if match_derivatives:
        extra_a, extra_b = _derivative_cloud(A, d), _derivative_cloud(B, d)
        a, b = np.vstack([a, extra_a]), np.vstack([b, extra_b])
    Q, s = procrustes(a, b)
    n = len(A.cloud())
    res = float(np.sqrt(np.mean(np.sum((a[:n] @ Q.T - b[:n]) ** 2, axis=1))))
    rank = int(np.sum(s > 1e-10 * s[0])) if s[0] > 0 else 0
    diam = _diameter(b[:n])
    return CongruenceReport(Q, res, diam, rank >= d - 1, rank, res < CONGRUENT_REL * diam)


def _derivative_cloud(S: SampledSurface, d: int) -> np.ndarray:
    if S.derivatives is not None:
        D = S.derivatives.reshape(-1, S.dim)
    else:
        P = S.fd_partials(1)
        D = np.concatenate([np.moveaxis(P[(1, 0)], 0, -1).reshape(-1, S.dim),
                            np.moveaxis(P[(0, 1)], 0, -1).reshape(-1, S.dim)])
    return np.pad(D, ((0, 0), (0, d - S.dim)))
