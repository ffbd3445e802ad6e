"""Pointwise invariants of conformal minimal immersions into spheres.

The osculating flag is built from the holomorphic derivatives
D_k = d^k f with d = (d_x - i d_y)/2. At order r the complex vector A_r is
D_{r+1} with its components along f, the tangent plane and N_1..N_{r-1}
removed; N_r is spanned by Re A_r and Im A_r. In terms of A_r, with
lambda = sqrt(F) and t the angle of the first tangent vector e_1 from d_x,

    conj(H_a) = (2 / lambda^(r+1)) e^{i(r+1)t} <A_r, e_a>
    |alpha_{r+1}|^2 = 2^r (|H_a|^2 + |H_b|^2) = 2^(r+2) |A_r|^2 / F^(r+1)
    K_r^perp = i (H_a conj(H_b) - conj(H_a) H_b)
    f_r = <A_r, A_r>  (complex bilinear; the Hopf coefficient)

where (e_a, e_b) is Gram-Schmidt applied to (Re W, -Im W), W = e^{i(r+1)t} A_r,
which orients N_r by the ordered pair alpha(X,..,X), alpha(JX,X,..,X).

Everything here is vectorised: arrays carry the ambient coordinate on the
first axis and any number of trailing batch axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConformalityError,
    DegenerateDifferential,
    InvalidInput,
    OrderUnavailable,
)
from .jet import Jet2, eval_jet
from .taylor import Taylor, monomials

ZERO_TOL = 1e-6  # |alpha_{r+1}| below this: N_r has rank 0
RANK_RTOL = 1e-7  # sigma_2 / sigma_1 below this: N_r has rank 1
AMBIGUITY = 100.0  # decisions within this factor of a threshold are not trusted
CONFORMAL_TOL = 1e-6


def _dot(a, b):
    return np.sum(a * b, axis=0)


def complex_derivative(P: dict, k: int) -> np.ndarray:
    """d^k f from the real partials P[(i, j)] = d^i_x d^j_y f."""
    out = 0
    for m in range(k + 1):
        out = out + math.comb(k, m) * (-1j) ** m * P[(k - m, m)]
    return out / 2**k


def partials_from_jet(jet: Jet2) -> dict:
    return {(i, j): jet.partial(i, j) for i, j in monomials(jet.order)}


@dataclass
class FlagField:
    """Osculating-flag data at a batch of points (see module docstring)."""

    F: np.ndarray
    conformality_residual: np.ndarray
    tangent: np.ndarray  # (dim, 2, *batch)
    normals: list  # per order r: (dim, 2, *batch); unused columns are 0
    A: list  # per order r: complex (dim, *batch)
    Ha: list
    Hb: list
    rank: list  # per order r: int array
    regular: np.ndarray
    minimality: np.ndarray
    rotation: float | np.ndarray = 0.0
    K: np.ndarray | None = None
    dim: int = 0

    @property
    def depth(self) -> int:
        return len(self.A)

    @property
    def tau(self) -> np.ndarray:
        """Number of rank-2 normal bundles at each point."""
        alive = np.ones(self.F.shape, dtype=bool)
        tau = np.zeros(self.F.shape, dtype=int)
        for rk in self.rank:
            alive &= rk == 2
            tau += alive
        return tau

    def check_order(self, r: int):
        if not 1 <= r <= self.depth:
            raise OrderUnavailable(f"order {r} not available (flag depth {self.depth})")

    def alpha_norm2(self, r: int) -> np.ndarray:
        """|alpha_{r+1}|^2."""
        self.check_order(r)
        return 2**r * (np.abs(self.Ha[r - 1]) ** 2 + np.abs(self.Hb[r - 1]) ** 2)

    def alpha_norm2_direct(self, r: int) -> np.ndarray:
        """|alpha_{r+1}|^2 from |A_r| alone (independent of the frames)."""
        self.check_order(r)
        A = self.A[r - 1]
        return 2 ** (r + 2) * np.real(_dot(A, np.conj(A))) / self.F ** (r + 1)

    def Kperp(self, r: int) -> np.ndarray:
        self.check_order(r)
        a, b = self.Ha[r - 1], self.Hb[r - 1]
        return np.real(1j * (a * np.conj(b) - np.conj(a) * b))

    def hopf(self, r: int) -> np.ndarray:
        """f_r with Phi_r = f_r dz^(2r+2), in the coordinate z = x + iy."""
        self.check_order(r)
        A = self.A[r - 1]
        return _dot(A, A)

    def hopf_from_H(self, r: int) -> np.ndarray:
        """f_r rebuilt from the H values: (F^(r+1)/4) conj(H_a^2 + H_b^2) e^{2i(r+1)t}."""
        self.check_order(r)
        a, b = self.Ha[r - 1], self.Hb[r - 1]
        phase = np.exp(-2j * (r + 1) * self.rotation)
        return self.F ** (r + 1) / 4 * np.conj(a * a + b * b) * phase

    def semi_axes(self, r: int):
        """(kappa_r, mu_r): singular values of [[Re H_a, Im H_a], [Re H_b, Im H_b]]."""
        self.check_order(r)
        a, b = self.Ha[r - 1], self.Hb[r - 1]
        # kappa + mu = sqrt(p + 2 det), kappa^2 - mu^2 = |a^2 + b^2|; avoids a
        # cancelling discriminant near circles
        p = np.abs(a) ** 2 + np.abs(b) ** 2
        det = np.abs(a.real * b.imag - a.imag * b.real)
        s = np.sqrt(p + 2 * det)
        d = np.where(s > 0, np.abs(a * a + b * b) / np.where(s > 0, s, 1.0), 0.0)
        d = np.minimum(d, s)
        return (s + d) / 2, (s - d) / 2

    def H_values(self) -> dict:
        """H_alpha keyed by alpha = 3, 4, ... (rank-1 orders contribute only H_{2r+1})."""
        out = {}
        for r in range(1, self.depth + 1):
            out[2 * r + 1] = self.Ha[r - 1]
            out[2 * r + 2] = self.Hb[r - 1]
        return out


def _orthonormal_pair(v1, v2):
    """Oriented orthonormal basis of span(v1, v2) (Gram-Schmidt from the longer vector)."""
    n1 = np.linalg.norm(v1, axis=0)
    n2 = np.linalg.norm(v2, axis=0)
    first = n1 >= n2
    with np.errstate(all="ignore"):
        u1 = v1 / n1
        w2 = v2 - _dot(v2, u1) * u1
        ea1, eb1 = u1, w2 / np.linalg.norm(w2, axis=0)
        u2 = v2 / n2
        w1 = v1 - _dot(v1, u2) * u2
        ea2, eb2 = w1 / np.linalg.norm(w1, axis=0), u2
    ea = np.where(first, ea1, ea2)
    eb = np.where(first, eb1, eb2)
    return ea, eb


def _line(v1, v2):
    n1 = np.linalg.norm(v1, axis=0)
    n2 = np.linalg.norm(v2, axis=0)
    with np.errstate(all="ignore"):
        return np.where(n1 >= n2, v1 / n1, v2 / n2)


def _project_out(v, basis):
    """Remove from v (real or complex) its components along orthonormal real basis vectors."""
    for _ in range(2):
        for e in basis:
            v = v - _dot(v, e) * e
    return v


def flag_from_partials(
    P: dict,
    depth: int | None = None,
    rotation: float = 0.0,
    zero_tol: float = ZERO_TOL,
    rank_rtol: float = RANK_RTOL,
) -> FlagField:
    """Build the osculating flag from real partial derivatives.

    ``P[(i, j)]`` must hold d^i_x d^j_y f for i + j <= depth + 1.
    ``rotation`` turns the initial tangent frame by that angle (gauge tests).
    """
    f = P[(0, 0)]
    dim = f.shape[0]
    avail = max(i + j for i, j in P) - 1
    max_depth = max(1, (dim - 2) // 2)
    if depth is None:
        depth = min(avail, max_depth)
    if depth > avail:
        raise OrderUnavailable(f"flag depth {depth} needs derivatives of order {depth + 1}")
    depth = max(1, min(depth, max_depth))

    fx, fy = P[(1, 0)], P[(0, 1)]
    Fx, Fy, Fxy = _dot(fx, fx), _dot(fy, fy), _dot(fx, fy)
    F = Fx
    with np.errstate(all="ignore"):
        conf = np.maximum(np.abs(Fx - Fy), np.abs(Fxy)) / F
        lam = np.sqrt(F)
        X = fx / lam
        Yr = fy - _dot(fy, X) * X
        Y = Yr / np.linalg.norm(Yr, axis=0)
    degenerate = ~(np.linalg.norm(Yr, axis=0) > 1e-10 * np.maximum(lam, 1e-300))
    rotation = np.asarray(rotation, dtype=float)
    c, s = np.cos(rotation), np.sin(rotation)
    e1 = c * X + s * Y
    e2 = -s * X + c * Y
    fnorm = f / np.linalg.norm(f, axis=0)
    basis = [fnorm, X, Y]

    # minimality: (1,1) part of the second derivative is -(F/2) f
    with np.errstate(all="ignore"):
        lap4 = (P[(2, 0)] + P[(0, 2)]) / 4 if avail >= 1 else np.zeros_like(f)
        minimality = np.linalg.norm(lap4 + F / 2 * f, axis=0) / F

    normals, As, Has, Hbs, ranks = [], [], [], [], []
    alive = ~degenerate
    regular = ~degenerate
    batch = F.shape
    with np.errstate(all="ignore"):
        for r in range(1, depth + 1):
            D = complex_derivative(P, r + 1)
            A = _project_out(D, basis)
            A = np.where(alive, A, 0.0)
            W = np.exp(1j * (r + 1) * rotation) * A
            v1, v2 = W.real, -W.imag
            M = np.stack([v1, v2], axis=-1)  # (dim, *batch, 2)
            sv = np.linalg.svd(np.moveaxis(M, 0, -2), compute_uv=False)
            s1, s2 = sv[..., 0], sv[..., 1]
            scale = 2 ** ((r + 2) / 2) / lam ** (r + 1)  # |A| -> |alpha_{r+1}|
            anorm = scale * np.sqrt(s1 * s1 + s2 * s2)
            ratio = np.where(s1 > 0, s2 / np.where(s1 > 0, s1, 1.0), 0.0)
            rank = np.where(anorm < zero_tol, 0, np.where(ratio < rank_rtol, 1, 2))
            rank = np.where(alive, rank, 0)
            ambiguous = alive & (
                ((anorm >= zero_tol) & (anorm < AMBIGUITY * zero_tol))
                | ((anorm >= zero_tol) & (ratio >= rank_rtol) & (ratio < AMBIGUITY * rank_rtol))
            )
            regular = regular & ~ambiguous

            ea2, eb2 = _orthonormal_pair(v1, v2)
            ea1 = _line(v1, v2)
            ea = np.where(rank == 2, ea2, np.where(rank == 1, ea1, 0.0))
            eb = np.where(rank == 2, eb2, 0.0)
            ea = np.nan_to_num(ea)
            eb = np.nan_to_num(eb)
            pref = 2 / lam ** (r + 1)
            Ha = np.conj(pref * _dot(W, ea))
            Hb = np.conj(pref * _dot(W, eb))
            Ha = np.where(rank >= 1, Ha, 0.0)
            Hb = np.where(rank == 2, Hb, 0.0)

            normals.append(np.stack([ea, eb], axis=1))
            As.append(A)
            Has.append(Ha)
            Hbs.append(Hb)
            ranks.append(rank)
            basis = basis + [ea, eb]
            alive = alive & (rank == 2)

    return FlagField(
        F=F,
        conformality_residual=conf,
        tangent=np.stack([e1, e2], axis=1),
        normals=normals,
        A=As,
        Ha=Has,
        Hb=Hbs,
        rank=ranks,
        regular=regular & np.isfinite(F),
        minimality=minimality,
        rotation=rotation,
        dim=dim,
    )


def curvature_from_jet(jet: Jet2) -> np.ndarray:
    """K = -(1/2) Delta log F, using the Taylor expansion of log F.

    The jet of F = |f_x|^2 has order K - 1; its log's second-order
    coefficients give Delta log F = 2 (c20 + c02) / F.
    """
    K = jet.order - 1
    if K < 2:
        raise OrderUnavailable("Gaussian curvature needs a jet of order >= 3")
    n = len(monomials(K))
    F = None
    for comp in range(jet.dim):
        c = np.zeros((n,) + jet.batch_shape)
        for m, (i, j) in enumerate(monomials(K)):
            c[m] = (i + 1) * jet.coeffs[i + 1, j, comp]
        t = Taylor(c, K)
        F = t * t if F is None else F + t * t
    with np.errstate(all="ignore"):
        logF = F.apply("log")
        return -(logF.coeff(2, 0) + logF.coeff(0, 2)) / F.value


def flag_field_from_jet(jet: Jet2, depth=None, rotation=0.0) -> FlagField:
    ff = flag_from_partials(partials_from_jet(jet), depth=depth, rotation=rotation)
    if jet.order >= 3:
        ff.K = curvature_from_jet(jet)
    return ff


# single-point API


@dataclass(frozen=True)
class EllipseData:
    order: int
    kappa: float
    mu: float
    Kperp: float
    a_plus: float
    a_minus: float
    eccentricity: float | None
    circularity: float | None
    alpha_norm2: float
    rank: int


@dataclass(frozen=True)
class FlagReport:
    F: float
    conformality_residual: float
    K: float | None
    tau: int
    frames: tuple  # (T, N_1, ..., N_m) as (dim, k) arrays
    H: dict
    ellipses: tuple
    hopf: tuple
    regular: bool
    minimality_residual: float
    field: FlagField = field(repr=False, compare=False)


def _ellipse(ff: FlagField, r: int, idx=()) -> EllipseData:
    kappa, mu = ff.semi_axes(r)
    kappa, mu = float(kappa[idx]), float(mu[idx])
    kp = float(ff.Kperp(r)[idx])
    a2 = float(ff.alpha_norm2(r)[idx])
    ecc = math.sqrt(max(kappa**2 - mu**2, 0.0)) / kappa if kappa > 0 else None
    circ = 2**r * kp / a2 if a2 > ZERO_TOL**2 else None
    return EllipseData(
        order=r,
        kappa=kappa,
        mu=mu,
        Kperp=kp,
        a_plus=kappa + mu,
        a_minus=kappa - mu,
        eccentricity=ecc,
        circularity=circ,
        alpha_norm2=a2,
        rank=int(ff.rank[r - 1][idx]),
    )


def osculating_flag(jet: Jet2, depth: int | None = None, rotation: float = 0.0) -> FlagReport:
    """Flag, H values, ellipses and Hopf coefficients at the jet's base point."""
    if jet.batch_shape != ():
        raise InvalidInput("osculating_flag expects a single-point jet; use flag_field_from_jet")
    ff = flag_field_from_jet(jet, depth=depth, rotation=rotation)
    if not np.isfinite(ff.F) or not ff.F > 0 or not np.all(np.isfinite(ff.tangent)):
        raise DegenerateDifferential("differential has rank < 2")
    tau = int(ff.tau)
    frames = [ff.tangent]
    for r in range(1, ff.depth + 1):
        rk = int(ff.rank[r - 1])
        if rk == 0:
            break
        frames.append(ff.normals[r - 1][:, :rk])
    H = {}
    for r in range(1, ff.depth + 1):
        rk = int(ff.rank[r - 1])
        if rk >= 1:
            H[2 * r + 1] = complex(ff.Ha[r - 1])
        if rk == 2:
            H[2 * r + 2] = complex(ff.Hb[r - 1])
    return FlagReport(
        F=float(ff.F),
        conformality_residual=float(ff.conformality_residual),
        K=None if ff.K is None else float(ff.K),
        tau=tau,
        frames=tuple(frames),
        H=H,
        ellipses=tuple(_ellipse(ff, r) for r in range(1, ff.depth + 1)),
        hopf=tuple(complex(ff.hopf(r)) for r in range(1, ff.depth + 1)),
        regular=bool(ff.regular),
        minimality_residual=float(ff.minimality),
        field=ff,
    )


def conformal_factor(jet: Jet2):
    """(F, conformality_residual) with F = |f_x|^2."""
    fx, fy = jet.c(1, 0), jet.c(0, 1)
    F = _dot(fx, fx)
    Fy = _dot(fy, fy)
    cross = np.sqrt(F * Fy) - np.abs(_dot(fx, fy))
    if np.any(~(cross > 1e-12 * np.maximum(F, Fy))):
        raise DegenerateDifferential("differential has rank < 2")
    res = np.maximum(np.abs(F - Fy), np.abs(_dot(fx, fy))) / F
    if jet.batch_shape == ():
        return float(F), float(res)
    return F, res


def gaussian_curvature(spec, p, order: int = 4, conformal_tol: float = CONFORMAL_TOL) -> float:
    jet = eval_jet(spec, p, order)
    _, res = conformal_factor(jet)
    if res > conformal_tol:
        raise ConformalityError(f"{spec.name}: not isothermal at {tuple(p)} (residual {res:.3g})")
    return float(curvature_from_jet(jet))


def ellipse_data(flag: FlagReport, r: int) -> EllipseData:
    if not 1 <= r <= len(flag.ellipses):
        raise OrderUnavailable(f"order {r} not available (flag depth {len(flag.ellipses)})")
    return flag.ellipses[r - 1]


def hopf_coefficient(flag: FlagReport, r: int) -> complex:
    if not 1 <= r <= len(flag.hopf):
        raise OrderUnavailable(f"order {r} not available (flag depth {len(flag.hopf)})")
    return flag.hopf[r - 1]
