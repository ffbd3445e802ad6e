"""Identity checks on sampled invariant fields.

Each check produces a residual field (left side minus right side) and a
verdict against a grid-scaled tolerance. Inequality checks (``trik``)
report signed margin fields instead; their verdict requires every margin
to be strictly positive.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..config import tolerance
from ..dsl import SurfaceSpec
from ..errors import IdentityInapplicable, InvalidInput, OrderUnavailable
from ..invariants import flag_from_partials, partials_from_jet
from ..jet import DEFAULT_ORDER, eval_jets
from .fields import Grid, InvariantField, kstar_algebraic, sample_field, surface_sample
from .laplacian import d_dx, d_dy, laplacian

IDENTITIES = (
    "gauss_eq", "star", "starstar", "ricci_s3", "noniso", "trik",
    "prop5_1", "prop5_2", "prop3i_1", "prop3i_2", "isotropy_1", "isotropy_2",
    "isotropy_3", "connection_forms",
)

ISOTROPY_TOL = 1e-6
VANISH_TOL = 1e-8  # 1 - K or the noniso bracket below this counts as zero


@dataclass
class CheckReport:
    identity: str
    residual: InvariantField
    sup_norm: float
    l2_norm: float
    masked_fraction: float
    tolerance: float
    verdict: bool
    margins: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @classmethod
    def from_residual(cls, identity, residual: InvariantField, tol: float, **kw):
        if not residual.mask.any():
            raise IdentityInapplicable(f"{identity}: no valid nodes")
        sup = residual.sup_norm()
        return cls(
            identity=identity,
            residual=residual,
            sup_norm=sup,
            l2_norm=residual.l2_norm(),
            masked_fraction=residual.masked_fraction,
            tolerance=tol,
            verdict=bool(sup <= tol),
            **kw,
        )

    def to_json(self) -> dict:
        out = {
            "identity": self.identity,
            "sup_norm": self.sup_norm,
            "l2_norm": self.l2_norm,
            "masked_fraction": self.masked_fraction,
            "tolerance": self.tolerance,
            "verdict": "pass" if self.verdict else "fail",
            "grid": self.residual.grid.to_json(),
        }
        if self.margins:
            out["min_margins"] = {k: float(v.valid_values().min()) for k, v in self.margins.items()}
        if self.details:
            out["details"] = self.details
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


# building blocks on plain fields (usable with synthetic metric data)


def log_one_minus_K_laplacian(K: InvariantField, F: InvariantField) -> InvariantField:
    oneK = K.map(lambda k: np.where(1 - k > VANISH_TOL, 1 - k, np.nan), "1-K")
    if not oneK.mask.any():
        raise IdentityInapplicable("1 - K is not positive anywhere (totally geodesic or not minimal)")
    return laplacian(oneK.map(np.log, "log(1-K)"), F)


def star_residual(K, F, rhs: str = "star") -> InvariantField:
    """Delta log(1-K) minus 6K, 6K-1 or 4K."""
    lap = log_one_minus_K_laplacian(K, F)
    target = {"star": lambda k: 6 * k, "starstar": lambda k: 6 * k - 1, "ricci_s3": lambda k: 4 * k}[rhs]
    return lap.combine(K, lambda a, k: a - target(k), rhs)


def noniso_residual(K: InvariantField, F: InvariantField) -> InvariantField:
    """Delta log((1-K)^2 (1 - 6K + Delta log(1-K))) - 12K."""
    lap = log_one_minus_K_laplacian(K, F)
    inner = lap.combine(K, lambda a, k: (1 - k) ** 2 * (1 - 6 * k + a))
    if not np.any(inner.valid_values() > VANISH_TOL):
        raise IdentityInapplicable("1 - 6K + Delta log(1-K) vanishes: the surface is isotropic")
    inner = inner.map(lambda v: np.log(np.where(v > VANISH_TOL, v, np.nan)))
    return laplacian(inner, F).combine(K, lambda a, k: a - 12 * k, "noniso")


def trik_margins(K: InvariantField, F: InvariantField) -> dict:
    """Margins of 6K - 1 < Delta log(1-K) < 6K; both must be > 0."""
    lap = log_one_minus_K_laplacian(K, F)
    lower = lap.combine(K, lambda a, k: a - (6 * k - 1), "lower")
    upper = lap.combine(K, lambda a, k: 6 * k - a, "upper")
    return {"lower": lower, "upper": upper}


def trik_report(K, F) -> CheckReport:
    m = trik_margins(K, F)
    worst = m["lower"].combine(m["upper"], lambda a, b: -np.minimum(a, b), "trik")
    rep = CheckReport.from_residual("trik", worst, 0.0, margins=m)
    # strict inequality: the largest violation must be negative
    rep.verdict = bool(worst.valid_values().max() < 0)
    return rep


# holonomy route to the intrinsic curvature of a plane bundle


def _bundle_basis(spec, X, Y, r, order):
    jet = eval_jets(spec, X, Y, order)
    ff = flag_from_partials(partials_from_jet(jet), depth=max(r, 1))
    if r == 0:
        return ff.tangent, ff.F
    return ff.normals[r - 1], ff.F


def _polar2(M):
    """Nearest rotation/orthogonal matrix for stacks of 2x2 matrices (..., 2, 2)."""
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def kstar_holonomy(spec: SurfaceSpec, grid: Grid, r: int, delta: float = 4e-3) -> np.ndarray:
    """Curvature of the plane bundle N_r (r = 0: tangent bundle) at each node.

    A frame is carried around a small coordinate square by successive
    orthogonal projection onto the bundle (a discrete parallel transport);
    the rotation it accumulates, divided by the enclosed metric area, is the
    bundle curvature. The route uses only the frames, never the fundamental
    form norms, so it is independent of the algebraic formula. Two loop sizes
    are Richardson-combined to remove the leading O(delta^2) error.
    """
    X, Y = grid.mesh()
    order = r + 2
    ests = []
    for d in (delta, delta / 2):
        corners = [(d, -d), (d, d), (-d, d), (-d, -d)]
        bases = []
        for cx, cy in corners:
            B, _ = _bundle_basis(spec, X + cx, Y + cy, r, order)
            bases.append(np.moveaxis(B, (0, 1), (-2, -1)))  # (*batch, dim, 2)
        _, F0 = _bundle_basis(spec, X, Y, r, order)
        frame = bases[0]
        for k in (1, 2, 3, 0):
            B = bases[k]
            M = np.swapaxes(B, -1, -2) @ frame  # coefficients in the next basis
            frame = B @ _polar2(M)
        R = np.swapaxes(bases[0], -1, -2) @ frame
        angle = np.arctan2(R[..., 1, 0], R[..., 0, 0])
        ests.append(angle / (4 * d * d * F0))
    return (4 * ests[1] - ests[0]) / 3


# identity catalogue


def _K_F(spec, grid, order):
    return sample_field(spec, grid, "K", order), sample_field(spec, grid, "F", order)


def isotropy_classes(ff, r: int, tol: float = ISOTROPY_TOL):
    """Three isotropy tests at order r: Hopf coefficient, semi-axes, normal curvature.

    Each normalized quantity is scale-free and compared with the same tolerance;
    a vanishing ellipse counts as a (degenerate) circle in all three.
    """
    a, b = ff.Ha[r - 1], ff.Hb[r - 1]
    p = np.abs(a) ** 2 + np.abs(b) ** 2
    kappa, mu = ff.semi_axes(r)
    an2 = ff.alpha_norm2(r)
    kp = ff.Kperp(r)
    zero = ff.rank[r - 1] == 0
    with np.errstate(all="ignore"):
        t_hopf = np.abs(ff.hopf(r)) / (ff.F ** (r + 1) / 4 * p)
        t_axes = (kappa - mu) / kappa
        t_curv = np.sqrt(np.abs(an2 - 2**r * kp) / an2)
    return tuple(np.where(zero, True, t < tol) for t in (t_hopf, t_axes, t_curv))


def check_identity(spec: SurfaceSpec, grid: Grid, identity: str, order: int = DEFAULT_ORDER) -> CheckReport:
    if identity not in IDENTITIES:
        raise InvalidInput(f"unknown identity {identity!r}; known: {', '.join(IDENTITIES)}")
    h = grid.h
    tol = tolerance(identity, h)
    sample = surface_sample(spec, grid, order)
    ff = sample.flag

    if identity == "gauss_eq":
        a2 = sample_field(spec, grid, "alpha_norm_1", order)
        K = sample_field(spec, grid, "K", order)
        return CheckReport.from_residual(identity, a2.combine(K, lambda a, k: a - 2 * (1 - k), identity), tol)

    if identity in ("star", "starstar", "ricci_s3"):
        K, F = _K_F(spec, grid, order)
        return CheckReport.from_residual(identity, star_residual(K, F, identity), tol)

    if identity == "noniso":
        K, F = _K_F(spec, grid, order)
        return CheckReport.from_residual(identity, noniso_residual(K, F), tol)

    if identity == "trik":
        K, F = _K_F(spec, grid, order)
        return trik_report(K, F)

    kind, _, rs = identity.partition("_")
    if kind == "isotropy":
        r = int(rs)
        ff.check_order(r)
        t = isotropy_classes(ff, r)
        disagree = ~((t[0] == t[1]) & (t[1] == t[2]))
        res = sample.field(disagree.astype(float), identity)
        rep = CheckReport.from_residual(identity, res, 0.0)
        iso = t[0][sample.mask]
        rep.details = {
            "isotropic_nodes": int(iso.sum()),
            "nonisotropic_nodes": int((~iso).sum()),
            "disagreements": int(disagree[sample.mask].sum()),
        }
        return rep

    if kind == "prop5":
        r = int(rs)
        ff.check_order(r)
        alg = sample.field(kstar_algebraic(ff, r), f"Kstar_{r}")
        if np.all(ff.rank[r - 1][sample.mask] < 2):
            raise IdentityInapplicable(f"{identity}: N_{r} is not a plane bundle on {spec.name}")
        hol = sample.field(kstar_holonomy(spec, grid, r), f"Kstar_hol_{r}")
        rep = CheckReport.from_residual(identity, alg.combine(hol, np.subtract, identity), tol)
        rep.details = {"Kstar_mean": float(alg.valid_values().mean())}
        return rep

    if kind == "prop3i":
        s = int(rs)
        ff.check_order(s)
        K, F = _K_F(spec, grid, order)
        kstar = sample.field(kstar_algebraic(ff, s), "Kstar")
        a2 = sample.field(ff.alpha_norm2(s), "alpha")
        if not np.any(a2.valid_values() > 0):
            raise IdentityInapplicable(f"{identity}: alpha_{s + 1} vanishes on {spec.name}")
        iso = isotropy_classes(ff, s)[0][sample.mask]
        rhs = lambda sign: K.combine(kstar, lambda k, ks: 2 * ((s + 1) * k - sign * ks))  # noqa: E731
        if np.all(iso):
            # Phi_s = 0
            lhs = laplacian(a2.map(np.log), F)
            res = lhs.combine(rhs(1), np.subtract, identity)
            return CheckReport.from_residual(identity, res, tol, details={"variant": "hopf_zero"})
        kp = sample.field(ff.Kperp(s), "Kperp")
        res = None
        for sign in (1, -1):
            inner = a2.combine(kp, lambda a, k: a + sign * 2**s * k)
            inner = inner.map(lambda v: np.log(np.where(v > 0, v, np.nan)))
            part = laplacian(inner, F).combine(rhs(sign), np.subtract)
            res = part if res is None else res.combine(part, lambda u, v: np.where(np.abs(u) > np.abs(v), u, v))
        return CheckReport.from_residual(identity, res, tol, details={"variant": "hopf_nonzero"})

    if identity == "connection_forms":
        return connection_forms_report(spec, grid, order, tol)

    raise InvalidInput(identity)


def connection_forms_report(spec, grid, order, tol) -> CheckReport:
    """Tangent connection form in the frame adapted to the second curvature ellipse.

    Applicable only where N_2 is a plane bundle whose ellipse is nowhere a
    circle. The frame rotation t making H_5 real and H_6 imaginary solves
    e^{6it} f_2 > 0; then omega_12 = *d log sqrt(F) + dt (with *dx = dy,
    *dy = -dx and omega_12 = <de_1, e_2>) is compared with
    -(1/6) * d log(kappa_2^2 - mu_2^2).
    """
    sample = surface_sample(spec, grid, order)
    ff = sample.flag
    if ff.depth < 2 or np.all(ff.rank[1][sample.mask] < 2):
        raise IdentityInapplicable("connection_forms needs a plane bundle N_2")
    kappa, mu = ff.semi_axes(2)
    with np.errstate(all="ignore"):
        ecc = (kappa - mu) / kappa
    if np.nanmax(np.where(sample.mask, ecc, np.nan)) < ISOTROPY_TOL:
        raise IdentityInapplicable("second curvature ellipse is a circle everywhere")
    mask = sample.mask & (ecc > ISOTROPY_TOL)
    f2 = np.where(mask, ff.hopf(2), np.nan)
    with np.errstate(all="ignore"):
        dlogf_x = d_dx(f2, grid) / f2
        dlogf_y = d_dy(f2, grid) / f2
        loglam = 0.5 * np.log(np.where(mask, ff.F, np.nan))
        # t = -arg(f_2)/6, so dt = -Im(d log f_2)/6
        w_x = -d_dy(loglam, grid) - dlogf_x.imag / 6
        w_y = d_dx(loglam, grid) - dlogf_y.imag / 6
        g = np.log(np.where(mask, kappa**2 - mu**2, np.nan))
        r_x = (1 / 6) * d_dy(g, grid)
        r_y = -(1 / 6) * d_dx(g, grid)
        res = np.maximum(np.abs(w_x - r_x), np.abs(w_y - r_y)) / np.sqrt(ff.F)
    return CheckReport.from_residual("connection_forms", sample.field(res, "connection_forms"), tol)


def laplacian_convergence(spec: SurfaceSpec, grid: Grid, order: int = DEFAULT_ORDER):
    """Residual of K = -(1/2) Delta log F on a grid and on its refinement.

    Returns (coarse residual, fine residual, ratio); second-order accuracy
    gives a ratio near 4. Residuals are compared on the nodes common to both
    grids.
    """
    out = []
    for g in (grid, grid.refined(2)):
        K, F = _K_F(spec, g, order)
        logF = F.map(np.log)
        lapF = laplacian(logF, F)
        res = lapF.combine(K, lambda a, k: -0.5 * a - k)
        out.append(res)
    coarse, fine = out
    sub = InvariantField(grid, fine.values[::2, ::2], fine.mask[::2, ::2])
    common = coarse.mask & sub.mask
    c = float(np.max(np.abs(coarse.values[common])))
    f = float(np.max(np.abs(sub.values[common])))
    return c, f, c / f if f > 0 else np.inf

