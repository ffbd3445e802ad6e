"""Taylor jets of parsed surfaces, plus a plain evaluator used as an oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsl import SurfaceSpec
from .errors import EvaluationSingularity, InvalidInput
from .taylor import Taylor

DEFAULT_ORDER = 6


@dataclass(frozen=True, eq=False)
class Jet2:
    """Taylor coefficients of a map R^2 -> R^dim.

    ``coeffs[i, j]`` is the vector d^i_x d^j_y f / (i! j!) for i + j <= order
    (zero otherwise). Any trailing axes after the vector axis index a batch of
    base points, so ``coeffs`` has shape (K+1, K+1, dim, *batch).
    """

    order: int
    dim: int
    coeffs: np.ndarray

    def c(self, i: int, j: int) -> np.ndarray:
        if i + j > self.order:
            raise IndexError(f"coefficient ({i},{j}) beyond order {self.order}")
        return self.coeffs[i, j]

    def partial(self, i: int, j: int) -> np.ndarray:
        return self.c(i, j) * (math.factorial(i) * math.factorial(j))

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[3:]

    @property
    def valid(self) -> np.ndarray:
        """Per-point flag: all coefficients finite."""
        return np.all(np.isfinite(self.coeffs), axis=(0, 1, 2))


def _eval_tree(node, env, K, batch):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return env[node[1]]
    if tag == "neg":
        return -_eval_tree(node[1], env, K, batch)
    if tag == "pow":
        base = _eval_tree(node[1], env, K, batch)
        if not isinstance(base, Taylor):
            with np.errstate(divide="ignore"):
                return float(base) ** node[2] if base != 0 or node[2] >= 0 else math.nan
        return base ** node[2]
    if tag == "call":
        arg = _eval_tree(node[2], env, K, batch)
        if not isinstance(arg, Taylor):
            arg = Taylor.constant(arg, K, batch)
        return arg.apply(node[1])
    a = _eval_tree(node[1], env, K, batch)
    b = _eval_tree(node[2], env, K, batch)
    if tag == "add":
        return a + b
    if tag == "sub":
        return a - b
    if tag == "mul":
        return a * b
    if tag == "div":
        if not isinstance(b, Taylor):
            return a / b if b != 0 else a * math.nan
        return a / b
    raise ValueError(f"bad node {tag!r}")


def taylor_components(spec: SurfaceSpec, x, y, order: int) -> list:
    """Push every component through Taylor arithmetic (normalizing if requested)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    batch = x.shape
    env = {"x": Taylor.variable("x", x, order), "y": Taylor.variable("y", y, order)}
    comps = []
    with np.errstate(all="ignore"):
        for node in spec.components:
            v = _eval_tree(node, env, order, batch)
            if not isinstance(v, Taylor):
                v = Taylor.constant(v, order, batch)
            comps.append(v)
        if spec.normalize:
            sq = comps[0] * comps[0]
            for v in comps[1:]:
                sq = sq + v * v
            inv = sq ** -0.5
            comps = [v * inv for v in comps]
    return comps


def eval_jets(spec: SurfaceSpec, x, y, order: int = DEFAULT_ORDER) -> Jet2:
    """Batched jets; points where evaluation is singular carry NaNs."""
    if order < 1:
        raise InvalidInput("jet order must be >= 1")
    comps = taylor_components(spec, x, y, order)
    tabs = np.stack([t.to_table() for t in comps], axis=2)
    return Jet2(order=order, dim=spec.ambient_dim, coeffs=tabs)


def eval_jet(spec: SurfaceSpec, p, order: int = DEFAULT_ORDER) -> Jet2:
    """Jet of the (normalized) map at a single point p = (x, y)."""
    jet = eval_jets(spec, float(p[0]), float(p[1]), order)
    if not np.all(np.isfinite(jet.coeffs)):
        raise EvaluationSingularity(f"{spec.name}: singular evaluation at p={tuple(p)}")
    return jet


# plain evaluation, independent of the Taylor engine

_PLAIN = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "sinh": np.sinh, "cosh": np.cosh,
}


def _plain(node, x, y):
    tag = node[0]
    if tag == "num":
        return node[1] + 0 * x
    if tag == "var":
        return x if node[1] == "x" else y
    if tag == "neg":
        return -_plain(node[1], x, y)
    if tag == "pow":
        b = _plain(node[1], x, y)
        n = node[2]
        return np.where(b == 0, np.nan, b) ** n if n < 0 else b**n
    if tag == "call":
        a = _plain(node[2], x, y)
        name = node[1]
        if name == "log":
            return np.log(np.where(a > 0, a, np.nan))
        if name == "sqrt":
            return np.sqrt(np.where(a > 0, a, np.nan))
        if name == "tan":
            c = np.cos(a)
            return np.sin(a) / np.where(c == 0, np.nan, c)
        return _PLAIN[name](a)
    a = _plain(node[1], x, y)
    b = _plain(node[2], x, y)
    if tag == "add":
        return a + b
    if tag == "sub":
        return a - b
    if tag == "mul":
        return a * b
    return a / np.where(b == 0, np.nan, b)


def evaluate_expr(node, x, y):
    """Plain value of one expression tree."""
    with np.errstate(all="ignore"):
        return _plain(node, np.asarray(x, float), np.asarray(y, float))


def evaluate(spec: SurfaceSpec, x, y) -> np.ndarray:
    """Map values with shape (dim, *batch), NaN where singular."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    with np.errstate(all="ignore"):
        f = np.stack([_plain(node, x, y) for node in spec.components])
        if spec.normalize:
            f = f / np.sqrt(np.sum(f * f, axis=0))
    return f


def _central_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the second-order central stencil for d^n/dx^n."""
    m = (n + 1) // 2
    offs = np.arange(-m, m + 1, dtype=float)
    V = np.vander(offs, increasing=True).T
    rhs = np.zeros(len(offs))
    rhs[n] = math.factorial(n)
    return offs, np.linalg.solve(V, rhs)


def fd_coefficients(spec: SurfaceSpec, p, order: int, h: float) -> np.ndarray:
    """Finite-difference estimate of the coefficient table, Richardson-extrapolated twice.

    Tensor-product central stencils at steps h, h/2, h/4 are combined to
    cancel the h^2 and h^4 error terms.
    """
    px, py = float(p[0]), float(p[1])
    out = np.zeros((order + 1, order + 1, spec.ambient_dim))
    for i in range(order + 1):
        for j in range(order + 1 - i):
            ox, wx = _central_weights(i)
            oy, wy = _central_weights(j)
            est = []
            for s in (h, h / 2, h / 4):
                X = px + s * ox[:, None]
                Y = py + s * oy[None, :]
                vals = evaluate(spec, X, Y)
                if not np.all(np.isfinite(vals)):
                    raise EvaluationSingularity(
                        f"{spec.name}: singular evaluation inside the stencil around {p}"
                    )
                d = np.einsum("kab,a,b->k", vals, wx, wy) / s ** (i + j)
                est.append(d)
            r1 = (4 * est[1] - est[0]) / 3
            r2 = (4 * est[2] - est[1]) / 3
            out[i, j] = (16 * r2 - r1) / 15 / (math.factorial(i) * math.factorial(j))
    return out


def richardson_check(spec: SurfaceSpec, p, order: int = 3, h: float = 0.02) -> float:
    """Largest deviation between jet and finite-difference coefficients.

    Each deviation is measured relative to max(1, |c_ij|) so that both small
    and large coefficients are judged sensibly.
    """
    jet = eval_jet(spec, p, order)
    fd = fd_coefficients(spec, p, order, h)
    worst = 0.0
    for i in range(order + 1):
        for j in range(order + 1 - i):
            c = jet.coeffs[i, j]
            dev = np.max(np.abs(c - fd[i, j])) / max(1.0, float(np.max(np.abs(c))))
            worst = max(worst, dev)
    return worst
