"""Truncated bivariate Taylor arithmetic.

A :class:`Taylor` holds the coefficients ``c[i, j] = d^i_x d^j_y f / (i! j!)``
for all ``i + j <= K`` in a flat array of shape ``(M, *batch)`` with
``M = (K + 1)(K + 2) / 2``, so many base points can be pushed through the
same expression at once. Monomials are ordered by total degree, then by
the y exponent.

Elementary functions are composed through their one-variable Taylor series
around the constant term; a singular base point gives NaN coefficients
rather than an exception so that batched evaluation can mask it.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def monomials(K: int) -> tuple:
    return tuple((d - j, j) for d in range(K + 1) for j in range(d + 1))


@lru_cache(maxsize=None)
def index_table(K: int) -> np.ndarray:
    """``idx[i, j]`` gives the flat position of x^i y^j (or -1 if i + j > K)."""
    idx = -np.ones((K + 1, K + 1), dtype=int)
    for n, (i, j) in enumerate(monomials(K)):
        idx[i, j] = n
    return idx


@lru_cache(maxsize=None)
def _product_plan(K: int):
    """Triples (out, a, b) of the Cauchy product, grouped by output slot."""
    idx = index_table(K)
    mono = monomials(K)
    out, ia, ib = [], [], []
    for n, (i, j) in enumerate(mono):
        for a in range(i + 1):
            for b in range(j + 1):
                out.append(n)
                ia.append(idx[a, b])
                ib.append(idx[i - a, j - b])
    out = np.asarray(out)
    starts = np.flatnonzero(np.r_[True, out[1:] != out[:-1]])
    return np.asarray(ia), np.asarray(ib), starts


def _series_coeffs(fname: str, a0: np.ndarray, K: int) -> list:
    """f^(k)(a0)/k! for k = 0..K, each with the shape of a0."""
    with np.errstate(all="ignore"):
        if fname == "exp":
            e = np.exp(a0)
            return [e / math.factorial(k) for k in range(K + 1)]
        if fname in ("sin", "cos"):
            s, c = np.sin(a0), np.cos(a0)
            cyc = [s, c, -s, -c] if fname == "sin" else [c, -s, -c, s]
            return [cyc[k % 4] / math.factorial(k) for k in range(K + 1)]
        if fname in ("sinh", "cosh"):
            s, c = np.sinh(a0), np.cosh(a0)
            cyc = [s, c] if fname == "sinh" else [c, s]
            return [cyc[k % 2] / math.factorial(k) for k in range(K + 1)]
        if fname == "log":
            bad = a0 <= 0
            a0 = np.where(bad, np.nan, a0)
            out = [np.log(a0)]
            for k in range(1, K + 1):
                out.append((-1) ** (k + 1) / (k * a0**k))
            return out
        if fname == "recip":
            bad = a0 == 0
            a0 = np.where(bad, np.nan, a0)
            return [(-1) ** k / a0 ** (k + 1) for k in range(K + 1)]
        if fname.startswith("rpow:"):
            # real power a^p, smooth only for a > 0
            p = float(fname[5:])
            a0 = np.where(a0 <= 0, np.nan, a0)
            out, binom = [], 1.0
            for k in range(K + 1):
                out.append(binom * a0 ** (p - k))
                binom *= (p - k) / (k + 1)
            return out
    raise ValueError(f"no series for {fname!r}")


class Taylor:
    """Truncated Taylor polynomial in (x, y), batched over trailing axes."""

    __slots__ = ("c", "K")
    __array_priority__ = 100

    def __init__(self, c: np.ndarray, K: int):
        self.c = c
        self.K = K

    @classmethod
    def constant(cls, value, K: int, batch=()):
        c = np.zeros((len(monomials(K)),) + tuple(batch))
        c[0] = value
        return cls(c, K)

    @classmethod
    def variable(cls, which: str, value, K: int):
        value = np.asarray(value, dtype=float)
        c = np.zeros((len(monomials(K)),) + value.shape)
        c[0] = value
        if K >= 1:
            c[1 if which == "x" else 2] = 1.0
        return cls(c, K)

    @property
    def value(self):
        return self.c[0]

    def coeff(self, i: int, j: int):
        return self.c[index_table(self.K)[i, j]]

    def to_table(self) -> np.ndarray:
        """Square table of shape (K+1, K+1, *batch); entries with i+j > K are 0."""
        K = self.K
        t = np.zeros((K + 1, K + 1) + self.c.shape[1:])
        for n, (i, j) in enumerate(monomials(K)):
            t[i, j] = self.c[n]
        return t

    # arithmetic
    def _wrap(self, other):
        if isinstance(other, Taylor):
            return other
        return Taylor.constant(other, self.K, self.c.shape[1:])

    def __add__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.c + other.c, self.K)
        c = self.c.copy()
        c[0] = c[0] + other
        return Taylor(c, self.K)

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.c, self.K)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c * other, self.K)
        ia, ib, starts = _product_plan(self.K)
        a, b = np.broadcast_arrays(self.c, other.c)
        return Taylor(np.add.reduceat(a[ia] * b[ib], starts, axis=0), self.K)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c / other, self.K)
        return self * other.apply("recip")

    def __rtruediv__(self, other):
        return self.apply("recip") * other

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            return self.apply(f"rpow:{float(n)!r}")
        if n < 0:
            return (self ** (-n)).apply("recip")
        result, base = None, self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result if result is not None else Taylor.constant(1.0, self.K, self.c.shape[1:])

    def apply(self, fname: str) -> "Taylor":
        """Compose with a one-variable function via its series at c[0]."""
        if fname == "sqrt":
            return self.apply("rpow:0.5")
        if fname == "tan":
            return self.apply("sin") / self.apply("cos")
        coeffs = _series_coeffs(fname, self.c[0], self.K)
        delta = Taylor(self.c.copy(), self.K)
        delta.c[0] = 0.0
        # Horner in delta; delta^k vanishes beyond the truncation order
        acc = Taylor.constant(0.0, self.K, self.c.shape[1:])
        acc.c[0] = coeffs[self.K]
        for k in range(self.K - 1, -1, -1):
            acc = acc * delta
            acc.c[0] = acc.c[0] + coeffs[k]
        return acc


def derivative_table(t: Taylor) -> np.ndarray:
    """Partial derivatives d^i_x d^j_y f = i! j! c[i, j], as a square table."""
    tab = t.to_table()
    K = t.K
    for i in range(K + 1):
        for j in range(K + 1 - i):
            tab[i, j] *= math.factorial(i) * math.factorial(j)
    return tab
