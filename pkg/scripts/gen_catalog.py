"""Regenerate the closed-form catalog sources with exact normalisation constants.

Harmonic polynomial bases are normalised with sympy so that the sum of
squares is 1 on the unit sphere; composing with inverse stereographic
projection gives conformal minimal immersions with F = l(l+1)/2 * 4/(1+|z|^2)^2.
Run from the repository root: python3 scripts/gen_catalog.py
"""
from pathlib import Path

import sympy as sp

X, Y, Z, x, y, th, ph = sp.symbols("X Y Z x y theta phi", real=True)
OUT = Path(__file__).resolve().parents[1] / "src" / "curvelab" / "catalog" / "data"

BASES = {
    2: [X**2 - Y**2, 2 * X * Y, X * Z, Y * Z, 3 * Z**2 - (X**2 + Y**2 + Z**2)],
    3: [
        X**3 - 3 * X * Y**2,
        3 * X**2 * Y - Y**3,
        (X**2 - Y**2) * Z,
        2 * X * Y * Z,
        X * (4 * Z**2 - X**2 - Y**2),
        Y * (4 * Z**2 - X**2 - Y**2),
        Z * (2 * Z**2 - 3 * X**2 - 3 * Y**2),
    ],
}


def normalised(l):
    sph = {X: sp.sin(th) * sp.cos(ph), Y: sp.sin(th) * sp.sin(ph), Z: sp.cos(th)}
    out = []
    for p in BASES[l]:
        q = sp.expand(p.subs(sph))
        n2 = sp.integrate(sp.integrate(q**2 * sp.sin(th), (ph, 0, 2 * sp.pi)), (th, 0, sp.pi))
        out.append(sp.nsimplify(sp.sqrt(4 * sp.pi / (2 * l + 1) / n2)) * p)
    # sanity: sum of squares equals (X^2+Y^2+Z^2)^l
    assert sp.expand(sum(c**2 for c in out) - (X**2 + Y**2 + Z**2) ** l) == 0
    return out


def stereo(p):
    D = 1 + x**2 + y**2
    e = p.subs({X: 2 * x / D, Y: 2 * y / D, Z: (1 - x**2 - y**2) / D})
    num, den = sp.fraction(sp.factor(sp.together(e)))
    return f"({sp.expand(num)})/({den})".replace("**", "^")


def write(name, comps, extra):
    body = ",\n     ".join(comps)
    text = f"name {name};\ndim {len(comps)};\nf = ({body});\n{extra}"
    (OUT / f"{name}.srf").write_text(text)


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    dom = "domain x in [-1.25, 1.25], y in [-1.25, 1.25];\n"
    sphere = [stereo(X), stereo(Y), stereo(Z)]
    write("geodesic_s2", sphere, dom)
    write("assoc_s2", sphere + ["0"] * 4, dom)
    write("veronese_s4", [stereo(p) for p in normalised(2)], dom)
    write("veronese3_s6", [stereo(p) for p in normalised(3)], dom)
    write("small_sphere_s3", [f"4/5*{c}" for c in sphere] + ["3/5"], dom)
    u = ["sqrt(2)*x", "sqrt(2)*(-x/2 + sqrt(3)/2*y)", "sqrt(2)*(-x/2 - sqrt(3)/2*y)"]
    torus = []
    for uk in u:
        torus += [f"cos({uk})/sqrt(3)", f"sin({uk})/sqrt(3)"]
    write("flat_torus_s5", torus, "periodic 2*pi*sqrt(2) 2*pi*sqrt(2)/sqrt(3);\n")
