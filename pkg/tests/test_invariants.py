import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvelab.catalog import get_entry
from curvelab.dsl import parse_expr, parse_surface, substitute
from curvelab.errors import ConformalityError, DegenerateDifferential, OrderUnavailable
from curvelab.invariants import ellipse_data, gaussian_curvature, hopf_coefficient, osculating_flag
from curvelab.jet import eval_jet, evaluate

P = (0.3, -0.2)


def flag(name, p=P, order=6, **kw):
    return osculating_flag(eval_jet(get_entry(name).spec, p, order), **kw)


def holomorphic_reparam(spec, a, b):
    """Compose with z -> z + c z^2, c = a + ib (still isothermal, same image)."""
    x, y = f"({a!r})", f"({b!r})"
    u = parse_expr(f"x + {x}*(x^2 - y^2) - {y}*2*x*y")
    v = parse_expr(f"y + {x}*2*x*y + {y}*(x^2 - y^2)")
    return spec.with_components([substitute(c, x=u, y=v) for c in spec.components])


def fd_curvature(spec, p, h=1e-3):
    """K = -(1/2F) (d_xx + d_yy) log F, with F from centred differences of plain values."""
    px, py = p

    def logF(x, y):
        d = (evaluate(spec, np.array(x + h), np.array(y)) - evaluate(spec, np.array(x - h), np.array(y))) / (2 * h)
        return math.log(float(d @ d))

    s = 10 * h
    lap = (logF(px + s, py) + logF(px - s, py) + logF(px, py + s) + logF(px, py - s) - 4 * logF(px, py)) / s**2
    d = (evaluate(spec, np.array(px + h), np.array(py)) - evaluate(spec, np.array(px - h), np.array(py))) / (2 * h)
    return -0.5 * lap / float(d @ d)


@pytest.mark.parametrize(
    "name, K",
    [("geodesic_s2", 1.0), ("flat_torus_s5", 0.0), ("veronese_s4", 1 / 3), ("veronese3_s6", 1 / 6), ("small_sphere_s3", 1.5625)],
)
def test_gaussian_curvature(name, K):
    spec = get_entry(name).spec
    assert gaussian_curvature(spec, P) == pytest.approx(K, abs=1e-10)
    assert fd_curvature(spec, P) == pytest.approx(K, abs=1e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_intrinsic_under_holomorphic_reparametrisation(a, b):
    spec = holomorphic_reparam(get_entry("veronese3_s6").spec, a, b)
    f = osculating_flag(eval_jet(spec, (0.1, 0.05), 6))
    assert f.K == pytest.approx(1 / 6, abs=1e-9)
    e1, e2 = ellipse_data(f, 1), ellipse_data(f, 2)
    assert e1.Kperp == pytest.approx(5 / 6, abs=1e-9)
    assert e2.Kperp == pytest.approx(5 / 24, abs=1e-9)
    assert e1.alpha_norm2 == pytest.approx(5 / 3, abs=1e-9)


def test_veronese3_ellipses_are_circles():
    f = flag("veronese3_s6")
    e1, e2 = ellipse_data(f, 1), ellipse_data(f, 2)
    assert e1.kappa == pytest.approx(e1.mu, abs=1e-9)
    assert e1.kappa == pytest.approx(math.sqrt(5 / 12), abs=1e-9)
    assert e2.alpha_norm2 == pytest.approx(5 / 6, abs=1e-9)
    assert abs(hopf_coefficient(f, 1)) < 1e-10 and abs(hopf_coefficient(f, 2)) < 1e-10
    assert f.tau == 2


def test_torus_second_ellipse_is_a_segment():
    f = flag("flat_torus_s5")
    e1, e2 = ellipse_data(f, 1), ellipse_data(f, 2)
    assert f.F == pytest.approx(1.0)
    assert e1.Kperp == pytest.approx(1.0)
    assert e2.rank == 1 and e2.mu == pytest.approx(0.0, abs=1e-10)
    assert e2.alpha_norm2 == pytest.approx(2.0)
    assert abs(hopf_coefficient(f, 2)) == pytest.approx(0.125)
    assert f.tau == 1


def test_totally_geodesic_has_no_normal_flag():
    f = flag("geodesic_s2")
    assert ellipse_data(f, 1).alpha_norm2 == pytest.approx(0.0, abs=1e-12)
    assert f.minimality_residual < 1e-12


def test_non_minimal_control():
    f = flag("small_sphere_s3")
    assert f.minimality_residual == pytest.approx(0.375, abs=1e-10)


@pytest.mark.parametrize("name", ["veronese3_s6", "flat_torus_s5", "veronese_s4"])
@pytest.mark.parametrize("t", [0.4, 1.3, -2.0])
def test_frame_rotation_invariance(name, t):
    a, b = flag(name), flag(name, rotation=t)
    for r in range(1, len(a.ellipses) + 1):
        ea, eb = ellipse_data(a, r), ellipse_data(b, r)
        assert eb.kappa == pytest.approx(ea.kappa, abs=1e-10)
        assert eb.mu == pytest.approx(ea.mu, abs=1e-10)
        assert eb.Kperp == pytest.approx(ea.Kperp, abs=1e-10)
        assert abs(hopf_coefficient(b, r)) == pytest.approx(abs(hopf_coefficient(a, r)), abs=1e-10)


@pytest.mark.parametrize("name", ["veronese3_s6", "flat_torus_s5", "veronese_s4"])
def test_ellipse_relations(name):
    f = flag(name)
    for r in range(1, len(f.ellipses) + 1):
        e = ellipse_data(f, r)
        assert abs(e.Kperp) == pytest.approx(2 * e.kappa * e.mu, abs=1e-10)
        assert e.kappa >= e.mu >= 0
        assert e.alpha_norm2 == pytest.approx(2 ** (r - 1) * 2 * (e.kappa**2 + e.mu**2), rel=1e-9)
        d = f.field
        assert np.allclose(d.alpha_norm2(r), d.alpha_norm2_direct(r), rtol=1e-9)


def test_frames_are_orthonormal_and_nested():
    f = flag("veronese3_s6")
    g = eval_jet(get_entry("veronese3_s6").spec, P, 1).c(0, 0)
    B = np.concatenate([g[:, None], *f.frames], axis=1)
    assert np.allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10)
    assert B.shape[1] == 7


def test_order_unavailable():
    f = flag("veronese_s4")
    with pytest.raises(OrderUnavailable):
        ellipse_data(f, 5)
    with pytest.raises(OrderUnavailable):
        hopf_coefficient(f, 0)


def test_degenerate_and_non_isothermal():
    with pytest.raises(DegenerateDifferential):
        osculating_flag(eval_jet(parse_surface("dim 3; f = (x, x, 1); normalize;"), (0.1, 0.1), 4))
    stretched = parse_surface("dim 3; f = (2*x, y, 1); normalize;")
    with pytest.raises(ConformalityError):
        gaussian_curvature(stretched, (0.1, 0.2))
