import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvelab.catalog import get_entry, names
from curvelab.dsl import parse_surface
from curvelab.errors import EvaluationSingularity
from curvelab.jet import eval_jet, eval_jets, evaluate, fd_coefficients, richardson_check
from curvelab.taylor import Taylor, derivative_table, index_table, monomials

K = 5
coord = st.floats(-0.8, 0.8, allow_nan=False)


def _var(name, v):
    return Taylor.variable(name, np.float64(v), K)


def test_flat_layout():
    mono = monomials(3)
    assert len(mono) == 10
    assert mono[:4] == ((0, 0), (1, 0), (0, 1), (2, 0))
    idx = index_table(3)
    assert idx[1, 1] == 4 and idx[2, 2] == -1


def test_exp_of_sum_closed_form():
    t = (_var("x", 0.3) + _var("y", -0.2)).apply("exp")
    e = math.exp(0.1)
    for i in range(K + 1):
        for j in range(K + 1 - i):
            assert float(t.coeff(i, j)) == pytest.approx(e / (math.factorial(i) * math.factorial(j)), rel=1e-14)


def test_derivative_table_of_monomial():
    t = _var("x", 0.5) ** 3 * _var("y", 2.0) ** 2
    tab = derivative_table(t)
    # d^3_x d^2_y (x^3 y^2) = 12
    assert float(tab[3, 2]) == pytest.approx(12.0)
    assert float(tab[1, 1]) == pytest.approx(3 * 0.25 * 2 * 2.0)


@settings(max_examples=40, deadline=None)
@given(coord, coord)
def test_log_exp_inverse(x, y):
    u = _var("x", x) * _var("x", x) + _var("y", y) + 2.0
    back = u.apply("log").apply("exp")
    assert np.allclose(back.c, u.c, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(coord, coord)
def test_pythagoras(x, y):
    a = _var("x", x) * 1.7 - _var("y", y) * _var("x", x)
    s, c = a.apply("sin"), a.apply("cos")
    one = s * s + c * c
    assert float(one.c[0]) == pytest.approx(1.0)
    assert np.max(np.abs(one.c[1:])) < 1e-12


@settings(max_examples=40, deadline=None)
@given(coord, coord)
def test_division_inverts_product(x, y):
    a = _var("x", x).apply("exp") + _var("y", y)
    b = _var("y", y).apply("cosh")
    q = (a * b) / b
    assert np.allclose(q.c, a.c, rtol=1e-12, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(coord, coord)
def test_sqrt_squares_back(x, y):
    a = _var("x", x) ** 2 + _var("y", y) ** 2 + 1.0
    r = a.apply("sqrt")
    assert np.allclose((r * r).c, a.c, rtol=1e-12, atol=1e-12)


def test_batched_matches_pointwise():
    spec = get_entry("veronese_s4").spec
    xs = np.array([[0.1, -0.4], [0.7, 0.0]])
    ys = np.array([[0.2, 0.3], [-0.5, 1.1]])
    batch = eval_jets(spec, xs, ys, 4)
    for i in range(2):
        for j in range(2):
            single = eval_jet(spec, (xs[i, j], ys[i, j]), 4)
            assert np.allclose(batch.coeffs[..., i, j], single.coeffs, rtol=0, atol=1e-14)


def test_value_matches_plain_evaluator():
    spec = get_entry("veronese3_s6").spec
    X, Y = np.meshgrid(np.linspace(-1, 1, 4), np.linspace(-1, 1, 4), indexing="ij")
    jet = eval_jets(spec, X, Y, 2)
    assert np.allclose(jet.partial(0, 0), evaluate(spec, X, Y), rtol=0, atol=1e-14)


@pytest.mark.parametrize("name", names())
def test_jet_against_finite_differences(name):
    spec = get_entry(name).spec
    (x0, x1), (y0, y1) = spec.domain
    p = (x0 + 0.37 * (x1 - x0), y0 + 0.61 * (y1 - y0))
    assert richardson_check(spec, p, order=3) < 1e-6


def test_normalize_projects_to_sphere():
    spec = parse_surface("dim 3; f = (x, y, 1); normalize;")
    jet = eval_jet(spec, (0.3, -0.4), 3)
    assert np.linalg.norm(jet.c(0, 0)) == pytest.approx(1.0)
    fd = fd_coefficients(spec, (0.3, -0.4), 3, 0.02)
    assert np.max(np.abs(fd - jet.coeffs[:4, :4])) < 1e-7


def test_singular_point():
    spec = parse_surface("dim 2; f = (1/x, y);")
    with pytest.raises(EvaluationSingularity):
        eval_jet(spec, (0.0, 0.5), 2)
    batch = eval_jets(spec, np.array([0.0, 0.5]), np.array([0.1, 0.1]), 2)
    assert batch.valid.tolist() == [False, True]
