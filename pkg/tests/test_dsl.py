import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvelab.dsl import parse_expr, parse_surface, spec_to_source, substitute, to_source
from curvelab.errors import (
    ArityError,
    DimensionMismatchError,
    DSLSyntaxError,
    UnknownFunctionError,
    UnknownIdentifierError,
)
from curvelab.jet import evaluate, evaluate_expr

SPHERE = """
name plane_sphere;
dim 3;
f = (2*x/(1 + x^2 + y^2), 2*y/(1 + x^2 + y^2), (1 - x^2 - y^2)/(1 + x^2 + y^2));
domain x in [-1, 1], y in [-2, 2];
"""


def test_parse_basic_statements():
    spec = parse_surface(SPHERE)
    assert spec.name == "plane_sphere"
    assert spec.ambient_dim == 3
    assert spec.domain == ((-1.0, 1.0), (-2.0, 2.0))
    assert not spec.periodic and not spec.normalize


def test_periodic_and_normalize():
    spec = parse_surface("dim 2; f = (cos(x), sin(x) + y); periodic 2*pi 1; normalize;")
    assert spec.periods == pytest.approx((2 * math.pi, 1.0))
    assert spec.normalize


@pytest.mark.parametrize(
    "text, value",
    [
        ("1 + 2*3", 7.0),
        ("2^3^1", None),  # chained powers are rejected
        ("-2^2", -4.0),
        ("(1 - 3)/4", -0.5),
        ("sqrt(16) + exp(0) + log(1)", 5.0),
        ("cosh(0) - sinh(0) + tan(0)", 1.0),
        ("pi", math.pi),
        ("2e-1*10", 2.0),
    ],
)
def test_constant_expressions(text, value):
    if value is None:
        with pytest.raises(DSLSyntaxError):
            parse_expr(text)
        return
    assert float(evaluate_expr(parse_expr(text), 0.0, 0.0)) == pytest.approx(value, rel=1e-15)


def test_negative_integer_power():
    node = parse_expr("x^(-2)")
    assert float(evaluate_expr(node, 2.0, 0.0)) == pytest.approx(0.25)


@pytest.mark.parametrize(
    "text, exc, line, col",
    [
        ("dim 2;\nf = (x, y $ 1);", DSLSyntaxError, 2, 11),
        ("dim 2;\nf = (foo(x), y);", UnknownFunctionError, 2, 6),
        ("dim 2;\nf = (sin(x, y), y);", ArityError, 2, 11),
        ("dim 2;\nf = (z, y);", UnknownIdentifierError, 2, 6),
        ("dim 3;\nf = (x, y);", DimensionMismatchError, None, None),
    ],
)
def test_errors_carry_positions(text, exc, line, col):
    with pytest.raises(exc) as info:
        parse_surface(text)
    if line is not None:
        assert info.value.line == line
        assert info.value.col == col
        assert f"line {line}, column {col}" in str(info.value)


@pytest.mark.parametrize(
    "text",
    [
        "f = (x, y);",
        "dim 2;",
        "dim 2; f = (x, y); dim 2;",
        "dim 2; f = (x, y); domain x in [1, 0], y in [0, 1];",
        "dim 2; f = (x, y); periodic 0 1;",
        "dim 0; f = ();",
        "dim 2 f = (x, y);",
    ],
)
def test_malformed_sources(text):
    with pytest.raises(DSLSyntaxError):
        parse_surface(text)


def test_substitute_composes():
    node = parse_expr("x*y + 1")
    sub = substitute(node, x=parse_expr("y^2"), y=parse_expr("x + 1"))
    # x -> y^2, y -> x + 1 at (x, y) = (2, 3): 9*3 + 1
    assert float(evaluate_expr(sub, 2.0, 3.0)) == pytest.approx(28.0)


def test_source_round_trip_catalog_style():
    spec = parse_surface(SPHERE)
    again = parse_surface(spec_to_source(spec))
    X, Y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-2, 2, 5), indexing="ij")
    assert np.allclose(evaluate(spec, X, Y), evaluate(again, X, Y), rtol=0, atol=1e-15)
    assert again.domain == spec.domain


# random expression trees for the printer/parser round trip

_leaf = st.one_of(
    st.sampled_from(["x", "y", "pi"]),
    st.floats(min_value=0.1, max_value=5.0, allow_nan=False).map(repr),
)


def _extend(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})")
    call = st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda t: f"{t[0]}({t[1]})")
    power = st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}")
    neg = children.map(lambda c: f"-({c})")
    return st.one_of(binop, call, power, neg)


expressions = st.recursive(_leaf, _extend, max_leaves=8)


@settings(max_examples=80, deadline=None)
@given(expressions, st.floats(-1, 1), st.floats(-1, 1))
def test_print_parse_round_trip(text, x, y):
    node = parse_expr(text)
    again = parse_expr(to_source(node))
    a = float(evaluate_expr(node, x, y))
    b = float(evaluate_expr(again, x, y))
    if math.isfinite(a):
        assert b == pytest.approx(a, rel=1e-12, abs=1e-12)
