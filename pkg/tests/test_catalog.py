import numpy as np
import pytest

from curvelab.analysis import Grid, sample_field
from curvelab.analysis.topology import euler_characteristic
from curvelab.catalog import TAGS, get_entry, list_entries, names
from curvelab.deform import minimality_residual, sample_spec
from curvelab.dsl import parse_surface
from curvelab.errors import InvalidInput

GOLDEN = [(name, inv) for name in names() for inv in get_entry(name).expected if inv != "chi"]


def test_minimum_entries_present():
    have = dict(list_entries())
    for name in ("geodesic_s2", "assoc_s2", "flat_torus_s5", "veronese3_s6", "veronese_s4"):
        assert name in have
    assert "non_minimal_control" in have.values()
    assert set(have.values()) <= set(TAGS)


@pytest.mark.parametrize("name", names())
def test_sources_parse(name):
    e = get_entry(name)
    again = parse_surface(e.source)
    assert again.ambient_dim == e.spec.ambient_dim
    assert e.closed


def test_unknown_entry():
    with pytest.raises(InvalidInput):
        get_entry("nosuch")


@pytest.mark.parametrize("name, inv", GOLDEN)
def test_expected_values(name, inv):
    e = get_entry(name)
    exp = e.expected[inv]
    assert exp["provenance"]
    f = sample_field(e.spec, Grid.for_spec(e.spec, 24), inv)
    v = f.valid_values()
    assert v.size > 0.5 * f.mask.size
    tol = exp["tol"]
    if exp.get("modulus"):
        v = np.abs(v)
    qual = exp.get("qualifier")
    if qual == "zero":
        assert np.max(np.abs(v)) < tol
    elif qual == "constant":
        assert np.max(np.abs(v - v.mean())) < tol
        if "value" in exp:
            assert np.max(np.abs(v - exp["value"])) < tol
    else:
        assert np.max(np.abs(v - exp["value"])) < tol


@pytest.mark.parametrize("name", [n for n in names() if "chi" in get_entry(n).expected])
def test_expected_euler_characteristic(name):
    e = get_entry(name)
    chi = euler_characteristic(e.spec, e.atlas, n=48)
    assert chi == pytest.approx(e.expected["chi"]["value"], abs=e.expected["chi"]["tol"])


@pytest.mark.parametrize("name", names())
def test_minimal_entries_pass_the_engine_check(name):
    e = get_entry(name)
    res = minimality_residual(sample_spec(e.spec, Grid.for_spec(e.spec, 64)))
    if e.minimal:
        assert res < 1e-5
    else:
        assert res > 1e-2
