"""Built-in closed-form surfaces with expected invariant values."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from ..dsl import SurfaceSpec, parse_surface
from ..errors import ConformalityError, InvalidInput
from ..invariants import CONFORMAL_TOL, conformal_factor
from ..jet import eval_jets

TAGS = ("totally_geodesic", "flat_ps5", "isotropic_s6", "superminimal_s4", "non_minimal_control")


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    source: str
    spec: SurfaceSpec
    tag: str
    atlas: str  # "sphere" (two charts) or "torus" (one periodic chart)
    minimal: bool
    expected: dict

    @property
    def closed(self) -> bool:
        return True


def _data():
    return resources.files(__name__).joinpath("data")


@lru_cache(maxsize=1)
def _expected_table() -> dict:
    return json.loads(_data().joinpath("expected.json").read_text())


def _check_conformal(spec: SurfaceSpec, n: int = 7):
    # a coarse lattice of interior points is enough to catch a broken entry
    (x0, x1), (y0, y1) = spec.domain
    xs = np.linspace(x0, x1, n + 2)[1:-1]
    ys = np.linspace(y0, y1, n + 2)[1:-1]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    _, res = conformal_factor(eval_jets(spec, X, Y, 1))
    if np.nanmax(res) > CONFORMAL_TOL:
        raise ConformalityError(f"{spec.name}: catalog source is not isothermal (residual {np.nanmax(res):.3g})")


def list_entries() -> list:
    """(name, tag) pairs in catalog order."""
    return [(name, meta["tag"]) for name, meta in _expected_table().items()]


def names() -> list:
    return list(_expected_table())


@lru_cache(maxsize=None)
def get_entry(name: str) -> CatalogEntry:
    table = _expected_table()
    if name not in table:
        raise InvalidInput(f"unknown catalog entry {name!r}; known: {', '.join(table)}")
    meta = table[name]
    source = _data().joinpath(f"{name}.srf").read_text()
    spec = parse_surface(source)
    _check_conformal(spec)
    return CatalogEntry(name, source, spec, meta["tag"], meta["atlas"], meta["minimal"], meta["expected"])
