"""Per-identity tolerances: tol = max(floor, C * h^2).

Defaults live in ``data/tolerances.json``; the environment variable
``CURVELAB_TOL_CONFIG`` may name a JSON file whose entries override them
(same shape: ``{"identity": {"C": ..., "floor": ...}}``).
"""
from __future__ import annotations

import json
import os
from functools import lru_cache
from importlib import resources

ENV_VAR = "CURVELAB_TOL_CONFIG"


@lru_cache(maxsize=8)
def _load(override_path: str | None) -> dict:
    text = resources.files("curvelab").joinpath("data/tolerances.json").read_text()
    table = {k: v for k, v in json.loads(text).items() if not k.startswith("_")}
    if override_path:
        with open(override_path) as fh:
            extra = json.load(fh)
        for key, val in extra.items():
            table[key] = {**table.get(key, {}), **val}
    return table


def tolerance_table() -> dict:
    return _load(os.environ.get(ENV_VAR) or None)


def tolerance(identity: str, h: float) -> float:
    """Tolerance for an identity on a grid of spacing h."""
    table = tolerance_table()
    base = identity.rstrip("0123456789").rstrip("_")
    entry = table.get(identity) or table.get(base) or table["default"]
    return max(float(entry.get("floor", 0.0)), float(entry.get("C", 0.0)) * h * h)
