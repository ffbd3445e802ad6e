"""Command-line front end.

Exit codes: 0 everything passed, 1 a check or verification failed,
2 usage or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .analysis import Grid, check_identity, sample_field
from .analysis.fields import surface_sample
from .analysis.identities import IDENTITIES, isotropy_classes
from .analysis.topology import global_topology
from .deform import (
    DeformationSpec,
    associated_family,
    congruence,
    direct_sum,
    isometry_residual,
    load_surface,
    minimality_residual,
    polar_surface,
    sample_spec,
    source_connection,
    substantial_dimension,
)
from .dsl import parse_surface
from .errors import CurvelabError, DSLError, GridError, InvalidInput, NumericError
from .io import atomic_write

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
MIN_GRID = 8
ORDER_RANGE = (3, 10)
ISOMETRY_TOL = 1e-6
MINIMALITY_TOL = 1e-5
FORMATS = ("json", "csv")


class UsageError(CurvelabError):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list
    grid: tuple = (64, 64)
    order: int = 6
    out: str | None = None
    formats: tuple = ("json",)
    tol_config: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        nx, ny = self.grid
        if nx < MIN_GRID or ny < MIN_GRID:
            raise UsageError(f"grid {nx}x{ny} too small (minimum {MIN_GRID}x{MIN_GRID})")
        lo, hi = ORDER_RANGE
        if not lo <= self.order <= hi:
            raise UsageError(f"jet order {self.order} outside [{lo}, {hi}]")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise UsageError(f"unknown format(s) {', '.join(bad)}; choose from {', '.join(FORMATS)}")


def parse_grid(text: str) -> tuple:
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected NXxNY such as 64x64") from None
    return nx, ny


def parse_list(text: str, what: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad {what} list {text!r}") from None


def _load_spec(args):
    """(spec, catalog entry or None)."""
    if getattr(args, "catalog", None):
        entry = catalog.get_entry(args.catalog)
        return entry.spec, entry
    path = getattr(args, "spec", None) or getattr(args, "file", None)
    if not path:
        raise UsageError("give a surface with --catalog NAME or --spec FILE")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_surface(text), None
    except DSLError as exc:
        raise DSLError(f"{path}: {exc}") from None


def _grid_for(spec, cfg: RunConfig, periodic=None) -> Grid:
    nx, ny = cfg.grid
    return Grid.for_spec(spec, nx, ny, periodic)


def _write(cfg: RunConfig, rel: str, text: str):
    if cfg.out:
        atomic_write(os.path.join(cfg.out, rel), text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v).__name__)


def _stats(values) -> dict:
    v = np.asarray(values)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"min": None, "max": None, "mean": None}
    return {"min": float(v.min()), "max": float(v.max()), "mean": float(v.mean())}


# analyze


def classify(sample) -> tuple:
    """Overall label plus the per-order isotropy summary."""
    ff, m = sample.flag, sample.mask
    orders = []
    if np.max(ff.minimality[m]) > 1e-6:
        return "not minimal", orders
    if np.all(ff.rank[0][m] == 0):
        return "totally geodesic", orders
    iso_upto = 0
    for r in range(1, ff.depth + 1):
        if np.all(ff.rank[r - 1][m] == 0):
            break
        t = isotropy_classes(ff, r)
        agree = bool(np.all((t[0] == t[1]) & (t[1] == t[2])))
        iso = t[0][m]
        orders.append({"r": r, "isotropic_nodes": int(iso.sum()), "nonisotropic_nodes": int((~iso).sum()),
                       "tests_agree": agree})
        if np.all(iso) and iso_upto == r - 1:
            iso_upto = r
    last = len(orders)
    if last and iso_upto == last:
        return "isotropic", orders
    if iso_upto == 0:
        return "nonisotropic", orders
    return f"{iso_upto}-isotropic", orders


def _field_ids(ff) -> list:
    ids = ["F", "K", "conformality", "minimality"]
    for r in range(1, ff.depth + 1):
        ids += [f"{b}_{r}" for b in ("kappa", "mu", "Kperp", "a_plus", "a_minus", "alpha_norm", "hopf")]
    return ids


def cmd_analyze(cfg: RunConfig, args) -> int:
    spec, entry = _load_spec(args)
    grid = _grid_for(spec, cfg)
    sample = surface_sample(spec, grid, cfg.order)
    ff, m = sample.flag, sample.mask
    label, iso = classify(sample)
    report = {
        "name": spec.name,
        "ambient_dim": spec.ambient_dim,
        "grid": grid.to_json(),
        "order": cfg.order,
        "masked_fraction": float(1 - m.mean()),
        "K": _stats(ff.K[m]),
        "F": _stats(ff.F[m]),
        "conformality_max": float(np.max(ff.conformality_residual[m])),
        "minimality_max": float(np.max(ff.minimality[m])),
        "depth": ff.depth,
        "classification": label,
        "isotropy": iso,
        "orders": [],
    }
    if entry is not None:
        report["catalog_tag"] = entry.tag
    for r in range(1, ff.depth + 1):
        kappa, mu = ff.semi_axes(r)
        with np.errstate(all="ignore"):
            ecc = np.sqrt(np.maximum(kappa**2 - mu**2, 0)) / kappa
        report["orders"].append({
            "r": r,
            "rank_counts": {str(k): int(np.sum(ff.rank[r - 1][m] == k)) for k in (0, 1, 2)},
            "kappa": _stats(kappa[m]),
            "mu": _stats(mu[m]),
            "Kperp": _stats(ff.Kperp(r)[m]),
            "alpha_norm2": _stats(ff.alpha_norm2(r)[m]),
            "eccentricity": _stats(ecc[m]),
            "hopf_abs": _stats(np.abs(ff.hopf(r))[m]),
        })
    if spec.ambient_dim == 7:
        report["pseudoholomorphy_max"] = sample_field(spec, grid, "pseudoholomorphy", cfg.order).sup_norm()
    if args.topology:
        kind = entry.atlas if entry is not None else ("torus" if spec.periodic else None)
        if kind is None:
            raise UsageError("--topology needs a catalog entry or a periodic spec")
        report["topology"] = global_topology(spec, kind, max(cfg.grid), cfg.order)
    if "json" in cfg.formats:
        _write(cfg, "invariants.json", _dump(report))
    if "csv" in cfg.formats:
        names = []
        for fid in _field_ids(ff):
            fld = sample_field(spec, grid, fid, cfg.order)
            _write(cfg, f"fields/{fid}.csv", fld.to_csv())
            names.append((fid, np.iscomplexobj(fld.values)))
        _write(cfg, "fields/plot.gp", gnuplot_script(names))
    if args.emit_surface:
        S = sample_spec(spec, Grid.for_spec(spec, *cfg.grid, periodic=False))
        _write(cfg, "surface.txt", S.dumps())
    print(_dump({k: report[k] for k in ("name", "classification", "K", "depth")}), end="")
    return EXIT_OK


def gnuplot_script(names) -> str:
    lines = ["# gnuplot script: one heat map per invariant field", "set datafile separator ','",
             "set view map", "set key off", "set size ratio -1"]
    for fid, cplx in names:
        col = "(sqrt($3**2+$4**2))" if cplx else "3"
        lines += [f"set title '{fid}{' (modulus)' if cplx else ''}'",
                  f"splot '{fid}.csv' every ::1 using 1:2:{col} with points pointtype 5 pointsize 0.5 palette",
                  "pause -1"]
    return "\n".join(lines) + "\n"


# check


def cmd_check(cfg: RunConfig, args) -> int:
    ids = [s.strip() for s in (args.id or "").split(",") if s.strip()]
    if not ids:
        raise UsageError("give at least one identity with --id")
    unknown = [i for i in ids if i not in IDENTITIES]
    if unknown:
        raise UsageError(f"unknown identity {', '.join(unknown)}; known: {', '.join(IDENTITIES)}")
    spec, _ = _load_spec(args)
    grid = _grid_for(spec, cfg)
    status = EXIT_OK
    for ident in ids:
        rep = check_identity(spec, grid, ident, cfg.order)
        out = rep.to_json()
        out["name"] = spec.name
        if "json" in cfg.formats:
            _write(cfg, f"checks/{ident}.json", _dump(out))
        if "csv" in cfg.formats:
            _write(cfg, f"checks/{ident}.csv", rep.residual.to_csv())
            for key, fld in rep.margins.items():
                _write(cfg, f"checks/{ident}_{key}.csv", fld.to_csv())
        print(f"{ident}: {out['verdict']} (sup {rep.sup_norm:.3g}, tol {rep.tolerance:.3g})")
        if not rep.verdict:
            status = EXIT_FAIL
    return status


# deform


def _patch_grid(spec, cfg: RunConfig, patch) -> Grid:
    nx, ny = cfg.grid
    if patch:
        x0, x1, y0, y1 = patch
        return Grid(nx, ny, x0, x1, y0, y1)
    return Grid.for_spec(spec, nx, ny, periodic=False)


def cmd_deform(cfg: RunConfig, args) -> int:
    spec, _ = _load_spec(args)
    patch = parse_list(args.patch, "patch") if args.patch else None
    if patch is not None and len(patch) != 4:
        raise UsageError("--patch needs x0,x1,y0,y1")
    grid = _patch_grid(spec, cfg, patch)
    source = sample_spec(spec, grid)
    if args.polar:
        P = polar_surface(spec, grid)
        c = congruence(source, P)
        _write(cfg, "surface.txt", source.dumps())
        _write(cfg, "polar.txt", P.dumps())
        rep = {"name": spec.name, "polar": True, "congruence": c.to_json()}
        _write(cfg, "report.json", _dump(rep))
        print(f"polar surface of {spec.name}: congruence residual {c.residual:.3g} ({'congruent' if c.congruent else 'not congruent'})")
        return EXIT_OK
    if args.a is None or args.theta is None:
        raise UsageError("deform needs --a and --theta (or --polar)")
    try:
        dspec = DeformationSpec(parse_list(args.a, "weight"), parse_list(args.theta, "angle"))
    except InvalidInput as exc:
        raise UsageError(str(exc)) from None
    conn = source_connection(spec, grid)
    members = [associated_family(spec, th, grid, conn) for th in dspec.theta]
    G = direct_sum(members, dspec.a)
    iso = isometry_residual(source, G)
    mini = minimality_residual(G)
    sub = substantial_dimension(G)
    ok = iso < ISOMETRY_TOL and mini < MINIMALITY_TOL
    rep = {
        "name": spec.name,
        "grid": grid.to_json(),
        "a": list(dspec.a),
        "theta": list(dspec.theta),
        "nondegenerate_weights": dspec.nondegenerate,
        "ambient_dim": G.dim,
        "sphere_dim": G.dim - 1,
        "isometry_residual": iso,
        "minimality_residual": mini,
        "substantial_dimension": sub,
        "members": [{"theta": th, "drift": s.frames.drift, "path_difference": s.frames.path_difference,
                     "isometry_residual": isometry_residual(source, s)} for th, s in zip(dspec.theta, members)],
        "thresholds": {"isometry": ISOMETRY_TOL, "minimality": MINIMALITY_TOL},
        "verdict": "pass" if ok else "fail",
    }
    _write(cfg, "surface.txt", G.dumps())
    for k, s in enumerate(members):
        _write(cfg, f"members/member_{k + 1}.txt", s.dumps())
    _write(cfg, "report.json", _dump(rep))
    print(f"S^{G.dim - 1} surface: isometry {iso:.3g}, minimality {mini:.3g}, substantial dimension {sub}: {rep['verdict']}")
    return EXIT_OK if ok else EXIT_FAIL


# compare


def cmd_compare(cfg: RunConfig, args) -> int:
    A = load_surface(args.a_file)
    B = load_surface(args.b_file)
    c = congruence(A, B, match_derivatives=args.derivatives, pad=args.pad)
    out = c.to_json()
    out["files"] = [args.a_file, args.b_file]
    _write(cfg, "compare.json", _dump(out))
    print(_dump({k: out[k] for k in ("residual", "threshold", "verdict", "unique")}), end="")
    return EXIT_OK if c.congruent else EXIT_FAIL


# catalog


def cmd_catalog(cfg: RunConfig, args) -> int:
    if args.name:
        e = catalog.get_entry(args.name)
        if args.source:
            print(e.source, end="")
        else:
            print(_dump({"name": e.name, "tag": e.tag, "atlas": e.atlas, "minimal": e.minimal,
                         "ambient_dim": e.spec.ambient_dim, "expected": e.expected}), end="")
        return EXIT_OK
    for name, tag in catalog.list_entries():
        print(f"{name:20s} {tag}")
    return EXIT_OK


# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvelab", description="Moving-frame invariants of minimal surfaces in spheres.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, surface=True):
        if surface:
            sp.add_argument("file", nargs="?", help="surface definition file")
            sp.add_argument("--catalog", metavar="NAME")
            sp.add_argument("--spec", metavar="FILE")
        sp.add_argument("--grid", default="64x64", metavar="NXxNY")
        sp.add_argument("--order", type=int, default=6, metavar="K")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--format", default="json,csv", metavar="LIST")
        sp.add_argument("--tol-config", metavar="FILE", help="tolerance overrides (JSON)")

    a = sub.add_parser("analyze", help="invariant summary and field dumps")
    common(a)
    a.add_argument("--topology", action="store_true", help="also run the Gauss-Bonnet / Euler-number bookkeeping")
    a.add_argument("--emit-surface", action="store_true", help="write the sampled surface (non-periodic grid)")

    c = sub.add_parser("check", help="identity checks")
    common(c)
    c.add_argument("--id", metavar="ID[,ID...]")

    d = sub.add_parser("deform", help="associated-family direct sums and polar surfaces")
    common(d)
    d.add_argument("--a", metavar="LIST")
    d.add_argument("--theta", metavar="LIST")
    d.add_argument("--patch", metavar="x0,x1,y0,y1")
    d.add_argument("--polar", action="store_true", help="build the polar surface instead")

    m = sub.add_parser("compare", help="congruence of two sampled surfaces")
    common(m, surface=False)
    m.add_argument("a_file")
    m.add_argument("b_file")
    m.add_argument("--derivatives", action="store_true", help="also match first derivatives")
    m.add_argument("--pad", action="store_true", help="allow different ambient dimensions (zero padding)")

    k = sub.add_parser("catalog", help="list or show built-in surfaces")
    k.add_argument("name", nargs="?")
    k.add_argument("--source", action="store_true")
    return p


COMMANDS = {"analyze": cmd_analyze, "check": cmd_check, "deform": cmd_deform,
            "compare": cmd_compare, "catalog": cmd_catalog}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "catalog":
            cfg = None
        else:
            cfg = RunConfig(
                command=args.command,
                inputs=[v for v in (getattr(args, "file", None), getattr(args, "spec", None),
                                    getattr(args, "catalog", None)) if v],
                grid=parse_grid(args.grid),
                order=args.order,
                out=args.out,
                formats=tuple(f.strip() for f in args.format.split(",") if f.strip()),
                tol_config=args.tol_config,
            )
            if cfg.tol_config:
                if not os.path.exists(cfg.tol_config):
                    raise UsageError(f"tolerance config {cfg.tol_config} not found")
                os.environ["CURVELAB_TOL_CONFIG"] = cfg.tol_config
        return COMMANDS[args.command](cfg, args)
    except (UsageError, DSLError, InvalidInput, GridError) as exc:
        print(f"curvelab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, FloatingPointError) as exc:
        print(f"curvelab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
