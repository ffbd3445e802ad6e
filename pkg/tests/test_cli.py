import json

import numpy as np
import pytest
from scipy.stats import special_ortho_group

from curvelab.catalog import get_entry
from curvelab.cli import main
from curvelab.config import ENV_VAR
from curvelab.deform import SampledSurface, load_surface


def run(*argv):
    return main([str(a) for a in argv])


def test_analyze_torus(tmp_path):
    assert run("analyze", "--catalog", "flat_torus_s5", "--grid", "64x64", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "invariants.json").read_text())
    assert -1e-8 <= rep["K"]["min"] <= rep["K"]["max"] <= 1e-8
    assert rep["orders"][1]["rank_counts"]["1"] == 64 * 64
    assert (tmp_path / "fields" / "K.csv").exists()
    assert "splot" in (tmp_path / "fields" / "plot.gp").read_text()


@pytest.mark.parametrize(
    "name, label",
    [("geodesic_s2", "totally geodesic"), ("veronese3_s6", "isotropic"), ("small_sphere_s3", "not minimal")],
)
def test_analyze_classification(tmp_path, name, label):
    assert run("analyze", "--catalog", name, "--grid", "16x16", "--format", "json", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "invariants.json").read_text())["classification"] == label


def test_analyze_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("analyze", "--catalog", "veronese_s4", "--grid", "12x12", "--out", tmp_path / d) == 0
    for f in ("invariants.json", "fields/K.csv", "fields/plot.gp"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_analyze_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.srf"
    bad.write_text("dim 3;\nf = (x, y, @);\n")
    assert run("analyze", bad, "--out", tmp_path) == 2
    assert "line 2, column 12" in capsys.readouterr().err


def test_analyze_spec_file(tmp_path):
    src = tmp_path / "s.srf"
    src.write_text(get_entry("veronese_s4").source)
    assert run("analyze", "--spec", src, "--grid", "10x10", "--format", "json", "--out", tmp_path) == 0


@pytest.mark.parametrize("argv", [("--grid", "4x4"), ("--grid", "banana"), ("--order", "12"), ("--order", "2")])
def test_run_config_validation(tmp_path, argv):
    assert run("analyze", "--catalog", "veronese_s4", *argv, "--out", tmp_path) == 2


def test_no_input_is_usage_error(tmp_path):
    assert run("analyze", "--out", tmp_path) == 2
    assert run("analyze", "--catalog", "nosuch", "--out", tmp_path) == 2


def test_check_pass_and_fail(tmp_path):
    assert run("check", "--catalog", "veronese3_s6", "--id", "starstar", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "checks" / "starstar.json").read_text())["verdict"] == "pass"
    assert run("check", "--catalog", "veronese3_s6", "--id", "star", "--out", tmp_path) == 1
    star = json.loads((tmp_path / "checks" / "star.json").read_text())
    assert star["verdict"] == "fail"
    assert star["sup_norm"] == pytest.approx(1.0, abs=1e-3)


def test_check_unknown_identity(tmp_path):
    assert run("check", "--catalog", "veronese3_s6", "--id", "nosuch", "--out", tmp_path) == 2


def test_check_inapplicable_is_numeric_failure(tmp_path):
    assert run("check", "--catalog", "geodesic_s2", "--id", "star", "--out", tmp_path) == 3


def test_tolerance_override(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_VAR, "")
    cfg = tmp_path / "tol.json"
    cfg.write_text(json.dumps({"star": {"C": 0.0, "floor": 2.0}}))
    assert run("check", "--catalog", "veronese3_s6", "--id", "star", "--tol-config", cfg, "--out", tmp_path) == 0
    monkeypatch.setenv(ENV_VAR, str(cfg))
    assert run("check", "--catalog", "veronese3_s6", "--id", "star", "--out", tmp_path) == 0
    monkeypatch.setenv(ENV_VAR, "")
    assert run("check", "--catalog", "veronese3_s6", "--id", "star", "--out", tmp_path) == 1


def test_deform_direct_sum(tmp_path):
    code = run("deform", "--catalog", "flat_torus_s5", "--a", "0.6,0.8", "--theta", "0,1.0471975512", "--out", tmp_path)
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["substantial_dimension"] == 12
    assert rep["isometry_residual"] < 1e-6 and rep["minimality_residual"] < 1e-5
    S = load_surface(tmp_path / "surface.txt")
    assert S.dim == 12
    assert (tmp_path / "members" / "member_1.txt").exists()


@pytest.mark.parametrize("a, theta", [("0.6,0.7", "0,1"), ("0.6,0.8", "1.0,0.5"), ("0.6,0.8", "0"), ("x", "0")])
def test_deform_rejects_bad_data(tmp_path, a, theta):
    assert run("deform", "--catalog", "flat_torus_s5", "--a", a, "--theta", theta, "--out", tmp_path) == 2


def test_compare(tmp_path):
    assert run("deform", "--catalog", "flat_torus_s5", "--polar", "--grid", "24x24", "--out", tmp_path / "p") == 0
    g, star = tmp_path / "p" / "surface.txt", tmp_path / "p" / "polar.txt"
    assert run("compare", g, star, "--out", tmp_path / "c") == 0
    rep = json.loads((tmp_path / "c" / "compare.json").read_text())
    assert rep["verdict"] == "congruent"

    S = load_surface(g)
    Q = special_ortho_group.rvs(6, random_state=11)
    rot = tmp_path / "rot.txt"
    SampledSurface(S.grid, S.points @ Q.T).save(rot)
    assert run("compare", g, rot, "--out", tmp_path / "c") == 0
    rep = json.loads((tmp_path / "c" / "compare.json").read_text())
    assert rep["residual"] < 1e-10
    assert np.allclose(rep["Q"], Q, atol=1e-8)

    assert run("analyze", "--catalog", "veronese3_s6", "--grid", "24x24", "--emit-surface", "--format", "json",
               "--out", tmp_path / "v") == 0
    sphere = tmp_path / "v" / "surface.txt"
    assert run("compare", g, sphere, "--out", tmp_path / "c") == 2
    assert run("compare", g, sphere, "--pad", "--out", tmp_path / "c") == 1


def test_compare_grid_mismatch(tmp_path):
    for n in (12, 14):
        assert run("analyze", "--catalog", "veronese_s4", "--grid", f"{n}x{n}", "--emit-surface", "--format", "json",
                   "--out", tmp_path / str(n)) == 0
    assert run("compare", tmp_path / "12" / "surface.txt", tmp_path / "14" / "surface.txt") == 2


def test_catalog_listing(capsys):
    assert run("catalog") == 0
    out = capsys.readouterr().out
    assert "veronese3_s6" in out and "isotropic_s6" in out
    assert run("catalog", "geodesic_s2", "--source") == 0
    assert "dim 3;" in capsys.readouterr().out
    assert run("catalog", "nosuch") == 2


def test_unknown_command():
    assert run("frobnicate") == 2
