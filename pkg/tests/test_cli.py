from __future__ import annotations

import json
import subprocess
import sys

import pytest

from urywidth.cli import EXIT_BUILD, EXIT_CERT, EXIT_OK, EXIT_USAGE, main


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


def test_triangulate_outputs(tmp_path):
    assert run(tmp_path, "triangulate", "--dim", "2", "--eps", "0.5", "--cells", "4", "--seed", "1") == EXIT_OK
    rep = json.loads((tmp_path / "shape_report.json").read_text())
    assert rep["rainbow_fraction"] == 1.0 and rep["c_n"] >= 1
    assert (tmp_path / "complex.ply").exists() and (tmp_path / "complex.ply.json").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["triangulate", "--dim", "0", "--eps", "0.5"],
        ["triangulate", "--dim", "2", "--eps", "-1"],
        ["triangulate", "--dim", "2"],
        ["triangulate", "--dim", "2", "--eps", "0.5", "--periodic", "x"],
        ["blowup", "--l", "1", "--k", "2", "--dim", "4"],
        ["certify", "reeb", "--space", "sphere", "--center", "-3"],
        ["bogus"],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert run(tmp_path, *argv) == EXIT_USAGE


def test_periodic_too_short_is_build_failure(tmp_path):
    # 4 cells of 0.25 give period 1, below the requested minimum of 4
    code = run(tmp_path, "triangulate", "--dim", "2", "--eps", "0.25", "--cells", "4", "--periodic", "all", "--min-period", "4")
    assert code == EXIT_BUILD


def test_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["estimate", "reeb", "--space", "sphere", "--resolution", "3", "--scale", "0.4", "--out-dir", str(d)]) == 0
    for name in ("reeb.json", "reeb.csv", "reeb.dot", "reeb.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_layering(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('seed = 3\n[triangulate]\ndim = 2\neps = 0.5\ncells = 2\n')
    assert run(tmp_path, "triangulate", "--config", str(cfg), "--cells", "3") == EXIT_OK
    rep = json.loads((tmp_path / "shape_report.json").read_text())
    # 3 cells (flag wins over the config's 2): 3^2 squares, 2 triangles each, 6 flags per triangle
    assert rep["f_vector"][2] == 9 * 2 * 6


def test_config_errors(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[triangulate]\ndim = 2\neps = 0.5\n")
    assert run(tmp_path, "triangulate", "--config", str(cfg)) == EXIT_USAGE  # no seed
    cfg.write_text("seed = 1\n[triangulate]\ndim = 2\neps = 0.5\nwobble = 1\n")
    assert run(tmp_path, "triangulate", "--config", str(cfg)) == EXIT_USAGE
    cfg.write_text("seed = = 1\n")
    assert run(tmp_path, "triangulate", "--config", str(cfg)) == EXIT_USAGE
    assert run(tmp_path, "triangulate", "--config", str(tmp_path / "missing.toml")) == EXIT_USAGE


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("URYWIDTH_THREADS", "zero")
    assert run(tmp_path, "triangulate", "--dim", "1", "--eps", "0.5") == EXIT_USAGE
    monkeypatch.setenv("URYWIDTH_THREADS", "1")
    assert run(tmp_path, "triangulate", "--dim", "1", "--eps", "0.5") == EXIT_OK


def test_certify_and_report(tmp_path):
    assert run(tmp_path / "w", "certify", "winding") == EXIT_OK
    assert run(tmp_path / "r", "certify", "reeb", "--space", "sphere", "--resolution", "3", "--scale", "0.4") == EXIT_OK
    files = [str(tmp_path / "w" / "winding.json"), str(tmp_path / "r" / "reeb.json")]
    assert run(tmp_path / "rep", "report", *files) == EXIT_OK
    # forge a contradicting lower bound on the sphere
    data = json.loads((tmp_path / "r" / "reeb.json").read_text())
    cert = dict(data["certificates"][0], kind="lower", value=50.0, method="forged")
    forged = tmp_path / "forged.json"
    forged.write_text(json.dumps(cert))
    assert run(tmp_path / "rep2", "report", *files, str(forged)) == EXIT_CERT
    out = json.loads((tmp_path / "rep2" / "consistency_report.json").read_text())
    assert len(out["violations"]) == 1


def test_export_and_convert(tmp_path):
    assert run(tmp_path, "export", "--fixture", "sphere", "--resolution", "2", "--output", "s.off") == EXIT_OK
    assert run(tmp_path, "export", "--input", str(tmp_path / "s.off"), "--output", "s.ply") == EXIT_OK
    assert run(tmp_path, "export", "--output", "x.off") == EXIT_USAGE


def test_pipeline_cli(tmp_path):
    assert run(tmp_path, "estimate", "pipeline", "--space", "genus2", "--resolution", "4") == EXIT_OK
    res = json.loads((tmp_path / "pipeline.json").read_text())
    assert res["status"] == "contradiction"
    assert (tmp_path / "planar_image.svg").exists()


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "urywidth.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "certify" in out.stdout


def test_certify_local_width_level_set(tmp_path):
    rc = run(tmp_path, "certify", "local-width", "--space", "level-set", "--eps", "0.25", "--balls", "3", "--d", "1")
    assert rc == EXIT_OK
    data = json.loads(next(tmp_path.glob("*.json")).read_text())
    assert len(data["certificates"]) == 3
    assert run(tmp_path / "bad", "certify", "local-width", "--space", "level-set", "--eps", "0.25", "--d", "2") == EXIT_USAGE


def test_reeb_level_set_full_period(tmp_path):
    assert run(tmp_path, "estimate", "reeb", "--space", "level-set") == EXIT_OK
    cert = json.loads((tmp_path / "reeb.json").read_text())["certificates"][0]
    assert cert["space"] == "level-set-n2-eps1.0-P4.0"
    assert cert["value"] >= 0.5


def test_report_skips_non_certificates(tmp_path):
    assert run(tmp_path / "w", "certify", "winding") == EXIT_OK
    assert run(tmp_path / "e", "export", "--fixture", "sphere", "--resolution", "2", "--output", "s.off") == EXIT_OK
    files = [str(tmp_path / "w" / "winding.json"), str(tmp_path / "e" / "s.off.json")]
    assert run(tmp_path / "rep", "report", *files) == EXIT_OK
    out = json.loads((tmp_path / "rep" / "consistency_report.json").read_text())
    assert len(out["certificates"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "upper", "method": "x"}))
    assert run(tmp_path / "rep2", "report", str(bad)) == EXIT_USAGE
