"""
Tests for the command-line interface.
"""
import json

import pytest

from app.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, run
from app.core.exceptions import NonConvergence
from app.services.ground_state import GroundStateService


def test_state_text(capsys):
    """Critical 𝒯-graph at large frequency is stable."""
    assert run(["state", "--graph", "t", "--p", "6", "--lambda", "100"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "verdict=stable" in out
    assert "theta1=" in out


def test_state_json(capsys):
    """--json prints one document with the record, the verdict and provenance."""
    assert run(["state", "--graph", "tadpole", "--p", "4", "--lambda", "0.5", "--json"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["record"]["lambda"] == 0.5
    assert document["record"]["params"]["graph"] == "tadpole"
    assert document["verdict"]["kind"] == "stable"
    assert document["provenance"]["tolerances"]["QUAD_TOL"] == 1e-10
    assert document["provenance"]["ranges"]["SCAN_POINTS"] == 128


@pytest.mark.parametrize("argv", [
    ["state", "--p", "4"],
    ["state", "--p", "1.5", "--lambda", "1"],
    ["state", "--p", "4", "--lambda", "-1"],
    ["state", "--p", "4", "--lambda", "1", "--quad-tol", "-1"],
    ["state", "--p", "4", "--lambda", "1", "--workers", "0"],
    ["state", "--graph", "raw", "--p", "4", "--lambda", "1"],
    ["asymptotics", "--regime", "lambda-small", "--p", "6"],
    ["oracle", "--p", "4", "--zmin", "0.5", "--zmax", "2.0"],
    ["diagram", "--pmin", "5", "--pmax", "4", "--csv", "unused.csv"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    """Rejected flag combinations exit with 2 before computing anything."""
    assert run(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_tolerance_override(capsys):
    """Overridden tolerances show up in the provenance."""
    assert run(["state", "--p", "4", "--lambda", "1", "--json", "--quad-tol", "1e-9"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["provenance"]["tolerances"]["QUAD_TOL"] == 1e-9
    assert "--quad-tol" in document["provenance"]["command"]


def test_diagram_files(tmp_path, capsys):
    """Tiny grid: CSV has one row per cell, PPM is a valid P6 raster, output is reproducible."""
    csv_path, ppm_path = tmp_path / "diagram.csv", tmp_path / "diagram.ppm"
    argv = [
        "diagram", "--graph", "tadpole", "--pmin", "3", "--pmax", "4", "--ny", "2",
        "--lmin", "0.1", "--lmax", "10", "--nx", "3", "--workers", "1",
        "--csv", str(csv_path), "--ppm", str(ppm_path),
    ]
    assert run(argv) == EXIT_OK
    assert "stable=6" in capsys.readouterr().out

    lines = csv_path.read_text().splitlines()
    assert [line.startswith("#") for line in lines[:4]] == [True, True, True, True]
    assert lines[3].startswith("# ranges: ")
    assert "DIAGRAM_LAMBDA_MIN=0.1" in lines[3] and "DIAGRAM_NY=2" in lines[3]
    assert lines[4] == "p,lambda,verdict,dtheta_dlambda,lambda_star"
    rows = lines[5:]
    assert len(rows) == 6
    assert rows[0].split(",")[:3] == ["3", "0.10000000000000001", "stable"]

    raster = ppm_path.read_bytes()
    assert raster.startswith(b"P6\n")
    assert b"\n3 2\n255\n" in raster
    assert len(raster.split(b"\n255\n", 1)[1]) == 3 * 2 * 3

    first = (csv_path.read_bytes(), raster)
    assert run(argv) == EXIT_OK
    assert (csv_path.read_bytes(), ppm_path.read_bytes()) == first


def test_profile_file(tmp_path, capsys):
    path = tmp_path / "out" / "profile.csv"
    assert run(["profile", "--graph", "t", "--p", "4", "--lambda", "2", "--csv", str(path)]) == EXIT_OK
    assert "vertex_value=" in capsys.readouterr().out
    lines = path.read_text().splitlines()
    assert lines[4].startswith("# vertex_value=")
    assert lines[5] == "edge,x,u"
    assert {line.split(",")[0] for line in lines[6:]} == {"h1", "h2", "e1"}


def test_oracle_stdout(capsys):
    assert run(["oracle", "--graph", "t", "--p", "4", "--n", "2", "--workers", "1"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    header = lines.index(next(line for line in lines if line.startswith("p,theta,z")))
    assert len(lines) - header - 1 == 2


def test_asymptotics_report(tmp_path, capsys):
    out = tmp_path / "check.json"
    argv = ["asymptotics", "--regime", "lambda-large", "--graph", "t", "--p", "4", "--out", str(out)]
    assert run(argv) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["check"]["pass"] is True
    assert json.loads(out.read_text())["check"]["regime"] == "lambda-large"


def test_computation_failure_exit_code(monkeypatch, capsys):
    """Numerical failures map to exit code 1."""
    def broken(self, *args, **kwargs):
        raise NonConvergence("forced failure")

    monkeypatch.setattr(GroundStateService, "assemble", broken)
    assert run(["state", "--p", "4", "--lambda", "1"]) == EXIT_FAILURE


@pytest.mark.slow
def test_transitions_json(capsys):
    assert run(["transitions", "--graph", "t", "--p", "6.05", "--json"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["report"]["pattern"] == "USU"
    assert len(document["report"]["sign_changes"]) == 2
