"""Command-line behaviour: exit codes, output files, manifests, sweeps and figures."""
import csv
import json

import pytest

from nlslab.cli import EVOLVE_COLUMNS, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, VIRIAL_COLUMNS, run


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_validate_reports_resonance(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert run(["validate", "--spec", "quadratic(kappa=0.5)", "--n", "1", "--out", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["mass_resonant"] is True
    assert payload["all_pass"] is True
    assert "mass_resonant=true" in capsys.readouterr().out


def test_ground_state_residual_and_profile(tmp_path):
    out = tmp_path / "gs.json"
    code = run(["ground-state", "--spec", "single_cubic", "--n", "1", "--N", "1024", "--L", "20",
                "--out", str(out)])
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["residual"] < 1e-8
    assert (tmp_path / "gs.nlsfld").exists()


def test_evolve_requires_t_end(tmp_path, capsys):
    code = run(["evolve", "--spec", "cubic(sigma=3,mu=1)", "--n", "2", "--out", str(tmp_path / "e.csv")])
    assert code == EXIT_USAGE
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("nlslab: error kind=usage exit=3")


@pytest.mark.parametrize("argv", [
    ["validate", "--spec", "no_such_preset"],
    ["evolve", "--spec", "quadratic(kappa=0.5)", "--n", "1", "--N", "100", "--t-end", "0.1"],
])
def test_usage_errors(tmp_path, argv):
    assert run(argv + ["--out", str(tmp_path / "x.out")]) == EXIT_USAGE


def test_pseudo_conformal_rejects_quadratic(tmp_path):
    code = run(["pseudo-conformal", "--spec", "quadratic(kappa=0.5)", "--n", "2", "--N", "64", "--L", "8",
                "--out", str(tmp_path / "pc.csv")])
    assert code == EXIT_VALIDATION


def _evolve(tmp_path, name, extra=()):
    out = tmp_path / name
    argv = ["evolve", "--spec", "quadratic(kappa=0.5)", "--n", "1", "--N", "128", "--L", "20",
            "--t-end", "0.05", "--dt", "1e-3", "--out", str(out), *extra]
    assert run(argv) == EXIT_OK
    return out


def test_evolve_csv_and_manifest_deterministic(tmp_path):
    a = _evolve(tmp_path, "a.csv")
    rows = _csv(a)
    assert rows[0] == EVOLVE_COLUMNS
    assert len(rows) > 2
    first = json.loads((tmp_path / "a.manifest.json").read_text())
    assert not {"timestamp", "created", "date", "time"} & set(first)
    assert first["seed"] == 42 and first["spec_hash"]
    b = _evolve(tmp_path, "a.csv")
    assert b.read_bytes() == a.read_bytes()
    assert json.loads((tmp_path / "a.manifest.json").read_text()) == first


def test_virial_check_columns(tmp_path):
    out = tmp_path / "vir.csv"
    code = run(["virial-check", "--spec", "quadratic(kappa=0.5)", "--n", "1", "--N", "128", "--L", "20",
                "--t-end", "0.05", "--out", str(out)])
    assert code == EXIT_OK
    assert _csv(out)[0] == VIRIAL_COLUMNS


def test_figures_written(tmp_path):
    out = _evolve(tmp_path, "fig.csv", ["--figures"])
    png = tmp_path / "fig_series.png"
    assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"
    manifest = json.loads((tmp_path / "fig.manifest.json").read_text())
    assert any(str(png).endswith(p.split("/")[-1]) for p in manifest["outputs"])
    assert out.exists()


def test_sweep_runs_each_value(tmp_path):
    out = tmp_path / "s.json"
    code = run(["validate", "--spec", "quadratic(kappa=0.5)", "--n", "1", "--out", str(out),
                "--sweep", "kappa=0.5,1.0"])
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "s.manifest.json").read_text())
    assert [r["value"] for r in summary["runs"]] == ["0.5", "1.0"]
    flags = [json.loads((tmp_path / f"s_kappa-{v}.json").read_text())["mass_resonant"] for v in ("0.5", "1.0")]
    assert flags == [True, False]
