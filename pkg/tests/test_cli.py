"""End-to-end CLI behavior, run in-process through main(argv)."""

import csv
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from probleak import schemas
from probleak.cli import main


@pytest.fixture()
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    rng = np.random.default_rng(9)
    x = rng.uniform(0.0, 1.0, 40)
    y = 0.2 + 0.3 * x + rng.normal(0.0, 0.5, 40)
    rows = ["y,x1"] + [f"{repr(float(yi))},{repr(float(xi))}" for yi, xi in zip(y, x)]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


@pytest.fixture()
def cc_csv(tmp_path):
    path = tmp_path / "cc.csv"
    code = main(["simulate", "callcenter", "--out", str(path)])
    assert code == 0
    return str(path)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def check(name, text):
    doc = json.loads(text)
    jsonschema.validate(doc, schemas.load(name))
    return doc


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_version_exits_zero(capsys):
    code, out, _ = run(capsys, ["--version"])
    assert code == 0
    assert out.startswith("probleak ")


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, ["--help"])
    assert code == 0
    assert "leak-profile" in out


def test_unknown_subcommand_is_usage_error(capsys):
    code, _, err = run(capsys, ["frobnicate"])
    assert code == 1
    assert err != ""


def test_bad_support_string_is_usage_error(capsys, toy_csv):
    code, _, err = run(
        capsys,
        ["leak", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--support", "bogus"],
    )
    assert code == 1
    assert "support" in err


def test_missing_file_is_data_error(capsys):
    code, _, err = run(
        capsys, ["fit", "--data", "/nonexistent.csv", "--response", "y"]
    )
    assert code == 2
    assert "probleak: error:" in err


def test_json_errors_flag_moves_error_to_stdout(capsys):
    code, out, err = run(
        capsys,
        ["fit", "--data", "/nonexistent.csv", "--response", "y", "--json-errors"],
    )
    assert code == 2
    assert err == ""
    check("error", out)


def test_model_error_exits_two(capsys, tmp_path):
    # n = p: no residual degrees of freedom
    path = tmp_path / "tiny.csv"
    path.write_text("y,x1\n1.0,0.0\n2.0,1.0\n")
    code, out, _ = run(
        capsys,
        ["fit", "--data", str(path), "--response", "y", "--covariates", "x1",
         "--json-errors"],
    )
    assert code == 2
    assert "posterior improper" in json.loads(out)["error"]


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def test_fit_summary_document(capsys, toy_csv):
    code, out, _ = run(
        capsys, ["fit", "--data", toy_csv, "--response", "y", "--covariates", "x1"]
    )
    assert code == 0
    doc = check("fit_summary", out)
    assert doc["n"] == 40
    assert doc["p"] == 2
    assert doc["df"] == 38
    assert set(doc["coefficients"]) == {"(intercept)", "x1"}
    assert doc["s2"] > 0.0


def test_fit_hand_values(capsys, tmp_path):
    path = tmp_path / "hand.csv"
    path.write_text("y,x\n1.0,1.0\n1.0,2.0\n4.0,3.0\n")
    code, out, _ = run(
        capsys, ["fit", "--data", str(path), "--response", "y", "--covariates", "x"]
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["coefficients"]["(intercept)"] == pytest.approx(-1.0, abs=1e-12)
    assert doc["coefficients"]["x"] == pytest.approx(1.5, abs=1e-12)
    assert doc["s2"] == pytest.approx(1.5, abs=1e-12)


def test_out_writes_file_and_keeps_stdout_quiet(capsys, toy_csv, tmp_path):
    out_path = tmp_path / "fit.json"
    code, out, _ = run(
        capsys,
        ["fit", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--out", str(out_path)],
    )
    assert code == 0
    assert out == ""
    check("fit_summary", out_path.read_text())


# ---------------------------------------------------------------------------
# leak
# ---------------------------------------------------------------------------


def test_leak_document_medians(capsys, toy_csv):
    code, out, _ = run(
        capsys,
        ["leak", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--support", "[0,inf)"],
    )
    assert code == 0
    doc = check("leak_report", out)
    assert doc["at"] == "medians"
    assert len(doc["reports"]) == 1
    rep = doc["reports"][0]
    assert 0.0 < rep["leakage"] < 1.0
    assert rep["below_mass"] == rep["leakage"]
    assert rep["above_mass"] == 0.0


def test_leak_at_json_point(capsys, toy_csv):
    code, out, _ = run(
        capsys,
        ["leak", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--support", "[0,inf)", "--at", '{"x1": 0.0}'],
    )
    assert code == 0
    doc = check("leak_report", out)
    assert doc["at"] == "point"
    assert doc["reports"][0]["x_star"] == {"x1": 0.0}


def test_leak_categorical_expands_levels(capsys, cc_csv):
    code, out, _ = run(
        capsys,
        ["leak", "--data", cc_csv, "--response", "abandonment",
         "--covariates", "calls,absentees,location", "--support", "[0,inf)",
         "--at", "minima"],
    )
    assert code == 0
    doc = check("leak_report", out)
    assert [r["x_star"]["location"] for r in doc["reports"]] == ["A", "B"]


# ---------------------------------------------------------------------------
# leak-profile
# ---------------------------------------------------------------------------


def test_leak_profile_csv(capsys, toy_csv):
    code, out, _ = run(
        capsys,
        ["leak-profile", "--data", toy_csv, "--response", "y",
         "--covariates", "x1", "--support", "[0,inf)",
         "--grid", "x1=0:1:11"],
    )
    assert code == 0
    rows = list(csv.reader(out.strip().splitlines()))
    assert rows[0] == ["x1", "leakage"]
    assert len(rows) == 12
    xs = [float(r[0]) for r in rows[1:]]
    assert xs == pytest.approx(list(np.linspace(0, 1, 11)))
    leaks = [float(r[1]) for r in rows[1:]]
    assert all(0.0 <= v <= 1.0 for v in leaks)


def test_leak_profile_bad_grid_is_usage_error(capsys, toy_csv):
    code, _, err = run(
        capsys,
        ["leak-profile", "--data", toy_csv, "--response", "y",
         "--covariates", "x1", "--support", "[0,inf)", "--grid", "x1=0-1-5"],
    )
    assert code == 1
    assert "grid" in err


def test_leak_profile_unpinned_categorical_is_usage_error(capsys, cc_csv):
    code, _, err = run(
        capsys,
        ["leak-profile", "--data", cc_csv, "--response", "abandonment",
         "--covariates", "calls,absentees,location", "--support", "[0,inf)",
         "--grid", "calls=200:2900:5"],
    )
    assert code == 1
    assert "location" in err


# ---------------------------------------------------------------------------
# falsify
# ---------------------------------------------------------------------------


def test_falsify_point_mode_continuous_always(capsys, toy_csv):
    # a continuous predictive puts probability exactly zero on every point,
    # so the strict rule falsifies it on any exact observation
    code, out, _ = run(
        capsys,
        ["falsify", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--value", "-0.5"],
    )
    assert code == 0
    doc = check("falsification_verdict", out)
    assert doc["falsified"] is True
    assert doc["mode"] == "point_event"
    assert doc["witness"]["value"] == -0.5


def test_falsify_interval_mode(capsys, toy_csv):
    code, out, _ = run(
        capsys,
        ["falsify", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--value", "-0.5", "--mode", "interval", "--resolution", "0.1"],
    )
    assert code == 0
    doc = check("falsification_verdict", out)
    assert doc["mode"] == "interval_event"
    assert doc["falsified"] is False  # t tail is positive on [-0.55, -0.45]


def test_falsify_interval_without_resolution_is_usage_error(capsys, toy_csv):
    code, _, err = run(
        capsys,
        ["falsify", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--value", "-0.5", "--mode", "interval"],
    )
    assert code == 1
    assert "resolution" in err


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------


def test_calibrate_document_and_curves(capsys, tmp_path):
    data = tmp_path / "sim.csv"
    assert main(["simulate", "truncated", "--out", str(data)]) == 0
    prefix = str(tmp_path / "cal")
    code, out, _ = run(
        capsys,
        ["calibrate", "--data", str(data), "--response", "y",
         "--covariates", "x1", "--holdout", "0.25", "--curves", prefix],
    )
    assert code == 0
    doc = check("calibration_report", out)
    assert doc["holdout_fraction"] == 0.25
    assert doc["n_train"] == 1500
    assert doc["n_holdout"] == 500
    assert len(doc["pit_values"]) == 500
    assert doc["seed"] == 0
    for kind in ("probability", "exceedance", "marginal"):
        text = (tmp_path / f"cal_{kind}.csv").read_text()
        assert len(text.strip().splitlines()) > 1


def test_calibrate_seed_changes_split(capsys, toy_csv):
    _, out_a, _ = run(
        capsys,
        ["calibrate", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--holdout", "0.3"],
    )
    _, out_a2, _ = run(
        capsys,
        ["calibrate", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--holdout", "0.3"],
    )
    _, out_b, _ = run(
        capsys,
        ["calibrate", "--data", toy_csv, "--response", "y", "--covariates", "x1",
         "--holdout", "0.3", "--seed", "7"],
    )
    assert out_a == out_a2
    assert json.loads(out_a)["pit_values"] != json.loads(out_b)["pit_values"]


def test_calibrate_holdout_bounds(capsys, toy_csv):
    for frac in ("0", "1", "-0.2"):
        code, _, err = run(
            capsys,
            ["calibrate", "--data", toy_csv, "--response", "y",
             "--covariates", "x1", "--holdout", frac],
        )
        assert code == 1
        assert "holdout" in err


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_truncated_csv(capsys):
    code, out, _ = run(capsys, ["simulate", "truncated"])
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "y,x1"
    assert len(rows) == 2001
    ys = np.array([float(r.split(",")[0]) for r in rows[1:]])
    assert ys.min() >= 0.0


def test_simulate_seed_override_changes_data(capsys):
    _, out_a, _ = run(capsys, ["simulate", "truncated"])
    _, out_b, _ = run(capsys, ["simulate", "truncated", "--seed", "5"])
    _, out_b2, _ = run(capsys, ["simulate", "truncated", "--seed", "5"])
    assert out_a != out_b
    assert out_b == out_b2


def test_simulate_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 25, "seed": 4}))
    code, out, _ = run(capsys, ["simulate", "truncated", "--config", str(cfg)])
    assert code == 0
    assert len(out.strip().splitlines()) == 26


def test_simulate_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, out, _ = run(
        capsys, ["simulate", "truncated", "--config", str(cfg), "--json-errors"]
    )
    assert code == 2
    assert "bogus" in json.loads(out)["error"]


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def test_report_document_and_curves(capsys, cc_csv, tmp_path):
    curves = tmp_path / "curves.csv"
    code, out, _ = run(
        capsys,
        ["report", "--data", cc_csv, "--response", "abandonment",
         "--covariates", "calls,absentees,location", "--support", "[0,inf)",
         "--out-curves", str(curves)],
    )
    assert code == 0
    doc = check("audit_report", out)
    assert doc["model"]["n"] == 104
    assert 0.0 < doc["leakage"]["null_x"]["leakage"] < 1.0
    med = doc["leakage"]["at_medians"]
    assert [r["x_star"]["location"] for r in med] == ["A", "B"]
    # point mode: the continuous predictive is falsified by the first
    # training observation it sees
    assert doc["falsification"]["falsified"] is True
    assert "witness" in doc["falsification"]
    assert doc["calibration"]["n_cases"] == 104
    assert doc["curves_file"] == str(curves)

    rows = list(csv.reader(curves.read_text().strip().splitlines()))
    header = rows[0]
    assert header[0] == "y" and header[-1] == "marker"
    assert "density_null" in header
    ys = [float(r[0]) for r in rows[1:]]
    assert ys == sorted(ys)
    markers = [r[-1] for r in rows[1:]]
    assert markers.count("support_bound") == 1
    bound_row = rows[1 + markers.index("support_bound")]
    assert float(bound_row[0]) == 0.0


def test_report_pipeline_is_deterministic(capsys, tmp_path):
    outputs = []
    for tag in ("a", "b"):
        data = tmp_path / f"{tag}.csv"
        assert main(["simulate", "truncated", "--out", str(data)]) == 0
        code, out, _ = run(
            capsys,
            ["leak", "--data", str(data), "--response", "y",
             "--covariates", "x1", "--support", "[0,inf)", "--at",
             '{"x1": 1.0}'],
        )
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]


# ---------------------------------------------------------------------------
# installed entry point
# ---------------------------------------------------------------------------


def test_console_script_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "probleak.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("probleak ")
