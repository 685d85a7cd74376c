import csv
import json
from dataclasses import replace

import numpy as np
import pytest
from click.testing import CliRunner

from physbc.barrier import BarrierCertificate
from physbc.cli import REFERENCE_RESULTS, _drift, main, reference_config
from physbc.config import (
    LipschitzSpec,
    SamplingSpec,
    ValidationSpec,
    preset,
)


def small_config_dict():
    config = replace(
        preset("supply-demand"),
        sampling=SamplingSpec(count=4000, seed=2024),
        lipschitz=LipschitzSpec(pair_budget=100_000),
        validation=ValidationSpec(trajectories=50, horizon=100, seed=99),
    )
    return config.to_dict()


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("config") / "run.json"
    path.write_text(json.dumps(small_config_dict()))
    return str(path)


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, config_path):
    out = tmp_path_factory.mktemp("artifacts") / "out"
    result = CliRunner().invoke(main, ["run", "--config", config_path, "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


# ----------------------------------------------------------------------- run


def test_run_writes_artifacts_and_passes(run_dir):
    assert (run_dir / "report.json").exists()
    assert (run_dir / "certificate.json").exists()
    assert (run_dir / "dataset.csv").exists()
    report = json.loads((run_dir / "report.json").read_text())
    assert report["verdict"] == "pass"


def test_run_prints_summary(config_path, tmp_path):
    result = CliRunner().invoke(
        main, ["run", "--config", config_path, "--out", str(tmp_path / "o")]
    )
    assert result.exit_code == 0
    assert "retained" in result.output
    assert "verdict: pass" in result.output


def test_run_needs_exactly_one_source(config_path, tmp_path):
    runner = CliRunner()
    both = runner.invoke(main, [
        "run", "--config", config_path, "--preset", "supply-demand",
        "--out", str(tmp_path / "a")])
    assert both.exit_code == 1
    neither = runner.invoke(main, ["run", "--out", str(tmp_path / "b")])
    assert neither.exit_code == 1


def test_run_rejects_malformed_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = CliRunner().invoke(main, ["run", "--config", str(bad),
                                       "--out", str(tmp_path / "o")])
    assert result.exit_code == 1


def test_run_preset_with_overrides(tmp_path):
    out = tmp_path / "preset-out"
    result = CliRunner().invoke(
        main, ["run", "--preset", "supply-demand", "--seed", "11", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["sampling"]["seed"] == 11
    assert report["verdict"] == "pass"


# ------------------------------------------------------------------ validate


def test_validate_passes_on_fresh_artifacts(run_dir, config_path):
    result = CliRunner().invoke(main, [
        "validate",
        "--certificate", str(run_dir / "certificate.json"),
        "--config", config_path,
        "--trajectories", "50", "--horizon", "100",
    ])
    assert result.exit_code == 0, result.output
    assert "verdict: pass" in result.output


def test_validate_flags_tampered_certificate(run_dir, config_path, tmp_path):
    cert = json.loads((run_dir / "certificate.json").read_text())
    cert["unsafe_level"] = cert["initial_level"] - 1.0
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(cert))
    result = CliRunner().invoke(main, [
        "validate", "--certificate", str(tampered), "--config", config_path,
        "--trajectories", "10", "--horizon", "20",
    ])
    assert result.exit_code == 2
    assert "VIOLATED" in result.output


# ------------------------------------------------------------------ plotdata


def test_plotdata_series_are_consistent(run_dir, tmp_path):
    out = tmp_path / "plots"
    result = CliRunner().invoke(main, [
        "plotdata", "--report", str(run_dir / "report.json"),
        "--out", str(out), "--points", "64",
    ])
    assert result.exit_code == 0, result.output
    for name in ("barrier_curve.csv", "levels.csv", "samples.csv"):
        assert (out / name).exists(), name

    report = json.loads((run_dir / "report.json").read_text())
    certificate = BarrierCertificate.from_dict(report["certificate"])
    with open(out / "barrier_curve.csv", newline="") as fh:
        curve = list(csv.DictReader(fh))
    assert len(curve) == 64
    xs = np.array([float(r["x"]) for r in curve])
    values = np.array([float(r["value"]) for r in curve])
    assert values == pytest.approx(certificate.evaluate(xs[:, None]))

    with open(out / "levels.csv", newline="") as fh:
        levels = {r["name"]: float(r["value"]) for r in csv.DictReader(fh)}
    assert levels["initial_level"] == certificate.initial_level
    assert levels["unsafe_level"] == certificate.unsafe_level
    assert levels["slack"] == report["solver"]["slack"]

    with open(out / "samples.csv", newline="") as fh:
        samples = list(csv.DictReader(fh))
    assert len(samples) == report["dataset"]["count"]
    retained = sum(int(r["retained"]) for r in samples)
    assert retained == report["filter"]["retained_count"]


def test_plotdata_rejects_missing_report(tmp_path):
    result = CliRunner().invoke(main, [
        "plotdata", "--report", str(tmp_path / "nope.json")])
    assert result.exit_code != 0


# --------------------------------------------------------------------- sweep


def test_sweep_writes_one_row_per_value(config_path, tmp_path):
    out = tmp_path / "sweep.csv"
    result = CliRunner().invoke(main, [
        "sweep", "--config", config_path, "--param", "threshold",
        "--values", "0.003,0.005", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["value"]) for r in rows] == [0.003, 0.005]
    assert all(r["error"] == "" for r in rows)
    # tighter thresholds keep fewer samples
    assert int(rows[0]["samples"]) < int(rows[1]["samples"])


def test_sweep_rejects_bad_values(config_path, tmp_path):
    result = CliRunner().invoke(main, [
        "sweep", "--config", config_path, "--param", "samples",
        "--values", "10,abc", "--out", str(tmp_path / "s.csv"),
    ])
    assert result.exit_code == 1


# ----------------------------------------------------------------- reproduce


def test_reproduce_smoke_scale(tmp_path):
    out = tmp_path / "repro"
    result = CliRunner().invoke(main, ["reproduce", "--scale", "0.01",
                                       "--out", str(out)])
    # tiny sample budgets cannot certify, so the gate reports failure
    assert result.exit_code == 2, result.output
    with open(out / "reproduce.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(REFERENCE_RESULTS) == 8
    assert {r["key"] for r in rows} == set(REFERENCE_RESULTS)
    assert (out / "reproduce.json").exists()
    for row in rows:
        if not row["error"]:
            assert row["verdict"] in ("pass", "fail")
            assert float(row["our_lipschitz"]) > 0


# --------------------------------------------------------------------- units


def test_drift_formatting():
    assert _drift(1.1, 1.0) == "+10.0%"
    assert _drift(0.9, 1.0) == "-10.0%"
    assert _drift(0.5, 0.0) == "n/a"


def test_reference_config_shapes():
    config = reference_config("sd-det-phys")
    assert config.name == "sd-det-phys"
    assert config.sampling.count == 220_000
    assert config.filter.enabled
    trad = reference_config("sd-det-trad")
    assert not trad.filter.enabled
    scaled = reference_config("sd-det-phys", scale=0.001)
    assert scaled.sampling.count == 2000  # floor kicks in
    prob = reference_config("lg-prob-phys")
    assert prob.guarantee.mode == "probabilistic"
    assert prob.sampling.count == 260_000
