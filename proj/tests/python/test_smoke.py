"""Smoke tests for the python bindings and the CLI surface."""

import json
import os
import subprocess
import sys

import pytest

import greensched

FIXTURES = os.environ.get("GREENSCHED_FIXTURES", "fixtures")
CONFIG = os.path.join(FIXTURES, "acceptance.json")


def test_unit_conversion():
    assert greensched.convert_lbs_per_mwh_to_g_per_kwh(1000.0) == pytest.approx(453.59237)


def test_normalize_scores():
    table = greensched.normalize_scores(
        {"es": 150.0, "fr": 200.0, "be": 250.0, "nl": 300.0}
    )
    assert table["es"]["score"] == 100.0
    assert table["nl"]["score"] == 0.0
    assert table["fr"]["score"] == pytest.approx(200.0 / 3.0)


def test_sci_and_energy():
    assert greensched.energy_estimate_kwh(32, 165.0, 0.5, 24.0, 256.0) == 63.456
    sci = greensched.sci(63.456, 100.0, 0.0, 432000.0)
    assert sci == pytest.approx(0.014688888888888889)
    assert greensched.functional_units_per_day(200.0) == 432000


def test_weighted_moer():
    assert greensched.weighted_moer({"a": (3.0, 100.0), "b": (1.0, 200.0)}) == 125.0


def test_haversine():
    assert greensched.haversine_km(50.0, 8.0, 50.0, 8.0) == 0.0
    assert greensched.haversine_km(50.1109, 8.6821, 48.8566, 2.3522) == pytest.approx(
        477.89, abs=0.1
    )


def test_arrival_stream_determinism():
    a = greensched.synthetic_constant_arrivals(60.0, 2, 42)
    b = greensched.synthetic_constant_arrivals(60.0, 2, 42)
    assert a == b
    assert all(0.0 <= t < 120000.0 for t, _ in a)
    c = greensched.synthetic_constant_arrivals(60.0, 2, 43)
    assert a != c


def test_validate_config():
    assert greensched.validate_config(CONFIG) == []


def test_run_experiment_summary():
    summary = greensched.run_experiment(CONFIG, "carbon_aware", 7)
    assert summary["strategy"] == "carbon_aware"
    assert summary["weighted_moer_g_per_kwh"] == 150.0
    assert summary["total_requests"] > 0
    again = greensched.run_experiment(CONFIG, "carbon_aware", 7)
    assert summary == again


def test_cli_round_trip(tmp_path):
    cli = os.environ.get("GREENSCHED_CLI")
    if not cli or not os.path.exists(cli):
        pytest.skip("CLI binary not available")
    out_dir = tmp_path / "campaign"
    run = subprocess.run(
        [cli, "run", "--config", CONFIG, "--out", str(out_dir), "--repeats", "1"],
        capture_output=True,
        text=True,
    )
    assert run.returncode == 0, run.stderr
    compare = subprocess.run(
        [cli, "compare", str(out_dir)], capture_output=True, text=True
    )
    assert compare.returncode == 0, compare.stderr
    report = json.loads(compare.stdout)
    reductions = report["mean_emission_reduction_vs_others"]
    assert reductions["carbon_aware"] > 0.0

    bad = subprocess.run(
        [cli, "validate", "--config", os.devnull], capture_output=True, text=True
    )
    assert bad.returncode == 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
