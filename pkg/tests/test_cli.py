"""Command-line front-end: every subcommand end to end in a tmp directory."""

import json
from pathlib import Path

import numpy as np
import pytest

from dpalab import cli, fsda


def run(argv):
    return cli.main(argv)


def read_csv(path: Path):
    lines = path.read_text().strip().split("\n")
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_weights_closedform(tmp_path):
    assert run(["--out", str(tmp_path), "weights"]) == 0
    header, rows = read_csv(tmp_path / "weights.csv")
    assert header == ["antenna", "delay_ns_closedform", "phase_deg_closedform",
                      "quantized"]
    assert len(rows) == 16
    assert all(r[-1] == "1" for r in rows)


def test_weights_both_methods_with_plan(tmp_path):
    plan = fsda.BeamPlan.equal_split([-0.5, 0.5], 400e6, width_sin=0.125)
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(plan.to_json())
    assert run(["--out", str(tmp_path), "--angle-bins", "64",
                "--freq-bins", "256", "weights", "--plan", str(plan_path),
                "--method", "both", "--no-quantize"]) == 0
    header, rows = read_csv(tmp_path / "weights.csv")
    assert "delay_diff_ns" in header and "phase_diff_deg" in header
    assert all(r[-1] == "0" for r in rows)


def test_pattern_shapes(tmp_path):
    assert run(["--out", str(tmp_path), "--freq-bins", "32",
                "--angle-bins", "64", "pattern", "--arch", "ttd"]) == 0
    header, rows = read_csv(tmp_path / "pattern_ttd.csv")
    assert header[0] == "freq_hz"
    assert len(header) == 1 + 64
    assert len(rows) == 32


def test_pattern_oracle(tmp_path):
    assert run(["--out", str(tmp_path), "--freq-bins", "32",
                "--angle-bins", "64", "pattern", "--arch", "oracle"]) == 0
    assert (tmp_path / "pattern_oracle.csv").exists()


def test_benchmark_delay_range(tmp_path):
    assert run(["--out", str(tmp_path), "benchmark", "delay_range"]) == 0
    header, rows = read_csv(tmp_path / "benchmark_delay_range.csv")
    assert header == ["beams", "antennas", "delay_range_ns", "ttd_range_ns"]
    assert len(rows) == 16


def test_benchmark_quantization_rows():
    rows = cli.benchmark_quantization()
    assert rows[0] == "bits,phase_degradation_db,delay_degradation_db"
    values = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    assert values.shape == (6, 3)
    # degradation improves with more bits, both for phase and delay
    assert np.all(np.diff(values[:, 1]) <= 1e-9)
    assert np.all(np.diff(values[:, 2]) <= 1e-9)


def test_emulate_single_arch(tmp_path):
    assert run(["--out", str(tmp_path), "emulate", "--arch", "tdma"]) == 0
    data = json.loads((tmp_path / "emulation_tdma.json").read_text())
    assert "aggregate" in data and "per_user" in data
    header, rows = read_csv(tmp_path / "emulation_tdma.csv")
    assert header == ["tti", "user", "queued_bits", "delivered_bits",
                      "dropped_packets"]
    assert len(rows) == 2000 * 10


def test_emulate_scenario_file(tmp_path):
    from dpalab import netsim as ns
    from dpalab.baselines import Architecture, ArchKind
    scenario = ns.table_one_scenario(Architecture(ArchKind.DPA))
    scenario.num_ttis = 200
    path = tmp_path / "scenario.json"
    path.write_text(scenario.to_json())
    assert run(["--out", str(tmp_path), "emulate", "--arch", "dpa",
                "--scenario", str(path)]) == 0
    header, rows = read_csv(tmp_path / "emulation_dpa.csv")
    assert len(rows) == 200 * 10


def test_validate_passes(tmp_path):
    assert run(["--out", str(tmp_path), "validate"]) == 0
    result = json.loads((tmp_path / "validation.json").read_text())
    assert result["passed"] is True
    assert set(result["checks"]) == {
        "dft_unitary", "steering_orthogonal", "power_conservation",
        "line_fit_two_beam", "fsda_vs_closedform",
    }


def test_out_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
    assert run(["weights"]) == 0
    assert (tmp_path / "weights.csv").exists()


def test_error_reported_as_json(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert run(["--out", str(tmp_path), "weights", "--plan", missing]) == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "FileNotFoundError"


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        run(["frobnicate"])
