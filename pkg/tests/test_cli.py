import json
import math
import os

import numpy as np
import pytest

from laxlab.cli import (
    EXIT_NUMERICAL,
    EXIT_TOLERANCE,
    EXIT_USAGE,
    canonical_json,
    dispatch,
    emit_report,
    main,
    parse_grid,
)
from laxlab.errors import UsageError

PII_SMALL = ["gapode", "pii", "--grid", "0:2:1"]


def run_bytes(argv, fmt="json"):
    report, code, _ = dispatch(argv)
    return emit_report(report, fmt), code


# ----- parsing -----

def test_parse_grid_inclusive():
    grid = parse_grid("-1:1:0.5")
    assert np.allclose(grid, [-1.0, -0.5, 0.0, 0.5, 1.0])
    with pytest.raises(UsageError):
        parse_grid("1:2")
    with pytest.raises(UsageError):
        parse_grid("2:1:0.5")


def test_unknown_command_is_usage_error():
    with pytest.raises(UsageError):
        dispatch(["gapode", "pii", "--bogus", "1"])
    assert main(["gapode", "pii", "--bogus", "1"]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE


# ----- canonical serialization -----

def test_canonical_json_formatting():
    text = canonical_json({"b": 0.1, "a": [1, True, None], "c": math.inf})
    assert text == '{"a":[1,true,null],"b":0.10000000000000001,"c":"inf"}'


def test_json_report_round_trips():
    payload, code = run_bytes(PII_SMALL)
    assert code == 0
    doc = json.loads(payload)
    assert doc["wall_time"] == 0.0
    assert doc["max_abs_residual"] < 1e-4
    assert [row["A"] for row in doc["rows"]] == [0.0, 1.0, 2.0]


def test_reports_are_bytewise_deterministic():
    first, _ = run_bytes(PII_SMALL)
    second, _ = run_bytes(PII_SMALL)
    assert first == second


def test_csv_rows_match_grid():
    payload, _ = run_bytes(PII_SMALL, fmt="csv")
    lines = payload.decode().strip().split("\n")
    assert lines[0] == "A,residual"
    assert len(lines) == 1 + 3


def test_sampling_report_thread_invariant():
    argv = [
        "ensemble", "sample", "--beta", "2", "--n", "2",
        "--count", "4000", "--seed", "9",
    ]
    prev = os.environ.get("LAXLAB_THREADS")
    try:
        os.environ["LAXLAB_THREADS"] = "1"
        serial, _ = run_bytes(argv)
        os.environ["LAXLAB_THREADS"] = "3"
        threaded, _ = run_bytes(argv)
    finally:
        if prev is None:
            os.environ.pop("LAXLAB_THREADS", None)
        else:
            os.environ["LAXLAB_THREADS"] = prev
    assert serial == threaded


# ----- exit codes -----

def test_check_gate_exit_codes():
    _, code, _ = dispatch(PII_SMALL + ["--check"])
    assert code == 0
    _, code, _ = dispatch(PII_SMALL + ["--check", "--tol", "-1"])
    assert code == EXIT_TOLERANCE


def test_numerical_error_exit_code(capsys):
    # a gap probability this deep underflows the usable range
    code = main([
        "gapode", "beta-ode", "--beta", "2", "--n", "2", "--grid", "-8:-8:1",
    ])
    assert code == EXIT_NUMERICAL
    capsys.readouterr()


def test_out_file_and_format(tmp_path, capsys):
    out = tmp_path / "report.csv"
    assert main(PII_SMALL + ["--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 4
    out_json = tmp_path / "report.json"
    assert main(PII_SMALL + ["--out", str(out_json)]) == 0
    json.loads(out_json.read_text())
    capsys.readouterr()


# ----- spot checks of a few subcommands -----

def test_fredholm_gap_smoke_row():
    report, code, _ = dispatch([
        "fredholm", "gap", "--kernel", "airy", "--interval", "s:inf",
        "--s-grid", "0:1:0.5", "--order", "48", "--check",
    ])
    assert code == 0
    smoke = report.rows[0]
    assert math.isnan(smoke["s"])
    assert smoke["det"] == 1.0
    assert report.self_reported_error < 1e-10


def test_toda_flow_routes_agree():
    report, code, _ = dispatch([
        "toda", "flow", "--n", "4", "--k", "1", "--t-end", "0.3",
        "--step", "1e-3", "--routes", "tau,ode,qr", "--seed", "42", "--check",
    ])
    assert code == 0
    assert report.max_abs_residual < 1e-6


def test_virasoro_commutators_report():
    report, code, _ = dispatch([
        "virasoro", "commutators", "--beta", "1", "--check",
    ])
    assert code == 0
    assert report.max_abs_residual == 0.0
    assert report.rows[-1]["central_charge"] == -2.0


def test_ensemble_gap_report():
    report, code, _ = dispatch([
        "ensemble", "gap", "--beta", "2", "--n", "1",
        "--interval", "-inf:0", "--check",
    ])
    assert code == 0
    assert report.rows[0]["probability"] == pytest.approx(0.5, abs=1e-12)


def test_aci_curve_monic():
    report, code, _ = dispatch(["aci", "curve", "--check"])
    assert code == 0
    rows = {(r["h_power"], r["z_power"]): r["q"] for r in report.rows}
    assert rows[(0, 3)] == 1.0
