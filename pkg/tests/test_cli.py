"""Command-line interface: formats, exit codes, numeric round-trips."""

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hopf_flow import cli, fields, reduced_system
from hopf_flow.integrator import IntegratorConfig, integrate


def run_cli(*args):
    return cli.main(list(args))


def read_csv(path):
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_trace_csv_is_bit_exact_against_library(tmp_path):
    out = tmp_path / "trace.csv"
    assert run_cli("trace", "--start", "1,0,0", "--span", "2",
                   "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header == ["t", "x", "y", "z"]
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    traj = integrate(fields.cartesian_ode, [1.0, 0.0, 0.0], (0.0, 2.0), cfg)
    assert len(rows) == len(traj.ts)
    for row, t, y in zip(rows, traj.ts, traj.ys):
        vals = [float(c) for c in row]
        assert vals[0] == t
        assert vals[1:] == list(y)
        # 17 significant digits survive a parse/format cycle.
        for cell, val in zip(row, vals):
            assert f"{val:.17g}" == cell


def test_trace_writes_meta_sidecar(tmp_path):
    out = tmp_path / "t.csv"
    run_cli("trace", "--start", "1,0,0", "--span", "1", "--out", str(out))
    meta = json.loads((tmp_path / "t.csv.meta.json").read_text())
    assert meta["chart"] == "cartesian"
    assert meta["stop_reason"] == "reached_end"
    assert meta["accepted_steps"] > 0


def test_trace_dense_sampling_adds_rows(tmp_path):
    sparse = tmp_path / "a.csv"
    dense = tmp_path / "b.csv"
    run_cli("trace", "--start", "1,0,0", "--span", "2", "--out", str(sparse))
    run_cli("trace", "--start", "1,0,0", "--span", "2", "--dense", "200",
            "--out", str(dense))
    assert len(read_csv(dense)[1]) > len(read_csv(sparse)[1])


def test_trace_spherical_chart_and_axis_refusal(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run_cli("trace", "--start", "2,0,1.0", "--chart", "spherical",
                   "--span", "1", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header == ["t", "r", "phi", "psi"]
    assert all(float(r[1]) > 0 for r in rows)
    # psi = 0 starts on the chart singularity.
    assert run_cli("trace", "--start", "2,0,0", "--chart", "spherical",
                   "--span", "1", "--out", str(out)) == 2
    assert "axis" in capsys.readouterr().err


def test_trace_json_document(tmp_path):
    out = tmp_path / "t.json"
    run_cli("trace", "--start", "1,0,0", "--span", "1", "--format", "json",
            "--out", str(out))
    doc = json.loads(out.read_text())
    assert set(doc) == {"header", "rows", "meta"}
    assert doc["header"] == ["t", "x", "y", "z"]
    assert doc["meta"]["rows"] == len(doc["rows"])


def test_field_default_probes_have_unit_norm(tmp_path):
    out = tmp_path / "f.csv"
    assert run_cli("field", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header[:7] == ["x", "y", "z", "vx", "vy", "vz", "norm"]
    assert len(rows) == 5
    for row in rows:
        assert abs(float(row[6]) - 1.0) <= 1e-12


def test_field_accepts_explicit_points(tmp_path):
    out = tmp_path / "f.csv"
    run_cli("field", "--point", "2,0,0", "--point", "0,0,1",
            "--out", str(out))
    _, rows = read_csv(out)
    assert len(rows) == 2
    # rate_arctan vanishes on the radius-2 sphere.
    assert abs(float(rows[0][7])) <= 1e-14


def test_reduce_keeps_constant_level(tmp_path):
    out = tmp_path / "r.csv"
    assert run_cli("reduce", "--start", "1,0.7854", "--target", "3",
                   "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header == ["r", "H", "psi", "C1_re", "C1_im", "C1_rel_dev"]
    devs = [abs(float(r[5])) for r in rows if r[5] != "nan"]
    assert max(devs) <= 1e-6
    meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
    assert meta["reached"] is True


def test_implicit_requires_bracket(tmp_path, capsys):
    assert run_cli("implicit", "--start", "1,0.5", "--rmin", "1",
                   "--rmax", "2") == 2
    assert "bracket" in capsys.readouterr().err


def test_implicit_sweep_matches_traced_curve(tmp_path):
    out = tmp_path / "i.csv"
    assert run_cli("implicit", "--start", "1,0.5", "--rmin", "1.0",
                   "--rmax", "2.5", "--n", "7", "--bracket", "0.3,0.95",
                   "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header == ["r", "H", "resid"]
    traj = reduced_system.trace_h(1.0, 0.5, 2.5)
    for row in rows:
        r, h, resid = (float(c) for c in row)
        if math.isnan(h):
            continue
        assert resid <= 1e-9
        np.testing.assert_allclose(h, float(traj.sample(r)[0]), atol=1e-8)


def test_implicit_exit_one_when_nothing_solves(tmp_path, capsys):
    out = tmp_path / "i.csv"
    code = run_cli("implicit", "--c1", "5.0", "--rmin", "1.0", "--rmax", "2.0",
                   "--n", "4", "--bracket", "0.1,0.9", "--out", str(out))
    assert code == 1


def test_rho_grid_and_exact_equator_log(tmp_path):
    out = tmp_path / "rho.csv"
    assert run_cli("rho", "--grid", "3", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header == ["xi", "psi", "rho_re", "rho_im", "u", "v", "u_im",
                      "v_im", "log_chi", "pde_direct", "pde_parametric"]
    assert len(rows) == 9
    for row in rows:
        assert float(row[10]) <= 1e-8  # parametric residual on the grid
        assert float(row[9]) > 1e-2    # direct variant misses
    # The half-angle logarithm is exactly zero on the equator.
    single = tmp_path / "one.csv"
    run_cli("rho", "--grid", "1", "--psi", f"{math.pi / 2.0},2.0",
            "--xi", "0.4,0.5", "--out", str(single))
    _, rows = read_csv(single)
    assert float(rows[0][8]) == 0.0


def test_verify_single_check_passes(tmp_path):
    out = tmp_path / "v.json"
    assert run_cli("verify", "--only", "unit-norm", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert [c["name"] for c in doc["checks"]] == ["unit-norm"]
    assert doc["schema"] == "hopf-flow-verify/1"


def test_verify_tol_scales_tolerances(tmp_path):
    out = tmp_path / "v.json"
    assert run_cli("verify", "--only", "unit-norm", "--tol", "1e-5",
                   "--out", str(out)) == 1
    doc = json.loads(out.read_text())
    assert doc["checks"][0]["verdict"] == "fail"
    assert doc["tol_scale"] == 1e-5


def test_verify_unknown_check_is_usage_error(capsys):
    assert run_cli("verify", "--only", "made-up-name") == 2
    assert "made-up-name" in capsys.readouterr().err


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"span": 1.0, "chart": "cartesian"}))
    out = tmp_path / "t.csv"
    assert run_cli("trace", "--start", "1,0,0", "--config", str(cfg),
                   "--out", str(out)) == 0
    meta = json.loads((tmp_path / "t.csv.meta.json").read_text())
    assert meta["span"] == 1.0
    # Explicit flags beat the config file.
    assert run_cli("trace", "--start", "1,0,0", "--config", str(cfg),
                   "--span", "0.5", "--out", str(out)) == 0
    meta = json.loads((tmp_path / "t.csv.meta.json").read_text())
    assert meta["span"] == 0.5


def test_malformed_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run_cli("trace", "--start", "1,0,0", "--config", str(cfg)) == 2


def test_unwritable_output_is_usage_error(tmp_path):
    missing = tmp_path / "no" / "such" / "dir" / "x.csv"
    assert run_cli("trace", "--start", "1,0,0", "--span", "1",
                   "--out", str(missing)) == 2


def test_bad_start_string_is_usage_error(capsys):
    assert run_cli("trace", "--start", "1,2") == 2
    assert run_cli("trace", "--start", "a,b,c") == 2


def test_thread_env_var_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("HOPF_FLOW_THREADS", "not-a-number")
    assert run_cli("rho", "--grid", "2", "--out", str(tmp_path / "r.csv")) == 2
    monkeypatch.setenv("HOPF_FLOW_THREADS", "2")
    assert run_cli("rho", "--grid", "2", "--out", str(tmp_path / "r.csv")) == 0


def test_module_entrypoint_runs_as_subprocess(tmp_path):
    out = tmp_path / "t.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "hopf_flow.cli", "trace", "--start", "1,0,0",
         "--span", "0", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    header, rows = read_csv(out)
    assert header == ["t", "x", "y", "z"]
    assert len(rows) == 1  # zero span keeps the initial state only
