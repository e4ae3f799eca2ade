import json
import math
from pathlib import Path

import numpy as np

from siqrb.cli import (
    EXIT_DATA,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    build_scenario,
    load_config,
    main,
    read_trajectory_csv,
)

REPO = Path(__file__).resolve().parent.parent
HAITI_CFG = str(REPO / "configs" / "haiti.cfg")
FIXTURE_CSV = str(REPO / "data" / "synthetic_incidence.csv")


def run(capsys, *argv) -> tuple[int, str]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def test_load_config_haiti_round_trip():
    cfg = load_config(HAITI_CFG)
    sc = build_scenario(HAITI_CFG)
    assert sc.params.beta == 0.7
    assert sc.params.tau == 2.0
    assert sc.init[0] == 5750.0 and sc.init[4] == 275e3
    assert sc.T == 182.0
    assert math.isclose(sc.h, 1.0 / 70.0, rel_tol=1e-12)
    assert cfg["W_u"] == 1000.0 and cfg["u_max"] == 4.0


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("beta = 0.7\nnotakey = 1\n")
    code, _ = run(capsys, "equilibria", "--config", str(cfg))
    assert code == EXIT_DATA


def test_malformed_config_value(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("beta = zebra\n")
    code, _ = run(capsys, "equilibria", "--config", str(cfg))
    assert code == EXIT_DATA


def test_missing_config_file(capsys):
    code, _ = run(capsys, "equilibria", "--config", "/nonexistent/x.cfg")
    assert code == EXIT_DATA


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def test_equilibria_json(capsys):
    code, out = run(capsys, "equilibria", "--config", HAITI_CFG)
    assert code == EXIT_OK
    payload = json.loads(out)
    assert math.isclose(payload["r0"], 14.667, rel_tol=1e-3)
    assert math.isclose(payload["dfe"]["S"], 22141.44, rel_tol=1e-4)
    assert payload["endemic"]["I"] > 0.0
    assert payload["residuals"]["endemic"] < 1e-9


def test_simulate_writes_schema_and_roundtrips(tmp_path, capsys):
    out_dir = tmp_path / "sim"
    code, _ = run(capsys, "simulate", "--config", HAITI_CFG, "--T", "10",
                  "--out-dir", str(out_dir))
    assert code == EXIT_OK
    csv_path = out_dir / "trajectory.csv"
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,S,I,Q,R,B"
    rows = read_trajectory_csv(csv_path)
    assert rows.shape == (701, 6)
    # 17 significant digits round-trip exactly
    from siqrb import HAITI, HAITI_INITIAL, integrate
    traj = integrate(HAITI, HAITI_INITIAL, 10.0)
    assert np.array_equal(rows[:, 1:], traj.states)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert any(p.endswith("trajectory.csv") for p in manifest["outputs"])
    assert manifest["resolved_parameters"]["beta"] == 0.7


def test_simulate_controlled_run_adds_u_column(tmp_path, capsys):
    out_dir = tmp_path / "simc"
    code, _ = run(capsys, "simulate", "--T", "5", "--h", "0.1", "--u-const", "2.5",
                  "--out-dir", str(out_dir))
    assert code == EXIT_OK
    header = (out_dir / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,S,I,Q,R,B,u"


def test_simulate_grid_points_override(tmp_path, capsys):
    out_dir = tmp_path / "simg"
    code, _ = run(capsys, "simulate", "--T", "10", "--grid-points", "500",
                  "--out-dir", str(out_dir))
    assert code == EXIT_OK
    assert read_trajectory_csv(out_dir / "trajectory.csv").shape[0] == 501


def test_simulate_misaligned_grid_is_usage_error(tmp_path, capsys):
    code, _ = run(capsys, "simulate", "--T", "10", "--h", "0.3",
                  "--out-dir", str(tmp_path / "x"))
    assert code == EXIT_USAGE


def test_simulate_blowup_is_numeric_error(tmp_path, capsys):
    cfg = tmp_path / "hot.cfg"
    cfg.write_text("eta = 1e307\n")
    code, _ = run(capsys, "simulate", "--config", str(cfg), "--T", "10",
                  "--out-dir", str(tmp_path / "y"))
    assert code == EXIT_NUMERIC


def test_stability_dfe_report(tmp_path, capsys):
    code, out = run(capsys, "stability", "--equilibrium", "dfe",
                    "--out-dir", str(tmp_path / "st"))
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["delay_independent"] is False
    assert math.isclose(payload["a1_times_d"], 0.010567, rel_tol=1e-3)


def test_stability_scan_artifacts(tmp_path, capsys):
    out_dir = tmp_path / "scan"
    code, out = run(capsys, "stability", "--equilibrium", "endemic",
                    "--beta-min", "1e-6", "--beta-max", "5", "--points", "801",
                    "--out-dir", str(out_dir))
    assert code == EXIT_OK
    lines = (out_dir / "scan.csv").read_text().splitlines()
    assert lines[0] == "beta,c0,c2,c4,c6,c8,classification"
    assert len(lines) == 802
    thresholds = json.loads((out_dir / "thresholds.json").read_text())
    assert len(thresholds["c0_zeros"]) == 3
    assert math.isclose(thresholds["c2_zeros"][0], 4.772655e-2, rel_tol=1e-4)


def test_fit_subcommand(tmp_path, capsys):
    # coarser grid keeps the CLI fit fast; h = 0.2 keeps tau and T on-grid
    cfg = tmp_path / "fit.cfg"
    cfg.write_text("h = 0.2\n")
    out_json = tmp_path / "fit" / "result.json"
    code, out = run(capsys, "fit", "--config", str(cfg), "--data", FIXTURE_CSV,
                    "--out", str(out_json))
    assert code == EXIT_OK
    payload = json.loads(out_json.read_text())
    for key, (lo, hi) in (("tau", (2.0, 3.0)), ("delta", (0.01, 0.02)),
                          ("beta", (0.7, 1.2)), ("alpha1", (0.005, 0.025))):
        assert lo <= payload["params"][key] <= hi
    traj_csv = out_json.parent / payload["trajectory_csv"]
    assert traj_csv.exists()
    assert json.loads(out) == payload


def test_fit_missing_data_file(tmp_path, capsys):
    code, _ = run(capsys, "fit", "--data", str(tmp_path / "none.csv"),
                  "--out", str(tmp_path / "r.json"))
    assert code == EXIT_DATA


def test_optimize_case1(tmp_path, capsys):
    out_dir = tmp_path / "opt1"
    code, out = run(capsys, "optimize", "--case", "1", "--solver", "pg",
                    "--out-dir", str(out_dir))
    assert code == EXIT_OK
    summary = json.loads(out)
    assert abs(summary["t_s"][0] - 87.843) < 0.5
    assert abs(summary["J"] - 4.299001e6) / 4.299001e6 < 5e-3
    assert summary["pmp_report"]["passed"] is True
    sol_csv = out_dir / "solution.csv"
    header = sol_csv.read_text().splitlines()[0]
    assert header == "t,S,I,Q,R,B,u,phi,l1,l2,l3,l4,l5"


def test_optimize_requires_weights(capsys):
    code, _ = run(capsys, "optimize", "--wi", "1.0")
    assert code == EXIT_DATA


def test_optimize_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "optimize", "--case", "2", "--solver", "switch",
               "--out-dir", str(a))[0] == EXIT_OK
    assert run(capsys, "optimize", "--case", "2", "--solver", "switch",
               "--out-dir", str(b))[0] == EXIT_OK
    assert (a / "solution.csv").read_bytes() == (b / "solution.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


def test_verify_solved_case(capsys):
    code, out = run(capsys, "verify", "--case", "3", "--solver", "switch")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["passed"] is True
    assert abs(payload["t_s"][0] - 121.45) < 0.5


def test_verify_stored_solution_round_trip(tmp_path, capsys):
    out_dir = tmp_path / "opt"
    assert run(capsys, "optimize", "--case", "1", "--solver", "switch",
               "--out-dir", str(out_dir))[0] == EXIT_OK
    code, out = run(capsys, "verify", "--case", "1",
                    "--solution", str(out_dir / "solution.csv"))
    assert code == EXIT_OK
    assert json.loads(out)["passed"] is True


def test_reproduce_pipeline(tmp_path, capsys):
    out_dir = tmp_path / "repro"
    cfg = tmp_path / "coarse.cfg"
    cfg.write_text("h = 0.2\n")  # keeps the pipeline smoke test quick
    code, out = run(capsys, "reproduce-paper", "--config", str(cfg),
                    "--data", FIXTURE_CSV, "--scan-points", "201",
                    "--longrun-T", "400", "--out-dir", str(out_dir))
    assert code == EXIT_OK
    for rel in ("equilibria/summary.json", "stability_scan/scan.csv",
                "stability_scan/thresholds.json", "fit/result.json",
                "fit/fitted_trajectory.csv", "ocp_case1/solution.csv",
                "ocp_case1/summary.json", "ocp_case2/summary.json",
                "ocp_case3/summary.json", "endemic_longrun/trajectory.csv",
                "endemic_longrun/summary.json", "manifest.json"):
        assert (out_dir / rel).exists(), rel
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert len(manifest["outputs"]) >= 11
    assert manifest["input_digests"]


def test_usage_errors(capsys):
    assert main(["not-a-command"]) == EXIT_USAGE
    assert main(["simulate", "--badflag"]) == EXIT_USAGE
