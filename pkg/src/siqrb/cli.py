"""Command-line entry point.

Subcommands: simulate, equilibria, stability, fit, optimize, verify,
reproduce-paper.  Exit codes: 0 success, 2 usage error, 3 input data error,
4 numerical failure (non-convergence, blow-up, failed verification).

Config files are flat ``key = value`` text with ``#`` comments.  Accepted
keys are the model parameter names (Lambda, mu, beta, kappa, omega, delta,
epsilon, alpha1, alpha2, eta, d, tau), the initial state (S0, I0, Q0, R0,
B0), the grid (T, h) and the control-problem constants (W_I, W_B, W_u,
u_max).  Unspecified keys fall back to the Haiti 2010 scenario; resolved
values are recorded in the run manifest.

All data artifacts are deterministic: identical inputs produce identical
bytes.  The manifest records wall time and input digests and is the one
file excluded from byte-for-byte comparisons.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import FitSpec, IncidenceSeries, fit, fitted_params
from .equilibria import beta_at_threshold, equilibrium_set
from .model import (
    DEFAULT_STEP,
    ControlSignal,
    GridAlignmentError,
    IntegrationError,
    Trajectory,
    integrate,
)
from .ocp import (
    AdjointTrajectory,
    OcpSolution,
    OcpWeights,
    cost as ocp_cost,
    solve_projected_gradient,
    solve_switch_time,
    switching_function,
    verify_pmp,
)
from .params import HAITI, HAITI_INITIAL, HAITI_T, ModelParams
from .stability import beta_threshold_scan, dfe_stability

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

PARAM_KEYS = ("Lambda", "mu", "beta", "kappa", "omega", "delta", "epsilon",
              "alpha1", "alpha2", "eta", "d", "tau")
STATE_KEYS = ("S0", "I0", "Q0", "R0", "B0")
GRID_KEYS = ("T", "h")
WEIGHT_KEYS = ("W_I", "W_B", "W_u", "u_max")
ALL_KEYS = PARAM_KEYS + STATE_KEYS + GRID_KEYS + WEIGHT_KEYS


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def load_config(path) -> dict[str, float]:
    """Parse a key=value config file; unknown keys are an error."""
    out: dict[str, float] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = float(val.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}") from exc
    return out


@dataclass
class Scenario:
    params: ModelParams
    init: np.ndarray
    T: float
    h: float
    W_I: float = 1.0
    W_B: float = 1.0
    W_u: float = 1000.0
    u_max: float = 4.0

    def resolved(self) -> dict[str, float]:
        d = {k: getattr(self.params, k) for k in PARAM_KEYS}
        d.update(dict(zip(STATE_KEYS, (float(v) for v in self.init))))
        d.update(T=self.T, h=self.h, W_I=self.W_I, W_B=self.W_B,
                 W_u=self.W_u, u_max=self.u_max)
        return d


def build_scenario(config_path=None, T=None, h=None, grid_points=None) -> Scenario:
    cfg = load_config(config_path) if config_path else {}
    try:
        params = ModelParams(**{k: cfg.get(k, getattr(HAITI, k)) for k in PARAM_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    init = np.array([cfg.get(k, HAITI_INITIAL[i]) for i, k in enumerate(STATE_KEYS)])
    horizon = float(T if T is not None else cfg.get("T", HAITI_T))
    if grid_points is not None:
        step = horizon / int(grid_points)
    else:
        step = float(h if h is not None else cfg.get("h", DEFAULT_STEP))
    return Scenario(
        params=params, init=init, T=horizon, h=step,
        W_I=cfg.get("W_I", 1.0), W_B=cfg.get("W_B", 1.0),
        W_u=cfg.get("W_u", 1000.0), u_max=cfg.get("u_max", 4.0))


# ---------------------------------------------------------------------------
# Artifact writers / readers
# ---------------------------------------------------------------------------

def write_trajectory_csv(path, traj: Trajectory, stride: int = 1) -> None:
    """Rows t,S,I,Q,R,B and a trailing u column when the run was controlled."""
    times = traj.times
    u = traj.control
    with open(path, "w") as fh:
        fh.write("t,S,I,Q,R,B" + (",u" if u is not None else "") + "\n")
        for k in range(0, times.size, stride):
            row = [times[k], *traj.states[k]]
            if u is not None:
                row.append(u[min(k, u.size - 1)])
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_trajectory_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_solution_csv(path, sol: OcpSolution) -> None:
    """Rows t,S,I,Q,R,B,u,phi,l1..l5; interval columns repeat on the last row."""
    traj = sol.state
    n = traj.n_steps
    u = sol.control.values(n, traj.h)
    phi = sol.switching.phi
    lam = sol.adjoint.costates
    times = traj.times
    with open(path, "w") as fh:
        fh.write("t,S,I,Q,R,B,u,phi,l1,l2,l3,l4,l5\n")
        for k in range(n + 1):
            j = min(k, n - 1)
            row = [times[k], *traj.states[k], u[j], phi[j], *lam[k]]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_solution_csv(path, p: ModelParams, w: OcpWeights):
    """Reconstruct (trajectory, control, adjoint) from a solution CSV."""
    data = read_trajectory_csv(path)
    if data.shape[1] != 13:
        raise DataError("solution CSV must have 13 columns t,S,I,Q,R,B,u,phi,l1..l5")
    times = data[:, 0]
    if times.size < 2:
        raise DataError("solution CSV needs at least two rows")
    h = float(times[1] - times[0])
    states = data[:, 1:6]
    traj = Trajectory(t0=float(times[0]), h=h, tau=p.tau, states=states,
                      prehistory=states[0].copy(), control=data[:-1, 6])
    control = ControlSignal.from_values(data[:-1, 6], bounds=w.bounds)
    adjoint = AdjointTrajectory(h=h, tau=p.tau, costates=data[:, 8:13])
    return traj, control, adjoint


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(out_dir: Path, subcommand: str, resolved: dict,
                   inputs: list, outputs: list, t_start: float) -> None:
    manifest = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "resolved_parameters": resolved,
        "input_digests": {str(p): _sha256(p) for p in inputs},
        "outputs": sorted(str(Path(o)) for o in outputs),
        "wall_time_s": round(time.monotonic() - t_start, 3),
    }
    _write_json(out_dir / "manifest.json", manifest)


def _state_dict(x) -> dict[str, float]:
    s = np.asarray(x, dtype=float)
    return {k: float(v) for k, v in zip(("S", "I", "Q", "R", "B"), s)}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    sc = build_scenario(args.config, args.T, args.h, args.grid_points)
    control = None
    if args.u_const is not None:
        control = ControlSignal.constant(args.u_const, bounds=(1.0, max(sc.u_max, args.u_const)))
    traj = integrate(sc.params, sc.init, sc.T, sc.h, control=control,
                     method=args.method)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "trajectory.csv"
    write_trajectory_csv(csv_path, traj, stride=args.stride)
    eqs = equilibrium_set(sc.params)
    summary = {
        "T": sc.T, "h": sc.h, "method": args.method, "stride": args.stride,
        "final_state": _state_dict(traj.final_state),
        "r0": eqs.r0,
    }
    if eqs.endemic is not None:
        endemic = eqs.endemic.as_array()
        gap = np.abs(traj.final_state - endemic) / np.abs(endemic)
        summary["endemic_equilibrium"] = _state_dict(endemic)
        summary["final_rel_gap_to_endemic"] = _state_dict(gap)
    _write_json(out / "summary.json", summary)
    write_manifest(out, "simulate", sc.resolved(),
                   [args.config] if args.config else [],
                   [csv_path, out / "summary.json"], t0)
    print(json.dumps(summary["final_state"], sort_keys=True))
    return EXIT_OK


def cmd_equilibria(args) -> int:
    t0 = time.monotonic()
    sc = build_scenario(args.config)
    eqs = equilibrium_set(sc.params)
    payload = {
        "r0": eqs.r0,
        "beta_at_r0_one": beta_at_threshold(sc.params),
        "dfe": _state_dict(eqs.dfe),
        "endemic": None if eqs.endemic is None else _state_dict(eqs.endemic),
        "residuals": {"dfe": eqs.dfe_residual, "endemic": eqs.endemic_residual},
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "equilibria.json", payload)
        write_manifest(out, "equilibria", sc.resolved(),
                       [args.config] if args.config else [],
                       [out / "equilibria.json"], t0)
    return EXIT_OK


def _scan_csv_rows(report) -> str:
    lines = ["beta,c0,c2,c4,c6,c8,classification"]
    for i in range(report.betas.size):
        c = report.coefficients[i]
        lines.append(",".join([_fmt(report.betas[i]), _fmt(c[0]), _fmt(c[1]),
                               _fmt(c[2]), _fmt(c[3]), _fmt(c[4]),
                               report.classifications[i]]))
    return "\n".join(lines) + "\n"


def cmd_stability(args) -> int:
    t0 = time.monotonic()
    sc = build_scenario(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.equilibrium == "dfe":
        rep = dfe_stability(sc.params)
        payload = {
            "r0": rep.r0,
            "a1_times_d": rep.a1_times_d,
            "delay_independent": rep.delay_independent,
            "stable": rep.stable,
            "classification": rep.classification,
            "root_branch_value": rep.root_branch_value,
            "f_positive_roots": list(rep.f_positive_roots),
            "notes": list(rep.notes),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        _write_json(out / "dfe_stability.json", payload)
        write_manifest(out, "stability", sc.resolved(),
                       [args.config] if args.config else [],
                       [out / "dfe_stability.json"], t0)
        return EXIT_OK
    report = beta_threshold_scan(sc.params, args.beta_min, args.beta_max, args.points)
    (out / "scan.csv").write_text(_scan_csv_rows(report))
    thresholds = {
        "c0_zeros": list(report.c0_zeros),
        "c2_zeros": list(report.c2_zeros),
        "notes": list(report.notes),
        "beta_min": args.beta_min, "beta_max": args.beta_max, "points": args.points,
    }
    _write_json(out / "thresholds.json", thresholds)
    print(json.dumps(thresholds, indent=2, sort_keys=True))
    write_manifest(out, "stability", sc.resolved(),
                   [args.config] if args.config else [],
                   [out / "scan.csv", out / "thresholds.json"], t0)
    return EXIT_OK


def cmd_fit(args) -> int:
    t0 = time.monotonic()
    sc = build_scenario(args.config)
    try:
        data = IncidenceSeries.from_csv(args.data)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load incidence data {args.data}: {exc}") from exc
    spec = FitSpec(fixed=sc.params, init=sc.init, T=sc.T, h=sc.h)
    result = fit(spec, data)
    out_json = Path(args.out)
    out_json.parent.mkdir(parents=True, exist_ok=True)
    traj_path = out_json.with_name(out_json.stem + "_trajectory.csv")
    write_trajectory_csv(traj_path, result.trajectory)
    payload = {
        "params": {"tau": result.tau, "delta": result.delta,
                   "beta": result.beta, "alpha1": result.alpha1},
        "tau_grid_snapped": fitted_params(spec, result).tau,
        "sse": result.sse,
        "at_boundary": result.at_boundary,
        "n_evals": result.n_evals,
        "trajectory_csv": traj_path.name,
    }
    _write_json(out_json, payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    write_manifest(out_json.parent, "fit", sc.resolved(),
                   [args.data] + ([args.config] if args.config else []),
                   [out_json, traj_path], t0)
    return EXIT_OK


def _weights_from_args(args, sc: Scenario) -> OcpWeights:
    if args.case is not None:
        return OcpWeights.case(args.case, W_u=sc.W_u, u_max=sc.u_max, T=sc.T)
    if args.wi is None or args.wb is None:
        raise ConfigError("provide --case or both --wi and --wb")
    return OcpWeights(W_I=args.wi, W_B=args.wb,
                      W_u=args.wu if args.wu is not None else sc.W_u,
                      u_max=args.umax if args.umax is not None else sc.u_max,
                      T=sc.T)


def _solve(args, sc: Scenario, w: OcpWeights) -> OcpSolution:
    if args.solver == "switch":
        return solve_switch_time(sc.params, w, sc.init, sc.h)
    return solve_projected_gradient(sc.params, w, sc.init, sc.h)


def _pmp_payload(report) -> dict:
    return {
        "passed": report.passed,
        "control_law_fraction": report.control_law_fraction,
        "n_unambiguous": report.n_unambiguous,
        "n_violations": report.n_violations,
        "transversality_max_abs": report.transversality_max_abs,
        "strict_bang_bang": report.strict_bang_bang,
        "triples": list(report.triples),
        "hamiltonian_fraction": report.hamiltonian_fraction,
        "possible_singular_arc": report.possible_singular_arc,
        "scale_c": report.scale_c,
    }


def cmd_optimize(args) -> int:
    t0 = time.monotonic()
    sc = build_scenario(args.config, grid_points=args.grid_points)
    w = _weights_from_args(args, sc)
    sol = _solve(args, sc, w)
    report = verify_pmp(sol, sc.params, w, scale_c=args.phi_scale)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_solution_csv(out / "solution.csv", sol)
    summary = {
        "solver": sol.solver,
        "case": args.case,
        "weights": {"W_I": w.W_I, "W_B": w.W_B, "W_u": w.W_u,
                    "u_max": w.u_max, "T": w.T},
        "J": sol.cost,
        "t_s": list(sol.switching.switches),
        "lambda0": [float(v) for v in sol.lambda0],
        "converged": sol.converged,
        "iterations": sol.iterations,
        "notes": list(sol.notes),
        "pmp_report": _pmp_payload(report),
    }
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    write_manifest(out, "optimize", sc.resolved(),
                   [args.config] if args.config else [],
                   [out / "solution.csv", out / "summary.json"], t0)
    return EXIT_OK if sol.converged else EXIT_NUMERIC


def cmd_verify(args) -> int:
    sc = build_scenario(args.config, grid_points=args.grid_points)
    w = _weights_from_args(args, sc)
    if args.solution:
        try:
            traj, control, adjoint = read_solution_csv(args.solution, sc.params, w)
        except OSError as exc:
            raise DataError(str(exc)) from exc
        switching = switching_function(traj, adjoint, sc.params, w)
        sol = OcpSolution(
            solver="stored", control=control, state=traj, adjoint=adjoint,
            cost=ocp_cost(traj, control, w), switching=switching,
            lambda0=adjoint.lambda0.copy(), converged=True, iterations=0,
            n_cost_evals=0)
    else:
        sol = _solve(args, sc, w)
    report = verify_pmp(sol, sc.params, w, scale_c=args.phi_scale)
    payload = _pmp_payload(report)
    payload["J"] = sol.cost
    payload["t_s"] = list(sol.switching.switches)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_reproduce(args) -> int:
    t0 = time.monotonic()
    sc = build_scenario(args.config)
    root = Path(args.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    inputs = [args.config] if args.config else []

    # Equilibria and R0 for the scenario parameter set.
    eq_dir = root / "equilibria"
    eq_dir.mkdir(exist_ok=True)
    eqs = equilibrium_set(sc.params)
    payload = {
        "r0": eqs.r0,
        "beta_at_r0_one": beta_at_threshold(sc.params),
        "dfe": _state_dict(eqs.dfe),
        "endemic": None if eqs.endemic is None else _state_dict(eqs.endemic),
        "residuals": {"dfe": eqs.dfe_residual, "endemic": eqs.endemic_residual},
    }
    _write_json(eq_dir / "summary.json", payload)
    outputs.append(eq_dir / "summary.json")

    # Ingestion-rate threshold scan over the full window ]0, 5].
    scan_dir = root / "stability_scan"
    scan_dir.mkdir(exist_ok=True)
    report = beta_threshold_scan(sc.params, 1e-6, 5.0, args.scan_points)
    (scan_dir / "scan.csv").write_text(_scan_csv_rows(report))
    _write_json(scan_dir / "thresholds.json",
                {"c0_zeros": list(report.c0_zeros),
                 "c2_zeros": list(report.c2_zeros),
                 "notes": list(report.notes)})
    outputs += [scan_dir / "scan.csv", scan_dir / "thresholds.json"]

    # Incidence fit (only when a data file is supplied).
    if args.data:
        fit_dir = root / "fit"
        fit_dir.mkdir(exist_ok=True)
        data = IncidenceSeries.from_csv(args.data)
        spec = FitSpec(fixed=sc.params, init=sc.init, T=sc.T, h=sc.h)
        result = fit(spec, data)
        write_trajectory_csv(fit_dir / "fitted_trajectory.csv", result.trajectory)
        _write_json(fit_dir / "result.json", {
            "params": {"tau": result.tau, "delta": result.delta,
                       "beta": result.beta, "alpha1": result.alpha1},
            "sse": result.sse, "at_boundary": result.at_boundary,
            "n_evals": result.n_evals})
        outputs += [fit_dir / "fitted_trajectory.csv", fit_dir / "result.json"]
        inputs.append(args.data)

    # The three weight cases of the control problem.
    for case in (1, 2, 3):
        case_dir = root / f"ocp_case{case}"
        case_dir.mkdir(exist_ok=True)
        w = OcpWeights.case(case, W_u=sc.W_u, u_max=sc.u_max, T=sc.T)
        sol = solve_projected_gradient(sc.params, w, sc.init, sc.h)
        rep = verify_pmp(sol, sc.params, w)
        write_solution_csv(case_dir / "solution.csv", sol)
        _write_json(case_dir / "summary.json", {
            "J": sol.cost, "t_s": list(sol.switching.switches),
            "lambda0": [float(v) for v in sol.lambda0],
            "converged": sol.converged, "pmp_report": _pmp_payload(rep)})
        outputs += [case_dir / "solution.csv", case_dir / "summary.json"]
        if not sol.converged:
            raise IntegrationError(f"case {case} solve did not converge")

    # Long-horizon run toward the endemic equilibrium (daily rows).
    long_dir = root / "endemic_longrun"
    long_dir.mkdir(exist_ok=True)
    traj = integrate(sc.params, sc.init, args.longrun_T, sc.h)
    write_trajectory_csv(long_dir / "trajectory.csv", traj,
                         stride=int(round(1.0 / sc.h)))
    endemic = eqs.endemic.as_array() if eqs.endemic is not None else None
    summary = {"T": args.longrun_T, "final_state": _state_dict(traj.final_state)}
    if endemic is not None:
        gap = np.abs(traj.final_state - endemic) / np.abs(endemic)
        summary["final_rel_gap_to_endemic"] = _state_dict(gap)
    _write_json(long_dir / "summary.json", summary)
    outputs += [long_dir / "trajectory.csv", long_dir / "summary.json"]

    write_manifest(root, "reproduce-paper", sc.resolved(), inputs, outputs, t0)
    print(json.dumps({"out_dir": str(root),
                      "artifacts": sorted(str(o.relative_to(root)) for o in outputs)},
                     indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="siqrb",
                                 description="Delayed SIQRB cholera model toolkit")
    ap.add_argument("--version", action="version", version=f"siqrb {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add_config(sp):
        sp.add_argument("--config", help="key=value parameter file")

    sp = sub.add_parser("simulate", help="integrate the delayed model")
    add_config(sp)
    sp.add_argument("--T", type=float, help="horizon in days")
    sp.add_argument("--h", type=float, help="grid step in days")
    sp.add_argument("--grid-points", type=int, help="number of steps over [0, T]")
    sp.add_argument("--u-const", type=float, help="constant control value")
    sp.add_argument("--method", choices=("euler", "rk4"), default="euler")
    sp.add_argument("--stride", type=int, default=1, help="write every k-th node")
    sp.add_argument("--out-dir", default="siqrb_out/simulate")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("equilibria", help="equilibria, R0 and residuals as JSON")
    add_config(sp)
    sp.add_argument("--out-dir", default=None)
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("stability", help="DFE classification or endemic beta scan")
    add_config(sp)
    sp.add_argument("--equilibrium", choices=("dfe", "endemic"), default="endemic")
    sp.add_argument("--beta-min", type=float, default=1e-6)
    sp.add_argument("--beta-max", type=float, default=5.0)
    sp.add_argument("--points", type=int, default=2001)
    sp.add_argument("--out-dir", default="siqrb_out/stability")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("fit", help="calibrate (tau, delta, beta, alpha1) to incidence data")
    add_config(sp)
    sp.add_argument("--data", required=True, help="CSV with header t,I_obs")
    sp.add_argument("--out", required=True, help="result JSON path")
    sp.set_defaults(func=cmd_fit)

    def add_ocp_args(sp):
        add_config(sp)
        sp.add_argument("--case", type=int, choices=(1, 2, 3),
                        help="weight preset: 1 -> (1,1), 2 -> (10,1), 3 -> (1,10)")
        sp.add_argument("--wi", type=float, help="weight on I")
        sp.add_argument("--wb", type=float, help="weight on B")
        sp.add_argument("--wu", type=float, help="control cost weight")
        sp.add_argument("--umax", type=float, help="control upper bound")
        sp.add_argument("--solver", choices=("pg", "switch"), default="pg")
        sp.add_argument("--grid-points", type=int)
        sp.add_argument("--phi-scale", type=float, default=2.0,
                        help="c in the plotted phi/(c*W_u)")

    sp = sub.add_parser("optimize", help="solve the L1 quarantine control problem")
    add_ocp_args(sp)
    sp.add_argument("--out-dir", default="siqrb_out/optimize")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("verify", help="check Pontryagin necessary conditions")
    add_ocp_args(sp)
    sp.add_argument("--solution", help="stored solution CSV to verify")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("reproduce-paper",
                        help="run the full study pipeline into one directory")
    add_config(sp)
    sp.add_argument("--data", help="optional incidence CSV enabling the fit stage")
    sp.add_argument("--scan-points", type=int, default=2001)
    sp.add_argument("--longrun-T", type=float, default=5000.0)
    sp.add_argument("--out-dir", default="siqrb_out/reproduce")
    sp.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (GridAlignmentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
