import math

import numpy as np
import pytest

from siqrb import (
    DEFAULT_STEP,
    HAITI,
    HAITI_INITIAL,
    ControlSignal,
    GridAlignmentError,
    OcpWeights,
    adjoint_sweep,
    control_gradient,
    cost,
    evaluate_control,
    integrate,
    solve_projected_gradient,
    solve_switch_time,
    verify_pmp,
)
from tests.conftest import CASE_TARGETS


def u_const(value, w):
    return ControlSignal.constant(value, bounds=w.bounds)


def test_cost_constant_integrand():
    # no infectives, no bacteria: J = W_u * T
    w = OcpWeights(W_I=1.0, W_B=1.0)
    init = np.array([5000.0, 0.0, 0.0, 0.0, 0.0])
    traj = integrate(HAITI, init, w.T, DEFAULT_STEP)
    J = cost(traj, u_const(1.0, w), w)
    assert math.isclose(J, w.W_u * w.T, rel_tol=1e-12)


def test_cost_linear_in_control_weight():
    w1 = OcpWeights(W_I=1.0, W_B=1.0, W_u=1000.0)
    w2 = OcpWeights(W_I=1.0, W_B=1.0, W_u=2000.0)
    traj = integrate(HAITI, HAITI_INITIAL, w1.T, DEFAULT_STEP)
    u = u_const(3.0, w1)
    J1, J2 = cost(traj, u, w1), cost(traj, u, w2)
    n = traj.n_steps
    integral_u = traj.h * 3.0 * n
    assert math.isclose(J2 - J1, 1000.0 * integral_u, rel_tol=1e-12)


def test_cost_grid_mismatch():
    w = OcpWeights(W_I=1.0, W_B=1.0, T=182.0)
    traj = integrate(HAITI, HAITI_INITIAL, 10.0, 0.1)
    with pytest.raises(GridAlignmentError):
        cost(traj, u_const(1.0, w), w)


def test_adjoint_zero_without_state_weights():
    # W_I = W_B = 0 and omega = 0: no forcing anywhere, lambda stays 0
    p = HAITI.replace(omega=0.0)
    w = OcpWeights(W_I=0.0, W_B=0.0)
    traj = integrate(p, HAITI_INITIAL, w.T, DEFAULT_STEP)
    adj = adjoint_sweep(traj, u_const(1.0, w), p, w)
    assert np.all(adj.costates == 0.0)
    # in particular lambda3, lambda4 stay at their zero terminal data
    assert np.all(adj.costates[:, 2] == 0.0) and np.all(adj.costates[:, 3] == 0.0)


@pytest.mark.parametrize("case", [1, 2, 3])
def test_adjoint_initial_values(case, case_solutions):
    sol = case_solutions[case]["pg"]
    target = np.array(CASE_TARGETS[case]["lambda0"])
    rel = np.abs(sol.lambda0 - target) / np.abs(target)
    assert rel.max() < 0.02


def test_adjoint_gradient_matches_finite_differences():
    # coarse grid keeps the finite differencing cheap and well conditioned
    p = HAITI.replace(tau=2.0)
    w = OcpWeights(W_I=1.0, W_B=1.0, T=20.0)
    h = 0.1
    rng = np.random.default_rng(11)
    n = int(round(w.T / h))

    def J_of(u_vals):
        signal = ControlSignal.from_values(u_vals, bounds=w.bounds)
        traj = integrate(p, HAITI_INITIAL, w.T, h, control=signal)
        return cost(traj, signal, w)

    u = rng.uniform(1.5, 3.5, size=n)
    traj = integrate(p, HAITI_INITIAL, w.T, h,
                     control=ControlSignal.from_values(u, bounds=w.bounds))
    adj = adjoint_sweep(traj, ControlSignal.from_values(u, bounds=w.bounds), p, w)
    g = control_gradient(traj, adj, p, w)

    for _ in range(10):
        direction = rng.standard_normal(n)
        direction /= np.linalg.norm(direction)
        analytic = float(g @ direction)
        # central differences at three step sizes with Richardson pairing
        eps = 1e-4
        fd1 = (J_of(u + eps * direction) - J_of(u - eps * direction)) / (2 * eps)
        fd2 = (J_of(u + eps / 2 * direction) - J_of(u - eps / 2 * direction)) / eps
        fd4 = (J_of(u + eps / 4 * direction) - J_of(u - eps / 4 * direction)) / (eps / 2)
        rich = (4.0 * fd2 - fd1) / 3.0
        rich2 = (4.0 * fd4 - fd2) / 3.0
        best = rich2 if abs(rich2 - analytic) < abs(rich - analytic) else rich
        assert abs(best - analytic) <= 1e-6 * max(1.0, abs(analytic))


@pytest.mark.parametrize("case", [1, 2, 3])
def test_switch_times(case, case_solutions):
    for solver in ("pg", "switch"):
        sol = case_solutions[case][solver]
        assert len(sol.switching.switches) == 1
        assert abs(sol.switching.switches[0] - CASE_TARGETS[case]["t_s"]) < 0.5


@pytest.mark.parametrize("case", [1, 2, 3])
def test_case_costs(case, case_solutions):
    for solver in ("pg", "switch"):
        sol = case_solutions[case][solver]
        assert sol.converged
        assert abs(sol.cost - CASE_TARGETS[case]["J"]) / CASE_TARGETS[case]["J"] < 5e-3


@pytest.mark.parametrize("case", [1, 2, 3])
def test_cross_solver_agreement(case, case_solutions):
    a = case_solutions[case]["pg"].cost
    b = case_solutions[case]["switch"].cost
    assert abs(a - b) / b < 1e-3


def test_projected_gradient_tiny_state_weights_gives_baseline_control():
    w = OcpWeights(W_I=1e-9, W_B=1e-9, T=182.0)
    sol = solve_projected_gradient(HAITI, w, HAITI_INITIAL)
    assert sol.converged
    u = sol.control.values(sol.state.n_steps, sol.state.h)
    assert np.all(u == 1.0)


def test_switch_time_degenerate_weights_switches_immediately():
    w = OcpWeights(W_I=1e-9, W_B=1e-9, T=182.0)
    sol = solve_switch_time(HAITI, w, HAITI_INITIAL)
    u = sol.control.values(sol.state.n_steps, sol.state.h)
    # control cost dominates: at most the very first interval stays high
    assert np.all(u[1:] == 1.0)
    assert any("boundary" in note for note in sol.notes)


def test_cost_field_matches_reintegration(case_solutions):
    for case in (1, 2, 3):
        sol = case_solutions[case]["pg"]
        w = case_solutions[case]["weights"]
        assert math.isclose(sol.cost, cost(sol.state, sol.control, w), rel_tol=1e-10)


def test_transversality_exact(case_solutions):
    for case in (1, 2, 3):
        for solver in ("pg", "switch"):
            assert np.all(case_solutions[case][solver].adjoint.terminal == 0.0)


def test_cost_ordering_against_constant_controls(case_solutions):
    w = case_solutions[1]["weights"]
    J_star = case_solutions[1]["pg"].cost
    traj1 = integrate(HAITI, HAITI_INITIAL, w.T, DEFAULT_STEP, control=u_const(1.0, w))
    traj4 = integrate(HAITI, HAITI_INITIAL, w.T, DEFAULT_STEP, control=u_const(4.0, w))
    assert J_star <= cost(traj1, u_const(1.0, w), w)
    assert J_star <= cost(traj4, u_const(4.0, w), w)


@pytest.mark.parametrize("case", [1, 2, 3])
def test_pmp_verification_passes(case, case_solutions):
    sol = case_solutions[case]["pg"]
    w = case_solutions[case]["weights"]
    report = verify_pmp(sol, HAITI, w)
    assert report.control_law_ok and report.control_law_fraction >= 0.999
    assert report.transversality_ok
    assert report.strict_bang_bang
    assert report.hamiltonian_ok
    assert report.passed


def test_pmp_strict_bang_bang_triple_case3(case_solutions):
    sw = case_solutions[3]["switch"].switching
    assert sw.strict_bang_bang
    (triple,) = sw.triples
    assert triple["pre_sign_strict"] and triple["post_sign_strict"]
    assert triple["slope"] > 0.0 and triple["slope_sign_ok"]


def test_pmp_detects_displaced_switch(case_solutions):
    # move the switch 5 days later: the control law fails on that stretch
    w = case_solutions[1]["weights"]
    sol = case_solutions[1]["switch"]
    ts = sol.switching.switches[0]
    corrupted = ControlSignal.from_switches([ts + 5.0], initial_level=w.u_max,
                                            bounds=w.bounds)
    bad = evaluate_control(HAITI, w, HAITI_INITIAL, corrupted)
    report = verify_pmp(bad, HAITI, w)
    assert not report.control_law_ok
    assert report.n_violations > 100
    assert not report.passed


def test_phi_scaled_series(case_solutions):
    sw = case_solutions[1]["pg"].switching
    assert np.array_equal(sw.scaled(2.0), sw.phi / (2.0 * 1000.0))


def test_switch_solver_reports_switch_parametrization(case_solutions):
    sol = case_solutions[2]["switch"]
    assert sol.control.switches  # switch-time form
    u_signal = sol.control.values(sol.state.n_steps, sol.state.h)
    assert np.array_equal(u_signal, sol.state.control)


def test_two_switch_parametrization_degenerates_cleanly():
    # the optimal structure has one switch; with two allowed, the second is
    # pushed to the horizon boundary and the cost matches the one-switch run
    w = OcpWeights.case(1)
    s1 = solve_switch_time(HAITI, w, HAITI_INITIAL, h=0.2, n_switches=1)
    s2 = solve_switch_time(HAITI, w, HAITI_INITIAL, h=0.2, n_switches=2)
    assert abs(s2.cost - s1.cost) <= 1e-6 * s1.cost
    assert any("boundary" in note for note in s2.notes)
    assert len(s2.switching.switches) == 1


def test_switch_solver_rejects_zero_switches():
    with pytest.raises(ValueError):
        solve_switch_time(HAITI, OcpWeights.case(1), HAITI_INITIAL, n_switches=0)


def test_tau_zero_reduction_solver_and_pmp():
    p = HAITI.replace(tau=0.0)
    w = OcpWeights.case(1)
    sol = solve_projected_gradient(p, w, HAITI_INITIAL)
    assert sol.converged
    report = verify_pmp(sol, p, w)
    assert report.passed


def test_sustained_ambiguous_band_flags_possible_singular_arc():
    # engineered state/costate pair with phi identically zero: I = W_u/delta
    # and lambda3 - lambda2 = -1 give phi = W_u - W_u = 0 on every interval
    from siqrb import AdjointTrajectory, Trajectory, switching_function
    w = OcpWeights(W_I=1.0, W_B=1.0, T=10.0)
    h, n = 0.1, 100
    states = np.zeros((n + 1, 5))
    states[:, 1] = w.W_u / HAITI.delta
    traj = Trajectory(t0=0.0, h=h, tau=2.0, states=states, prehistory=states[0].copy())
    costates = np.zeros((n + 1, 5))
    costates[:, 1] = 1.0  # lambda2
    adj = AdjointTrajectory(h=h, tau=2.0, costates=costates)
    record = switching_function(traj, adj, HAITI, w)
    assert np.all(record.phi == 0.0)
    assert record.possible_singular_arc
    assert not record.strict_bang_bang


def test_projected_gradient_iteration_cap_is_flagged():
    from siqrb import PgOptions
    w = OcpWeights.case(1)
    sol = solve_projected_gradient(HAITI, w, HAITI_INITIAL, h=0.2,
                                   options=PgOptions(max_iters=1))
    assert not sol.converged
    assert any("iteration cap" in note for note in sol.notes)


def test_weights_validation():
    with pytest.raises(ValueError):
        OcpWeights(W_I=-1.0, W_B=1.0)
    with pytest.raises(ValueError):
        OcpWeights(W_I=1.0, W_B=1.0, W_u=0.0)
    with pytest.raises(ValueError):
        OcpWeights(W_I=1.0, W_B=1.0, u_max=1.0)
    with pytest.raises(ValueError):
        OcpWeights(W_I=1.0, W_B=1.0, T=-5.0)


def test_case_presets():
    assert OcpWeights.case(2).W_I == 10.0 and OcpWeights.case(2).W_B == 1.0
    assert OcpWeights.case(3).W_I == 1.0 and OcpWeights.case(3).W_B == 10.0
    w = OcpWeights.case(1)
    assert w.W_u == 1000.0 and w.u_max == 4.0 and w.T == 182.0
