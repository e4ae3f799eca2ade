import math

import numpy as np
import pytest

from siqrb import (
    HAITI,
    basic_reproduction_number,
    beta_at_threshold,
    derived_constants,
    disease_free_equilibrium,
    endemic_equilibrium,
    equilibrium_set,
    rhs_uncontrolled,
    stationarity_residual,
)


def test_r0_haiti_value():
    assert math.isclose(basic_reproduction_number(HAITI), 14.667, rel_tol=1e-4)


def test_r0_linear_in_beta():
    r0 = basic_reproduction_number(HAITI)
    r0x2 = basic_reproduction_number(HAITI.replace(beta=2 * HAITI.beta))
    assert math.isclose(r0x2, 2 * r0, rel_tol=1e-14)


def test_r0_unity_at_reported_threshold():
    p = HAITI.replace(beta=4.772690e-2)
    assert math.isclose(basic_reproduction_number(p), 1.0, rel_tol=1e-4)


def test_threshold_closed_form_inverts_r0():
    beta_star = beta_at_threshold(HAITI)
    r0 = basic_reproduction_number(HAITI.replace(beta=beta_star))
    assert math.isclose(r0, 1.0, rel_tol=1e-12)


def test_dfe_susceptible_level():
    dfe = disease_free_equilibrium(HAITI)
    assert math.isclose(dfe.S, 22141.5, rel_tol=1e-4)
    assert dfe.I == dfe.Q == dfe.R == dfe.B == 0.0


def test_dfe_unit_population_when_rates_match():
    p = HAITI.replace(Lambda=HAITI.mu)
    assert disease_free_equilibrium(p).S == 1.0


def test_dfe_is_stationary():
    dfe = disease_free_equilibrium(HAITI).as_array()
    assert np.all(rhs_uncontrolled(dfe, dfe, HAITI) == 0.0)


def test_endemic_residual():
    e = endemic_equilibrium(HAITI)
    assert e is not None
    assert stationarity_residual(HAITI, e) < 1e-9


def test_endemic_absent_below_threshold():
    assert endemic_equilibrium(HAITI.replace(beta=0.04)) is None
    # exactly at the threshold the endemic equilibrium is not reported
    p = HAITI.replace(beta=beta_at_threshold(HAITI))
    if basic_reproduction_number(p) <= 1.0:
        assert endemic_equilibrium(p) is None


def test_quarantined_to_infective_ratio():
    e = endemic_equilibrium(HAITI)
    c = derived_constants(HAITI)
    assert math.isclose(e.Q, e.I * HAITI.delta / c.a2, rel_tol=1e-12)


@pytest.mark.parametrize("tau", [0.0, 1.0, 2.0, 5.0])
def test_delay_does_not_move_equilibria(tau):
    p = HAITI.replace(tau=tau)
    assert basic_reproduction_number(p) == basic_reproduction_number(HAITI)
    assert endemic_equilibrium(p) == endemic_equilibrium(HAITI)
    assert disease_free_equilibrium(p) == disease_free_equilibrium(HAITI)


@pytest.mark.parametrize("field,increasing", [
    ("beta", True), ("Lambda", True), ("eta", True),
    ("mu", False), ("kappa", False), ("d", False),
    ("delta", False), ("alpha1", False),
])
def test_r0_monotonicity(field, increasing):
    lo = basic_reproduction_number(HAITI.replace(**{field: getattr(HAITI, field) * 0.5}))
    mid = basic_reproduction_number(HAITI)
    hi = basic_reproduction_number(HAITI.replace(**{field: getattr(HAITI, field) * 2.0}))
    if increasing:
        assert lo < mid < hi
    else:
        assert lo > mid > hi


def test_equilibrium_set_bundle():
    eqs = equilibrium_set(HAITI)
    assert eqs.r0 > 1.0 and eqs.endemic is not None
    assert eqs.dfe_residual == 0.0
    assert eqs.endemic_residual < 1e-9
    sub = equilibrium_set(HAITI.replace(beta=0.01))
    assert sub.endemic is None and sub.endemic_residual is None
