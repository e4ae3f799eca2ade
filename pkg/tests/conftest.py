from pathlib import Path

import pytest

from siqrb import (
    HAITI,
    HAITI_INITIAL,
    OcpWeights,
    solve_projected_gradient,
    solve_switch_time,
)
from siqrb.calibration import FitSpec, IncidenceSeries, fit

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

# Reference values for the three weight cases at grid h = 1/70:
# cost, switch time (days) and initial costates.
CASE_TARGETS = {
    1: {"J": 4.299001e6, "t_s": 87.843,
        "lambda0": (363.76, 379.71, 15.875, 17.704, 3.1978)},
    2: {"J": 5.166139e6, "t_s": 91.79,
        "lambda0": (465.69, 490.35, 18.875, 21.210, 3.2784)},
    3: {"J": 3.7821542e7, "t_s": 121.45,
        "lambda0": (3450.2, 3734.6, 100.66, 117.78, 32.964)},
}


@pytest.fixture(scope="session")
def case_solutions():
    """Both solvers on all three weight cases (solved once per session)."""
    out = {}
    for case in (1, 2, 3):
        w = OcpWeights.case(case)
        out[case] = {
            "weights": w,
            "pg": solve_projected_gradient(HAITI, w, HAITI_INITIAL),
            "switch": solve_switch_time(HAITI, w, HAITI_INITIAL),
        }
    return out


@pytest.fixture(scope="session")
def incidence_fixture() -> IncidenceSeries:
    return IncidenceSeries.from_csv(DATA_DIR / "synthetic_incidence.csv")


@pytest.fixture(scope="session")
def fit_result(incidence_fixture):
    """Self-recovery fit against the shipped synthetic series."""
    return fit(FitSpec(), incidence_fixture)
