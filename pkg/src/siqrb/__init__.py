"""Delayed SIQRB cholera model toolkit.

Simulation of the five-compartment delayed dynamics, closed-form equilibria
and the basic reproduction number, delay stability diagnostics, calibration
of (tau, delta, beta, alpha1) to incidence data, and the time-delayed L1
optimal control problem for quarantine with verification of the Pontryagin
necessary conditions.
"""

from .params import HAITI, HAITI_INITIAL, HAITI_T, DerivedConstants, ModelParams, derived_constants
from .model import (
    DEFAULT_STEP,
    ControlSignal,
    GridAlignmentError,
    IntegrationError,
    State,
    Trajectory,
    integrate,
    rhs_controlled,
    rhs_uncontrolled,
)
from .equilibria import (
    EquilibriumSet,
    basic_reproduction_number,
    beta_at_threshold,
    disease_free_equilibrium,
    endemic_equilibrium,
    equilibrium_set,
    stationarity_residual,
)
from .stability import (
    StabilityReport,
    CharPolyPair,
    DfeStabilityReport,
    LinearizationPoint,
    StabilityCoefficients,
    F_of_y,
    beta_threshold_scan,
    char_poly_pair,
    char_poly_value,
    dfe_stability,
    f_even_coefficients,
    fend_coefficients,
    linearization_point,
    linearize,
)
from .calibration import FitResult, FitSpec, IncidenceSeries, fit, fitted_params, sse_objective
from .ocp import (
    AdjointTrajectory,
    OcpSolution,
    OcpWeights,
    PgOptions,
    PmpReport,
    SwitchingRecord,
    adjoint_sweep,
    control_gradient,
    cost,
    evaluate_control,
    solve_projected_gradient,
    solve_switch_time,
    switching_function,
    verify_pmp,
)

__version__ = "0.1.0"
