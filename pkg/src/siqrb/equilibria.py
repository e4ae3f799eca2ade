"""Closed-form equilibria and the basic reproduction number.

Equilibria of the delayed model coincide with those of the non-delayed one
(constant states make the delay invisible), so everything here is
tau-independent.  The disease-free equilibrium always exists; the endemic
one exists exactly when R0 > 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import State, rhs_uncontrolled
from .params import ModelParams, derived_constants

#: Relative residual bound used to certify a point as stationary.
RESIDUAL_TOL = 1e-9


def basic_reproduction_number(p: ModelParams) -> float:
    """R0 = beta*Lambda*eta / (mu*kappa*d*a1); independent of tau."""
    a1 = derived_constants(p).a1
    return p.beta * p.Lambda * p.eta / (p.mu * p.kappa * p.d * a1)


def beta_at_threshold(p: ModelParams) -> float:
    """Ingestion rate giving R0 = 1 (closed-form inversion, no root-finder)."""
    a1 = derived_constants(p).a1
    return p.mu * p.kappa * p.d * a1 / (p.Lambda * p.eta)


def disease_free_equilibrium(p: ModelParams) -> State:
    """(Lambda/mu, 0, 0, 0, 0)."""
    return State(p.Lambda / p.mu, 0.0, 0.0, 0.0, 0.0)


def endemic_equilibrium(p: ModelParams) -> Optional[State]:
    """The positive equilibrium, or None when R0 <= 1.

    Every component except S* carries the factor (R0 - 1)/R0::

        S* = a1*rho/(eta*Dbar)
        I* = beta*Lambda*a2*a3*(R0-1)/(R0*Dbar)
        Q* = beta*Lambda*a3*delta*(R0-1)/(R0*Dbar)
        R* = beta*Lambda*delta*epsilon*(R0-1)/(R0*Dbar)
        B* = beta*Lambda*eta*a2*a3*(R0-1)/(R0*Dbar*d)
    """
    r0 = basic_reproduction_number(p)
    if r0 <= 1.0:
        return None
    return _endemic_formal(p, r0)


def _endemic_formal(p: ModelParams, r0: float) -> State:
    """Evaluate the endemic closed forms without the R0 > 1 guard.

    For R0 <= 1 this is the formal analytic continuation (components I..B
    turn negative); the stability scan evaluates it across the whole beta
    window, existence is decided by the caller.
    """
    c = derived_constants(p)
    gain = p.beta * p.Lambda * (r0 - 1.0) / (r0 * c.Dbar)
    return State(
        S=c.a1 * c.rho / (p.eta * c.Dbar),
        I=gain * c.a2 * c.a3,
        Q=gain * c.a3 * p.delta,
        R=gain * p.delta * p.epsilon,
        B=gain * p.eta * c.a2 * c.a3 / p.d,
    )


def stationarity_residual(p: ModelParams, eq) -> float:
    """Scaled residual ||rhs(E, E)|| / (1 + ||E||)."""
    x = np.asarray(eq, dtype=np.float64)
    r = rhs_uncontrolled(x, x, p)
    return float(np.linalg.norm(r) / (1.0 + np.linalg.norm(x)))


@dataclass(frozen=True)
class EquilibriumSet:
    """DFE, R0 and (when R0 > 1) the endemic equilibrium, with residuals."""

    dfe: State
    r0: float
    endemic: Optional[State]
    dfe_residual: float
    endemic_residual: Optional[float]


def equilibrium_set(p: ModelParams) -> EquilibriumSet:
    dfe = disease_free_equilibrium(p)
    endemic = endemic_equilibrium(p)
    return EquilibriumSet(
        dfe=dfe,
        r0=basic_reproduction_number(p),
        endemic=endemic,
        dfe_residual=stationarity_residual(p, dfe),
        endemic_residual=None if endemic is None else stationarity_residual(p, endemic),
    )
