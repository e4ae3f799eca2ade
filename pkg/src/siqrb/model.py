"""Delayed SIQRB vector fields and a fixed-step DDE integrator.

The model::

    S' = Lambda - beta*B/(kappa+B)*S + omega*R - mu*S
    I' = beta*B_d/(kappa+B_d)*S_d - (delta*u + alpha1 + mu)*I
    Q' = delta*u*I - (epsilon + alpha2 + mu)*Q
    R' = epsilon*Q - (omega + mu)*R
    B' = eta*I - d*B

where the subscript ``d`` marks values taken at t - tau and u is the
quarantine-acceleration control (u = 1 is the uncontrolled model).  Only S
and B are ever read from the delayed state.

Integration uses explicit Euler on a uniform grid with the delay an exact
multiple of the step, so delayed lookups are plain node reads (method of
steps with no interpolation).  The history on [-tau, 0] is the constant
initial state.  A classical RK4 stepper with the same frozen-node delayed
lookup is available as a convergence diagnostic.

All public types here are immutable after construction and safe to share
across worker threads or processes; one integration runs single-threaded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .params import ModelParams

logger = logging.getLogger(__name__)

#: Default grid step in days: 182 days / 12740 intervals, chosen so the
#: 2-day symptom delay is exactly 140 steps.
DEFAULT_STEP = 1.0 / 70.0

#: Undershoot tolerance: components in (-NEG_TOL, 0) are clamped to zero,
#: anything lower aborts the integration.
NEG_TOL = _kernels.NEG_TOL


class GridAlignmentError(ValueError):
    """The delay or horizon is not an integer number of grid steps."""


class IntegrationError(RuntimeError):
    """The integration produced a non-finite or negative state."""


class State(NamedTuple):
    """Point state: four population compartments plus bacterial concentration."""

    S: float
    I: float
    Q: float
    R: float
    B: float

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "State":
        return cls(*(float(v) for v in x))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


def _as_state_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (5,):
        raise ValueError(f"state must have 5 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("state components must be finite")
    return arr


def rhs_uncontrolled(x, x_delayed, p: ModelParams) -> np.ndarray:
    """Time derivative of (S, I, Q, R, B) given current and delayed states."""
    return rhs_controlled(x, x_delayed, 1.0, p)


def rhs_controlled(x, x_delayed, u: float, p: ModelParams) -> np.ndarray:
    """Controlled vector field: quarantine rate delta scaled by u in I', Q'.

    u must lie in [1, u_max]; callers that know u_max pass it through
    :class:`ControlSignal`, here only u >= 1 is enforced.
    """
    xa = _as_state_array(x)
    xd = _as_state_array(x_delayed)
    if xd[4] + p.kappa <= 0.0:
        raise ValueError("kappa + delayed B must be positive")
    if not (u >= 1.0):
        raise ValueError(f"control value {u} below lower bound 1")
    out = _kernels.rhs(xa, xd, float(u), p.as_vector())
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite derivative: parameter or state blow-up")
    return out


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant control on [bounds[0], bounds[1]].

    Two parametrizations: per-interval ``node_values`` aligned with a
    trajectory grid, or an ordered list of ``switches`` times with the level
    alternating from ``initial_level`` between the two bounds.  A node whose
    time equals a switch takes the value from the left (the control keeps
    its old level through the closed left interval).
    """

    bounds: tuple[float, float] = (1.0, 4.0)
    node_values: Optional[np.ndarray] = None
    switches: tuple[float, ...] = ()
    initial_level: Optional[float] = None

    def __post_init__(self) -> None:
        lo, hi = self.bounds
        if not (lo < hi):
            raise ValueError("control bounds must satisfy lo < hi")
        if (self.node_values is None) == (self.initial_level is None):
            raise ValueError("specify exactly one of node_values or switch form")
        if self.node_values is not None:
            arr = np.asarray(self.node_values, dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError("node_values must be a non-empty 1-d array")
            if arr.min() < lo - 1e-12 or arr.max() > hi + 1e-12:
                raise ValueError("control values outside bounds")
            object.__setattr__(self, "node_values", np.clip(arr, lo, hi))
        else:
            if self.initial_level not in self.bounds:
                raise ValueError("initial_level must be one of the bounds")
            sw = tuple(float(t) for t in self.switches)
            if any(b <= a for a, b in zip(sw, sw[1:])):
                raise ValueError("switch times must be strictly increasing")
            if sw and sw[0] < 0.0:
                raise ValueError("switch times must be non-negative")
            object.__setattr__(self, "switches", sw)

    @classmethod
    def constant(cls, value: float, bounds: tuple[float, float] = (1.0, 4.0),
                 n: int = 1) -> "ControlSignal":
        return cls(bounds=bounds, node_values=np.full(n, float(value)))

    @classmethod
    def from_values(cls, values, bounds: tuple[float, float] = (1.0, 4.0)) -> "ControlSignal":
        return cls(bounds=bounds, node_values=np.asarray(values, dtype=np.float64))

    @classmethod
    def from_switches(cls, switches, initial_level: float,
                      bounds: tuple[float, float] = (1.0, 4.0)) -> "ControlSignal":
        return cls(bounds=bounds, switches=tuple(switches), initial_level=initial_level)

    def values(self, n_intervals: int, h: float) -> np.ndarray:
        """Per-interval control values u_k for intervals [k*h, (k+1)*h)."""
        if self.node_values is not None:
            if self.node_values.size == n_intervals:
                return self.node_values.copy()
            if self.node_values.size == 1:
                return np.full(n_intervals, self.node_values[0])
            raise GridAlignmentError(
                f"control has {self.node_values.size} values, grid needs {n_intervals}")
        lo, hi = self.bounds
        other = hi if self.initial_level == lo else lo
        u = np.full(n_intervals, float(self.initial_level))
        level_is_initial = True
        t = np.arange(n_intervals) * h
        for s in self.switches:
            level_is_initial = not level_is_initial
            u[t > s] = self.initial_level if level_is_initial else other
        return u


@dataclass(frozen=True)
class Trajectory:
    """States on the uniform grid t0 + k*h, with constant prehistory.

    ``states`` has shape (n_steps+1, 5); ``prehistory`` holds the constant
    state valid on [t0 - tau, t0].  ``control`` stores the per-interval
    control values that produced the path, when there was one.
    """

    t0: float
    h: float
    tau: float
    states: np.ndarray
    prehistory: np.ndarray
    control: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.h <= 0.0:
            raise ValueError("step h must be positive")
        if self.states.ndim != 2 or self.states.shape[0] < 1 or self.states.shape[1] != 5:
            raise ValueError("states must be a non-empty (n+1, 5) array")
        delay_steps(self.tau, self.h)  # validates integrality
        self.states.setflags(write=False)

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def delay_steps(self) -> int:
        return delay_steps(self.tau, self.h)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.states.shape[0])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def delayed_state(self, k: int) -> np.ndarray:
        """State at node k - tau/h; the prehistory for k*h <= tau."""
        j = k - self.delay_steps
        return self.prehistory if j <= 0 else self.states[j]


def delay_steps(tau: float, h: float) -> int:
    """Delay as a whole number of grid steps; raises if tau/h is not integral."""
    ratio = tau / h
    m = int(round(ratio))
    if abs(ratio - m) > 1e-9 * max(1.0, abs(ratio)):
        raise GridAlignmentError(f"tau/h = {ratio} is not an integer")
    return m


def _n_steps(T: float, h: float) -> int:
    ratio = T / h
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise GridAlignmentError(f"T/h = {ratio} is not a positive integer")
    return n


def integrate(p: ModelParams, init, T: float, h: float = DEFAULT_STEP,
              control: Optional[ControlSignal] = None,
              method: str = "euler") -> Trajectory:
    """Integrate the delayed model from a constant history equal to ``init``.

    ``control`` of None means the uncontrolled model (u = 1 throughout).
    ``method`` is "euler" (reference scheme) or "rk4" (diagnostic stepper,
    see module docstring for its delayed-lookup convention).  Raises
    :class:`GridAlignmentError` for misaligned grids and
    :class:`IntegrationError` on blow-up or negativity beyond tolerance.
    """
    x0 = _as_state_array(init)
    if x0.min() < 0.0:
        raise ValueError("initial state must be non-negative")
    m = delay_steps(p.tau, h)
    n = _n_steps(T, h)
    if control is None:
        u = np.ones(n)
    else:
        u = control.values(n, h)
    kernel = {"euler": _kernels.euler_forward, "rk4": _kernels.rk4_forward}.get(method)
    if kernel is None:
        raise ValueError(f"unknown method {method!r}")
    states, status, bad_step, n_clamped, min_comp = kernel(x0, u, n, m, h, p.as_vector())
    if status == 1:
        raise IntegrationError(
            f"component {min_comp:.3e} below -{NEG_TOL} at step {bad_step}: "
            "integrator misconfiguration (step too large?)")
    if status == 2:
        raise IntegrationError(f"non-finite state at step {bad_step}: blow-up")
    if n_clamped:
        logger.warning("clamped %d negative undershoots (min %.3e) to zero",
                       n_clamped, min_comp)
    return Trajectory(t0=0.0, h=h, tau=p.tau, states=states, prehistory=x0,
                      control=None if control is None else u)
