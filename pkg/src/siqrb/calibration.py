"""Box-constrained least-squares calibration of (tau, delta, beta, alpha1).

The objective is the quadratic error between observed infective counts and
I(t) simulated by the full delayed model with u = 1; the four free
parameters live in fixed boxes while everything else (remaining rates,
initial state, horizon, grid) is held at the scenario values.

The optimizer is a deterministic two-stage scheme: a coarse lattice over
the box followed by Hooke-Jeeves pattern search (axis polls plus pattern
moves, step halving).  Pattern moves matter here: delta and alpha1 enter
I(t) almost exclusively through their sum, so the objective has a narrow
diagonal valley that defeats plain axis-only compass polls.

tau is continuous in its box but snapped to the nearest grid multiple of h
before integrating, keeping delayed lookups exactly on nodes; with the
default h = 1/70 day the snap moves tau by at most 1/140 day.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import DEFAULT_STEP, IntegrationError, Trajectory, integrate
from .params import HAITI, HAITI_INITIAL, HAITI_T, ModelParams

logger = logging.getLogger(__name__)

#: Box bounds: symptom onset in 2-3 days, the rest from plausible rate ranges.
DEFAULT_BOXES = {
    "tau": (2.0, 3.0),
    "delta": (0.01, 0.02),
    "beta": (0.7, 1.2),
    "alpha1": (0.005, 0.025),
}

AXES = ("tau", "delta", "beta", "alpha1")


class InfeasibleFitError(RuntimeError):
    """Every candidate evaluated to a non-finite objective."""


@dataclass(frozen=True)
class IncidenceSeries:
    """Observed infective counts at given times (days since start)."""

    times: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        c = np.asarray(self.counts, dtype=np.float64)
        if t.ndim != 1 or t.size == 0 or t.shape != c.shape:
            raise ValueError("times and counts must be equal-length 1-d arrays")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("observation times must be strictly increasing")
        if t[0] < 0.0:
            raise ValueError("observation times must be non-negative")
        if np.any(c < 0.0):
            raise ValueError("observed counts must be non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "counts", c)

    def __len__(self) -> int:
        return self.times.size

    @classmethod
    def from_csv(cls, path) -> "IncidenceSeries":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if rows.shape[1] != 2:
            raise ValueError("incidence CSV must have columns t,I_obs")
        return cls(times=rows[:, 0], counts=rows[:, 1])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,I_obs\n")
            for t, c in zip(self.times, self.counts):
                fh.write(f"{t:.17g},{c:.17g}\n")


@dataclass(frozen=True)
class FitSpec:
    """Search boxes plus everything held fixed during the fit."""

    fixed: ModelParams = HAITI
    init: np.ndarray = field(default_factory=lambda: HAITI_INITIAL.copy())
    T: float = HAITI_T
    h: float = DEFAULT_STEP
    boxes: dict = field(default_factory=lambda: dict(DEFAULT_BOXES))
    grid_shape: tuple[int, int, int, int] = (5, 5, 6, 5)
    refine_step0: float = 0.125
    refine_tol: float = 1e-6
    max_evals: int = 50_000

    def __post_init__(self) -> None:
        for name in AXES:
            lo, hi = self.boxes[name]
            if not lo <= hi:
                raise ValueError(f"box for {name} has lower > upper")

    def widths(self) -> np.ndarray:
        return np.array([self.boxes[n][1] - self.boxes[n][0] for n in AXES])

    def lower(self) -> np.ndarray:
        return np.array([self.boxes[n][0] for n in AXES])

    def upper(self) -> np.ndarray:
        return np.array([self.boxes[n][1] for n in AXES])

    def project(self, candidate) -> np.ndarray:
        return np.minimum(np.maximum(np.asarray(candidate, dtype=np.float64),
                                     self.lower()), self.upper())


@dataclass(frozen=True)
class FitResult:
    """Fitted (tau, delta, beta, alpha1) with its objective and trajectory."""

    tau: float
    delta: float
    beta: float
    alpha1: float
    sse: float
    trajectory: Trajectory
    at_boundary: dict
    n_evals: int
    accepted_sse: tuple[float, ...]  # monotone sequence of accepted objectives

    def as_vector(self) -> np.ndarray:
        return np.array([self.tau, self.delta, self.beta, self.alpha1])


def _candidate_params(spec: FitSpec, candidate: np.ndarray) -> ModelParams:
    tau_snapped = round(candidate[0] / spec.h) * spec.h
    return spec.fixed.replace(tau=tau_snapped, delta=float(candidate[1]),
                              beta=float(candidate[2]), alpha1=float(candidate[3]))


def _simulate(spec: FitSpec, candidate: np.ndarray) -> Trajectory:
    return integrate(_candidate_params(spec, candidate), spec.init, spec.T, spec.h)


def sse_objective(candidate, spec: FitSpec, data: IncidenceSeries) -> float:
    """Sum of squared errors between observed and simulated I at the data times.

    The candidate must lie inside the boxes; tau is snapped to the grid and
    observations are read at the nearest node (no interpolation).  A
    candidate whose integration blows up scores +inf and is logged.
    """
    c = np.asarray(candidate, dtype=np.float64)
    if np.any(c < spec.lower() - 1e-12) or np.any(c > spec.upper() + 1e-12):
        raise ValueError("candidate outside the search boxes")
    try:
        traj = _simulate(spec, c)
    except IntegrationError as exc:
        logger.warning("candidate %s rejected: %s", c.tolist(), exc)
        return math.inf
    idx = np.round(data.times / spec.h).astype(int)
    idx = np.clip(idx, 0, traj.n_steps)
    model_I = traj.states[idx, 1]
    return float(np.sum((model_I - data.counts) ** 2))


def _explore(f, base: np.ndarray, fbase: float, step: float, spec: FitSpec):
    """Axis polls at +/- step (box-relative), first improvement per axis."""
    c, v = base, fbase
    widths = spec.widths()
    for i in range(4):
        if widths[i] == 0.0:
            continue
        for sgn in (1.0, -1.0):
            trial = c.copy()
            trial[i] += sgn * step * widths[i]
            trial = spec.project(trial)
            if trial[i] == c[i]:
                continue
            fv = f(trial)
            if fv < v:
                c, v = trial, fv
                break
    return c, v


def fit(spec: FitSpec, data: IncidenceSeries) -> FitResult:
    """Coarse lattice search then Hooke-Jeeves refinement; deterministic.

    The refinement never accepts a candidate with a larger objective, so
    the accepted-objective sequence is non-increasing.  Boundary attainment
    on any axis is flagged in the result rather than treated as an error.
    """
    if len(data) == 0:
        raise ValueError("empty incidence series")

    evals = 0

    def f(c: np.ndarray) -> float:
        nonlocal evals
        if evals >= spec.max_evals:
            raise InfeasibleFitError("evaluation budget exhausted")
        evals += 1
        return sse_objective(c, spec, data)

    grids = [np.linspace(*spec.boxes[name], num=n)
             for name, n in zip(AXES, spec.grid_shape)]
    best_c: Optional[np.ndarray] = None
    best_v = math.inf
    for a in grids[0]:
        for b in grids[1]:
            for g in grids[2]:
                for e in grids[3]:
                    cand = np.array([a, b, g, e])
                    v = f(cand)
                    if v < best_v:
                        best_c, best_v = cand, v
    if best_c is None or not math.isfinite(best_v):
        raise InfeasibleFitError("all lattice candidates were infeasible")

    accepted = [best_v]
    c, v = best_c, best_v
    step = spec.refine_step0
    while step >= spec.refine_tol:
        cn, vn = _explore(f, c, v, step, spec)
        if vn < v:
            # pattern moves: extrapolate along the improvement and re-poll
            while True:
                probe = spec.project(cn + (cn - c))
                c, v = cn, vn
                accepted.append(v)
                ce, ve = _explore(f, probe, f(probe), step, spec)
                if ve < v:
                    cn, vn = ce, ve
                else:
                    break
        else:
            step *= 0.5

    lower, upper, widths = spec.lower(), spec.upper(), spec.widths()
    # the polls stop at refine_tol*width, so anything within a few floors of
    # a box edge is a boundary optimum for this search resolution
    edge_tol = 10.0 * spec.refine_tol * widths + 1e-15
    at_boundary = {
        name: bool(c[i] <= lower[i] + edge_tol[i] or c[i] >= upper[i] - edge_tol[i])
        for i, name in enumerate(AXES)
    }
    traj = _simulate(spec, c)
    return FitResult(
        tau=float(c[0]), delta=float(c[1]), beta=float(c[2]), alpha1=float(c[3]),
        sse=v, trajectory=traj, at_boundary=at_boundary, n_evals=evals,
        accepted_sse=tuple(accepted))


def fitted_params(spec: FitSpec, result: FitResult) -> ModelParams:
    """Parameter set with the fitted values substituted (tau grid-snapped)."""
    return _candidate_params(spec, result.as_vector())


def synthetic_incidence(spec: FitSpec, candidate, times: Sequence[float]) -> IncidenceSeries:
    """Generate noiseless observations from the model itself (fixture helper)."""
    c = spec.project(candidate)
    traj = _simulate(spec, c)
    idx = np.clip(np.round(np.asarray(times) / spec.h).astype(int), 0, traj.n_steps)
    return IncidenceSeries(times=np.asarray(times, dtype=np.float64),
                           counts=traj.states[idx, 1])
