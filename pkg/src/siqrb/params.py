"""Parameters and derived rate constants of the delayed SIQRB cholera model.

The model tracks susceptible (S), symptomatic infective (I), quarantined (Q)
and recovered (R) individuals together with the environmental concentration
of V. cholerae (B).  Twelve epidemiological constants plus the symptom delay
``tau`` fully determine the dynamics; a handful of composite rates derived
from them appear throughout the equilibrium and stability formulas, so they
are computed once and carried around as a frozen record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

# Fields that must be strictly positive vs merely non-negative.
_POSITIVE = ("Lambda", "mu", "beta", "kappa", "eta", "d")
_NONNEGATIVE = ("omega", "delta", "epsilon", "alpha1", "alpha2", "tau")


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological constants plus the symptom delay.

    Units: rates are 1/day, ``Lambda`` persons/day, ``kappa`` cells/ml,
    ``eta`` cells/ml/day/person, ``tau`` days.
    """

    Lambda: float   # recruitment rate into the susceptible class
    mu: float       # natural death rate
    beta: float     # ingestion rate of bacteria from contaminated sources
    kappa: float    # half-saturation constant of the bacteria population
    omega: float    # immunity waning rate
    delta: float    # quarantine rate
    epsilon: float  # recovery rate of quarantined individuals
    alpha1: float   # disease death rate of infectives
    alpha2: float   # disease death rate of quarantined individuals
    eta: float      # shedding rate per infective
    d: float        # bacteria death rate
    tau: float      # delay between infection and symptom onset

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"parameter {f.name} must be finite, got {v!r}")
        for name in _POSITIVE:
            if getattr(self, name) <= 0.0:
                raise ValueError(f"parameter {name} must be strictly positive")
        for name in _NONNEGATIVE:
            if getattr(self, name) < 0.0:
                raise ValueError(f"parameter {name} must be non-negative")

    def replace(self, **changes: float) -> "ModelParams":
        return replace(self, **changes)

    def as_vector(self) -> np.ndarray:
        """Parameter vector in the fixed order the integration kernels expect.

        ``tau`` is excluded; the kernels receive the delay as a node offset.
        """
        return np.array(
            [self.Lambda, self.mu, self.beta, self.kappa, self.omega,
             self.delta, self.epsilon, self.alpha1, self.alpha2,
             self.eta, self.d],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class DerivedConstants:
    """Composite rates derived from :class:`ModelParams`.

    ``a1 = delta + alpha1 + mu`` is the total outflow rate of I,
    ``a2 = epsilon + alpha2 + mu`` of Q and ``a3 = omega + mu`` of R.
    ``A = a1*a2*a3`` and ``Atilde = A - delta*epsilon*omega`` combine them;
    ``rho = Lambda*eta*a2*a3 + kappa*d*Atilde`` and
    ``Dbar = A*mu + beta*Atilde`` appear in the endemic equilibrium.
    """

    a1: float
    a2: float
    a3: float
    rho: float
    Dbar: float
    A: float
    Atilde: float


def derived_constants(p: ModelParams) -> DerivedConstants:
    """Compute the composite rate constants for a parameter set."""
    a1 = p.delta + p.alpha1 + p.mu
    a2 = p.epsilon + p.alpha2 + p.mu
    a3 = p.omega + p.mu
    A = a1 * a2 * a3
    Atilde = A - p.delta * p.epsilon * p.omega
    rho = p.Lambda * p.eta * a2 * a3 + p.kappa * p.d * Atilde
    Dbar = A * p.mu + p.beta * Atilde
    return DerivedConstants(a1=a1, a2=a2, a3=a3, rho=rho, Dbar=Dbar, A=A, Atilde=Atilde)


# ---------------------------------------------------------------------------
# Haiti 2010-2011 outbreak scenario (Artibonite department).
#
# N(0) = S(0)+I(0)+Q(0)+R(0) = 7450 is the initial population behind the
# recruitment rate Lambda = 24.4*N(0)/365000; the birth rate is 24.4 per
# thousand per year.
# ---------------------------------------------------------------------------

HAITI_N0 = 7450.0

HAITI = ModelParams(
    Lambda=24.4 * HAITI_N0 / 365_000.0,
    mu=2.2493e-5,
    beta=0.7,
    kappa=1e6,
    omega=0.4 / 365.0,
    delta=0.02,
    epsilon=0.2,
    alpha1=0.012,
    alpha2=0.0001,
    eta=10.0,
    d=0.33,
    tau=2.0,
)

# Initial compartment sizes (S, I, Q, R in persons, B in cells/ml) and the
# outbreak observation horizon in days.
HAITI_INITIAL = np.array([5750.0, 1700.0, 0.0, 0.0, 275e3])
HAITI_T = 182.0
