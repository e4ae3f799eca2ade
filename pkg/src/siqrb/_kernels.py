"""Numba-compiled inner loops: forward integration and the adjoint sweep.

Conventions shared by every kernel here:

* ``pv`` is the parameter vector from ``ModelParams.as_vector()`` in the order
  (Lambda, mu, beta, kappa, omega, delta, epsilon, alpha1, alpha2, eta, d).
* ``m`` is the delay expressed in grid steps (``tau/h``, integral).
* States live on nodes 0..n, controls on intervals 0..n-1.  The delayed
  lookup for step k reads node k-m, falling back to the constant prehistory
  (= the initial state) whenever k-m <= 0.
* Status codes returned by the forward kernels: 0 ok, 1 a component dropped
  below the negativity tolerance, 2 a non-finite value appeared.  Small
  undershoots in (-NEG_TOL, 0) are clamped to zero and counted.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NEG_TOL = 1e-9


@njit(cache=True)
def rhs(x, x_delayed, u, pv):
    """Controlled vector field; u = 1 recovers the uncontrolled model."""
    Lam, mu, beta, kappa, omega, delta, eps, a1d, a2d, eta, d = pv
    S, I, Q, R, B = x
    Sd = x_delayed[0]
    Bd = x_delayed[4]
    incidence = beta * Bd / (kappa + Bd) * Sd
    foi = beta * B / (kappa + B)
    out = np.empty(5)
    out[0] = Lam - foi * S + omega * R - mu * S
    out[1] = incidence - (delta * u + a1d + mu) * I
    out[2] = delta * u * I - (eps + a2d + mu) * Q
    out[3] = eps * Q - (omega + mu) * R
    out[4] = eta * I - d * B
    return out


@njit(cache=True)
def euler_forward(x0, u, n, m, h, pv):
    """Explicit Euler with constant prehistory.

    Returns (states, status, bad_step, n_clamped, min_component).
    """
    states = np.empty((n + 1, 5))
    states[0] = x0
    n_clamped = 0
    min_comp = 0.0
    for k in range(n):
        xd = x0 if k - m <= 0 else states[k - m]
        dx = rhs(states[k], xd, u[k], pv)
        for i in range(5):
            v = states[k, i] + h * dx[i]
            if not np.isfinite(v):
                return states, 2, k + 1, n_clamped, min_comp
            if v < min_comp:
                min_comp = v
            if v < 0.0:
                if v <= -NEG_TOL:
                    return states, 1, k + 1, n_clamped, min_comp
                v = 0.0
                n_clamped += 1
            states[k + 1, i] = v
    return states, 0, -1, n_clamped, min_comp


@njit(cache=True)
def rk4_forward(x0, u, n, m, h, pv):
    """Classical RK4 stages on the undelayed arguments.

    Delayed values are read from grid nodes only; within a step every stage
    reuses the start-of-step delayed node, so for tau > 0 the delayed
    coupling is frozen over the step.  Diagnostic scheme, not the reference.
    """
    states = np.empty((n + 1, 5))
    states[0] = x0
    n_clamped = 0
    min_comp = 0.0
    for k in range(n):
        xd = x0 if k - m <= 0 else states[k - m]
        uk = u[k]
        k1 = rhs(states[k], xd, uk, pv)
        k2 = rhs(states[k] + 0.5 * h * k1, xd, uk, pv)
        k3 = rhs(states[k] + 0.5 * h * k2, xd, uk, pv)
        k4 = rhs(states[k] + h * k3, xd, uk, pv)
        for i in range(5):
            v = states[k, i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(v):
                return states, 2, k + 1, n_clamped, min_comp
            if v < min_comp:
                min_comp = v
            if v < 0.0:
                if v <= -NEG_TOL:
                    return states, 1, k + 1, n_clamped, min_comp
                v = 0.0
                n_clamped += 1
            states[k + 1, i] = v
    return states, 0, -1, n_clamped, min_comp


@njit(cache=True)
def adjoint_backward(states, u, n, m, h, pv, W_I, W_B):
    """Exact discrete adjoint of the Euler transcription.

    Runs strictly backward from the zero terminal costate.  The advanced
    terms read lambda_2 at node j+m+1; the indicator j+m <= n-1 zeroes them
    once the advanced node falls beyond the horizon, mirroring the window
    [0, T-tau] of the continuous adjoint equations.  Costate equations for
    nodes j use state node j and the next costate node j+1, which is the
    pairing that makes h*(W_u + delta*I_j*(l3_{j+1} - l2_{j+1})) the exact
    gradient of the discrete cost.
    """
    Lam, mu, beta, kappa, omega, delta, eps, a1d, a2d, eta, d = pv
    lam = np.zeros((n + 1, 5))
    for j in range(n - 1, -1, -1):
        l1n = lam[j + 1, 0]
        l2n = lam[j + 1, 1]
        l3n = lam[j + 1, 2]
        l4n = lam[j + 1, 3]
        l5n = lam[j + 1, 4]
        S = states[j, 0]
        B = states[j, 4]
        I = states[j, 1]
        foi = beta * B / (kappa + B)
        sens = beta * kappa * S / (kappa + B) ** 2
        uj = u[j]
        adv1 = 0.0
        adv5 = 0.0
        if j + m <= n - 1:
            l2adv = lam[j + m + 1, 1]
            adv1 = foi * l2adv
            adv5 = sens * l2adv
        lam[j, 0] = l1n + h * (-(foi + mu) * l1n + adv1)
        lam[j, 1] = l2n + h * (W_I - (delta * uj + a1d + mu) * l2n + delta * uj * l3n + eta * l5n)
        lam[j, 2] = l3n + h * (-(eps + a2d + mu) * l3n + eps * l4n)
        lam[j, 3] = l4n + h * (omega * l1n - (omega + mu) * l4n)
        lam[j, 4] = l5n + h * (W_B - sens * l1n + adv5 - d * l5n)
    return lam
