"""Fixed-step Heun (explicit trapezoidal RK2) solver for delay IVPs.

The step is tied to the delay, dt = tau / n_tau, so every delayed state
x(t_k - tau) is either a stored grid value (index k - n_tau) or a value of
the history function. No intra-step interpolation is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import IndexOutOfRange, NonFiniteState, Trajectory


@dataclass(frozen=True)
class SolveGrid:
    n_tau: int
    dt: float
    n_step: int
    T: float

    @property
    def tau(self) -> float:
        return self.n_tau * self.dt

    @property
    def t_end(self) -> float:
        return self.n_step * self.dt


def n_steps_for(T: float, dt: float) -> int:
    """Smallest n with n*dt >= T (guarding against 1-ulp overshoot of T/dt)."""
    n = math.ceil(T / dt)
    if n > 1 and (n - 1) * dt >= T:
        n -= 1
    return max(n, 1)


def make_grid(tau: float, T: float, n_tau: int) -> SolveGrid:
    if n_tau < 1:
        raise ValueError("n_tau must be >= 1")
    if not tau > 0 or not T > 0:
        raise ValueError("tau and T must be positive")
    dt = tau / n_tau
    return SolveGrid(n_tau=n_tau, dt=dt, n_step=n_steps_for(T, dt), T=T)


def delayed_state(states, x0, phi, k: int, grid: SolveGrid) -> np.ndarray:
    """x(t_k - tau): history function if k < n_tau, else stored state k - n_tau."""
    j = k - grid.n_tau
    if j < 0:
        return x0.eval(j * grid.dt, phi)
    if j >= len(states):
        raise IndexOutOfRange(f"state {j} requested, only {len(states)} available")
    return states[j]


def solve_forward(f, x0, theta, tau: float, phi, T: float, n_tau: int) -> Trajectory:
    """Integrate x' = F(x, x(t - tau), tau, t, theta) on [0, n_step*dt] with Heun's method."""
    grid = make_grid(tau, T, n_tau)
    dt, nt = grid.dt, grid.n_tau
    theta = np.asarray(theta, dtype=float)
    # history values at t_k - tau for k < n_tau; later lookups read the buffer
    hist = x0.eval((np.arange(nt) - nt) * dt, phi)

    xs = np.empty((grid.n_step + 1, f.d))
    xs[0] = x0.eval(0.0, phi)

    def y_at(k):
        return hist[k] if k < nt else xs[k - nt]

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(grid.n_step):
            tk = k * dt
            xk = xs[k]
            k1 = f.eval(xk, y_at(k), tau, tk, theta)
            k2 = f.eval(xk + dt * k1, y_at(k + 1), tau, tk + dt, theta)
            xn = xk + 0.5 * dt * (k1 + k2)
            if not np.all(np.isfinite(xn)):
                raise NonFiniteState(f"state became non-finite at t={tk + dt:.6g}")
            xs[k + 1] = xn
    return Trajectory(t0=0.0, dt=dt, states=xs)
