"""Shared value types: trajectories on uniform grids, model interfaces, errors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np


class DelayFitError(Exception):
    """Base class for all errors raised by this package."""


class NotOnGrid(DelayFitError):
    pass


class DegenerateInput(DelayFitError):
    pass


class DimensionMismatch(DelayFitError):
    pass


class NonFiniteState(DelayFitError):
    """A solve produced NaN/Inf, usually because the dynamics blew up."""


class SingularDynamics(DelayFitError):
    pass


class IndexOutOfRange(DelayFitError):
    pass


class ParseError(DelayFitError):
    pass


class ConfigError(DelayFitError):
    pass


def as_state(values, d: int | None = None) -> np.ndarray:
    """Return a read-only float64 copy of ``values`` checked for finiteness and length."""
    arr = np.array(values, dtype=float).reshape(-1)
    if d is not None and arr.shape[0] != d:
        raise DimensionMismatch(f"expected length {d}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteState(f"non-finite components in {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Trajectory:
    """States on the uniform grid ``t0 + k*dt``, k = 0..N.

    Times are never stored; they are derived from ``(t0, dt, k)``.
    ``states`` has shape ``(N + 1, d)``.
    """

    t0: float
    dt: float
    states: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise DegenerateInput(f"dt must be positive, got {self.dt}")
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] == 0:
            raise DegenerateInput("states must be a non-empty (N+1, d) array")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def d(self) -> int:
        return self.states.shape[1]

    @property
    def n(self) -> int:
        """Number of steps (the index of the last state)."""
        return self.states.shape[0] - 1

    def time(self, k: int) -> float:
        return self.t0 + k * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n + 1) * self.dt

    @property
    def t_end(self) -> float:
        return self.time(self.n)

    def __len__(self) -> int:
        return self.states.shape[0]


def trajectory_index_of(traj: Trajectory, t: float) -> int:
    """Index k with ``t == t0 + k*dt`` up to a relative tolerance of 1e-9."""
    k = int(round((t - traj.t0) / traj.dt))
    if abs(t - traj.time(k)) > 1e-9 * max(1.0, abs(t)):
        raise NotOnGrid(f"t={t} is not a grid time (t0={traj.t0}, dt={traj.dt})")
    if not 0 <= k <= traj.n:
        raise NotOnGrid(f"t={t} lies outside the trajectory")
    return k


class DynamicsModel(Protocol):
    """Right-hand side F(x, y, tau, t, theta) of a delay equation.

    All methods broadcast over leading axes: ``x`` and ``y`` have shape
    ``(..., d)`` and ``t`` is a scalar or has shape ``(...)``.
    """

    name: str
    d: int
    p: int

    def eval(self, x, y, tau, t, theta) -> np.ndarray: ...  # (..., d)

    def jac_x(self, x, y, tau, t, theta) -> np.ndarray: ...  # (..., d, d)

    def jac_y(self, x, y, tau, t, theta) -> np.ndarray: ...  # (..., d, d)

    def jac_tau(self, x, y, tau, t, theta) -> np.ndarray: ...  # (..., d)

    def jac_theta(self, x, y, tau, t, theta) -> np.ndarray: ...  # (..., d, p)


class InitialConditionModel(Protocol):
    """History function X0(t, phi) on [-tau, 0]; ``t`` may be an array."""

    name: str
    d: int
    q: int

    def eval(self, t, phi) -> np.ndarray: ...  # (..., d)

    def jac_phi(self, t, phi) -> np.ndarray: ...  # (..., d, q)

    def eval_dt(self, t, phi) -> np.ndarray: ...  # (..., d), time derivative
