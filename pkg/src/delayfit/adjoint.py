"""Backward adjoint solve and gradient assembly for delay IVPs.

The adjoint lives on the same grid as the forward solve, nodes
T_end - k*dt for k = 0..n_step with T_end = n_step*dt, so the advanced
term lambda(t + tau) is the value n_tau nodes earlier in the backward sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loss import LossConfig, pointwise_loss, pointwise_loss_grad
from .solver import SolveGrid
from .spline import CubicSpline
from .types import NonFiniteState


@dataclass(frozen=True)
class AdjointTrajectory:
    """lambda at times t_end - k*dt, k = 0..n_step (backward order)."""

    t_end: float
    dt: float
    lambdas: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t_end - np.arange(self.lambdas.shape[0]) * self.dt

    def forward_order(self) -> np.ndarray:
        """lambda at times 0, dt, ..., t_end (index i <-> time i*dt)."""
        return self.lambdas[::-1]


@dataclass(frozen=True)
class GradientBundle:
    grad_theta: np.ndarray
    grad_tau: float
    grad_phi: np.ndarray

    def flat(self) -> np.ndarray:
        """Concatenation theta | tau | phi."""
        return np.concatenate([self.grad_theta, [self.grad_tau], self.grad_phi])


def quad_modified_trapezoid(values, T: float, dt: float):
    """Approximate the integral over [0, T] from samples at T, T - dt, T - 2dt, ...

    ``values[k]`` is the integrand at ``T - k*dt``. Subintervals of width dt
    between nodes above 0 use the ordinary trapezoid; the first subinterval
    [0, T - (m-1)*dt], where m is the first node at or below 0, takes its
    left value from linear interpolation of the two bracketing nodes.
    Values may carry trailing axes (vector integrands).
    """
    values = np.asarray(values, dtype=float)
    if T <= 0:
        return np.zeros(values.shape[1:])
    eps = 1e-12 * max(1.0, abs(T))
    m = int(np.ceil(T / dt - eps / dt))
    while T - m * dt > eps:
        m += 1
    while m > 1 and T - (m - 1) * dt <= eps:
        m -= 1
    if values.shape[0] < m + 1:
        raise ValueError(f"need {m + 1} nodes to reach t=0, got {values.shape[0]}")
    v = values[: m + 1]
    inner = 0.5 * dt * (v[: m - 1] + v[1:m]).sum(axis=0)
    s_above = T - (m - 1) * dt  # width of the first subinterval
    s_below = T - m * dt  # <= 0
    # linear interpolation to t = 0 between nodes m-1 (at s_above) and m (at s_below)
    frac = (0.0 - s_below) / dt
    v0 = v[m] + frac * (v[m - 1] - v[m])
    return inner + 0.5 * s_above * (v0 + v[m - 1])


@dataclass
class _NodeData:
    """Model quantities at forward-grid nodes i = 0..n_step (time i*dt)."""

    x: np.ndarray  # x(t_i)
    y: np.ndarray  # x(t_i - tau)
    fx: np.ndarray  # dF/dx at (x_i, y_i, tau, t_i)
    fy: np.ndarray  # dF/dy at (x_i, y_i, tau, t_i)


def _node_data(f, x0, theta, tau, phi, pred: CubicSpline, grid: SolveGrid) -> _NodeData:
    n, nt, dt = grid.n_step, grid.n_tau, grid.dt
    idx = np.arange(n + 1)
    t = idx * dt
    x = pred(t)
    y = np.empty_like(x)
    hist = idx < nt
    y[hist] = x0.eval((idx[hist] - nt) * dt, phi)
    y[~hist] = x[idx[~hist] - nt]
    return _NodeData(
        x=x,
        y=y,
        fx=f.jac_x(x, y, tau, t, theta),
        fy=f.jac_y(x, y, tau, t, theta),
    )


def solve_adjoint(
    f, x0, theta, tau, phi, pred: CubicSpline, target: CubicSpline, cfg: LossConfig,
    grid: SolveGrid, nodes: _NodeData | None = None,
) -> AdjointTrajectory:
    """Heun sweep of the adjoint equation from t_end down to 0.

    lambda' = grad ell(x) - Fx^T lambda - 1{t < t_end - tau} Fy(t + tau)^T lambda(t + tau),
    lambda(t_end) = -grad G(x(t_end)).
    """
    if nodes is None:
        nodes = _node_data(f, x0, theta, tau, phi, pred, grid)
    n, nt, dt = grid.n_step, grid.n_tau, grid.dt
    d = nodes.x.shape[1]
    t = np.arange(n + 1) * dt
    ref = target(t)

    if cfg.running_norm is not None:
        forcing = pointwise_loss_grad(nodes.x, ref, cfg.running_norm)
    else:
        forcing = np.zeros((n + 1, d))
    fxT = np.swapaxes(nodes.fx, -1, -2)
    fyT = np.swapaxes(nodes.fy, -1, -2)

    lam = np.zeros((n + 1, d))  # forward index
    if cfg.terminal_norm is not None:
        lam[n] = -pointwise_loss_grad(nodes.x[n], ref[n], cfg.terminal_norm)

    def rhs(i, li):
        g = forcing[i] - fxT[i] @ li
        if i + nt < n:  # t_i < t_end - tau
            g = g - fyT[i + nt] @ lam[i + nt]
        return g

    for i in range(n, 0, -1):
        g1 = rhs(i, lam[i])
        g2 = rhs(i - 1, lam[i] - dt * g1)
        lam[i - 1] = lam[i] - 0.5 * dt * (g1 + g2)
        if not np.all(np.isfinite(lam[i - 1])):
            raise NonFiniteState(f"adjoint became non-finite at t={(i - 1) * dt:.6g}")
    return AdjointTrajectory(t_end=grid.t_end, dt=dt, lambdas=lam[::-1].copy())


def grad_theta(f, theta, tau, lam: AdjointTrajectory, grid: SolveGrid, nodes: _NodeData) -> np.ndarray:
    """-integral over [0, t_end] of Ftheta^T lambda."""
    if f.p == 0:
        return np.zeros(0)
    t = np.arange(grid.n_step + 1) * grid.dt
    ftheta = f.jac_theta(nodes.x, nodes.y, tau, t, theta)  # (n+1, d, p)
    integrand = np.einsum("idp,id->ip", ftheta, lam.forward_order())
    # quadrature expects backward node order
    return -quad_modified_trapezoid(integrand[::-1], grid.t_end, grid.dt)


def grad_tau(
    f, theta, tau, lam: AdjointTrajectory, grid: SolveGrid, nodes: _NodeData,
    target: CubicSpline | None = None, cfg: LossConfig | None = None,
    horizon: bool = False, x0=None, phi=None,
) -> float:
    """Delay derivative: integral over [0, t_end - tau] of <Fy(t+tau)^T lambda(t+tau), x'(t)>
    minus integral over [0, t_end] of <Ftau, lambda>.

    If ``x0`` and ``phi`` are given, the history's own motion is included:
    x(t - tau) = X0(t - tau) for t < tau also shifts with tau, adding the
    integral over [0, tau] of <Fy^T lambda, dX0/dt(t - tau)>. Without it the
    result is exact only for constant histories.

    With ``horizon`` set (and target/cfg given), adds the derivative of the
    moving upper limit t_end = n_step * tau / n_tau of the grid loss.
    """
    n, nt, dt = grid.n_step, grid.n_tau, grid.dt
    t = np.arange(n + 1) * dt
    lf = lam.forward_order()
    xdot = f.eval(nodes.x, nodes.y, tau, t, theta)

    first = 0.0
    if nt < n:
        # node i in [0, n - nt]: advanced lambda and Fy taken at node i + nt
        adv = np.einsum("idk,id->ik", nodes.fy[nt:], lf[nt:])  # Fy^T lambda at t + tau
        integrand = np.einsum("ik,ik->i", adv, xdot[: n - nt + 1])
        first = quad_modified_trapezoid(integrand[::-1], grid.t_end - grid.tau, dt)

    if x0 is not None and phi is not None:
        m = min(nt, n)
        idx = np.arange(m + 1)
        w = np.einsum("ikd,ik->id", nodes.fy[: m + 1], lf[: m + 1])
        hist_rate = x0.eval_dt((idx - nt) * dt, phi)
        hist = np.einsum("id,id->i", w, hist_rate)
        first += quad_modified_trapezoid(hist[::-1], m * dt, dt)

    ftau = f.jac_tau(nodes.x, nodes.y, tau, t, theta)
    second = quad_modified_trapezoid(np.einsum("id,id->i", ftau, lf)[::-1], grid.t_end, dt)
    value = float(first - second)

    if horizon and target is not None and cfg is not None:
        dtend = n / nt
        x_end = nodes.x[n]
        ref_end = target(grid.t_end)
        if cfg.running_norm is not None:
            value += dtend * float(pointwise_loss(x_end, ref_end, cfg.running_norm))
        if cfg.terminal_norm is not None:
            gG = pointwise_loss_grad(x_end, ref_end, cfg.terminal_norm)
            rate = xdot[n] - target.derivative(grid.t_end)
            value += dtend * float(gG @ rate)
    return value


def lambda_at_zero(lam: AdjointTrajectory) -> np.ndarray:
    """lambda(0), linearly interpolated between the two nodes bracketing t = 0."""
    times = lam.times
    m = int(np.argmax(times <= 1e-12 * max(1.0, lam.t_end)))
    if m == 0 or abs(times[m]) <= 1e-12 * max(1.0, lam.t_end):
        return lam.lambdas[m].copy()
    frac = -times[m] / lam.dt
    return lam.lambdas[m] + frac * (lam.lambdas[m - 1] - lam.lambdas[m])


def grad_phi(
    f, x0, theta, tau, phi, lam: AdjointTrajectory, grid: SolveGrid, nodes: _NodeData,
) -> np.ndarray:
    """-dX0(0)^T lambda(0) - integral over [0, tau] of dX0(t - tau)^T Fy^T lambda(t)."""
    n, nt, dt = grid.n_step, grid.n_tau, grid.dt
    lf = lam.forward_order()
    first = x0.jac_phi(0.0, phi).T @ lambda_at_zero(lam)

    m = min(nt, n)  # lambda vanishes beyond t_end
    idx = np.arange(m + 1)
    jphi = x0.jac_phi((idx - nt) * dt, phi)  # (m+1, d, q)
    w = np.einsum("ikd,ik->id", nodes.fy[: m + 1], lf[: m + 1])  # Fy^T lambda
    integrand = np.einsum("idq,id->iq", jphi, w)
    second = quad_modified_trapezoid(integrand[::-1], m * dt, dt)
    return -(first + second)


def compute_gradients(
    f, x0, theta, tau, phi, pred: CubicSpline, target: CubicSpline, cfg: LossConfig,
    grid: SolveGrid, horizon: bool = False, history_shift: bool = True,
) -> tuple[GradientBundle, AdjointTrajectory]:
    """Backward pass: adjoint solve followed by all three gradient blocks.

    ``history_shift`` toggles the dX0/dt contribution to the delay derivative;
    ``horizon`` the moving-endpoint term of the grid loss (see grad_tau).
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    nodes = _node_data(f, x0, theta, tau, phi, pred, grid)
    lam = solve_adjoint(f, x0, theta, tau, phi, pred, target, cfg, grid, nodes)
    bundle = GradientBundle(
        grad_theta=grad_theta(f, theta, tau, lam, grid, nodes),
        grad_tau=grad_tau(
            f, theta, tau, lam, grid, nodes, target, cfg, horizon,
            x0=x0 if history_shift else None, phi=phi,
        ),
        grad_phi=grad_phi(f, x0, theta, tau, phi, lam, grid, nodes),
    )
    return bundle, lam
