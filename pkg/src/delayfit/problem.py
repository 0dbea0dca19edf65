"""One identification problem: model + history family + target + loss settings.

Parameters travel as a flat vector laid out theta | tau | phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjoint import GradientBundle, compute_gradients
from .loss import LossConfig, total_loss
from .solver import make_grid, solve_forward
from .spline import CubicSpline
from .types import Trajectory


@dataclass
class ForwardResult:
    traj: Trajectory
    loss: float


@dataclass
class Problem:
    f: object
    x0: object
    target: CubicSpline
    T: float
    n_tau: int
    loss_cfg: LossConfig
    horizon_term: bool = False
    history_shift: bool = True

    @property
    def p(self) -> int:
        return self.f.p

    @property
    def q(self) -> int:
        return self.x0.q

    @property
    def size(self) -> int:
        return self.p + 1 + self.q

    def pack(self, theta, tau, phi) -> np.ndarray:
        return np.concatenate([np.asarray(theta, float), [float(tau)], np.asarray(phi, float)])

    def unpack(self, params):
        params = np.asarray(params, dtype=float)
        return params[: self.p], float(params[self.p]), params[self.p + 1 :]

    def forward(self, params) -> ForwardResult:
        theta, tau, phi = self.unpack(params)
        traj = solve_forward(self.f, self.x0, theta, tau, phi, self.T, self.n_tau)
        return ForwardResult(traj, total_loss(traj, self.target, self.loss_cfg))

    def loss(self, params) -> float:
        return self.forward(params).loss

    def gradients(self, params, fwd: ForwardResult | None = None) -> GradientBundle:
        theta, tau, phi = self.unpack(params)
        if fwd is None:
            fwd = self.forward(params)
        grid = make_grid(tau, self.T, self.n_tau)
        pred = CubicSpline(fwd.traj.times, fwd.traj.states)
        bundle, _ = compute_gradients(
            self.f, self.x0, theta, tau, phi, pred, self.target, self.loss_cfg,
            grid, horizon=self.horizon_term, history_shift=self.history_shift,
        )
        return bundle

    def n_step(self, tau: float) -> int:
        return make_grid(tau, self.T, self.n_tau).n_step
