"""Gradient-based identification loop: forward solve, loss, adjoint, Adam."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .loss import LossConfig, NormKind
from .models import make_ic, make_model
from .optim import AdamState, LrSchedule, adam_step, clamp_tau, lr_at
from .problem import Problem
from .spline import CubicSpline
from .types import ConfigError, DelayFitError, NonFiniteState, Trajectory

log = logging.getLogger(__name__)

EPOCHS_EXHAUSTED = "epochs_exhausted"
LOSS_BELOW_MIN = "loss_below_min"
BLOW_UP = "blow_up"


@dataclass(frozen=True)
class FitConfig:
    model: str
    ic: str
    init_theta: tuple
    init_tau: float
    init_phi: tuple
    T: float | None = None  # defaults to the last data time
    n_tau: int = 10
    n_epochs: int = 500
    lr0: float = 0.03
    L_min: float = 0.01
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    tau_floor: float = 1e-3
    init_phi_from_data: tuple = ()
    model_kwargs: dict = field(default_factory=dict)
    history_shift: bool = True

    def __post_init__(self):
        if self.n_tau < 1:
            raise ConfigError("n_tau must be >= 1")
        if not self.L_min > 0:
            raise ConfigError("L_min must be positive")
        if not self.init_tau > 0:
            raise ConfigError("initial tau must be positive")
        if self.n_epochs < 0:
            raise ConfigError("n_epochs must be >= 0")
        if not self.lr0 > 0:
            raise ConfigError("lr0 must be positive")


@dataclass
class FitResult:
    theta: np.ndarray
    tau: float
    phi: np.ndarray
    loss_history: list
    stop_reason: str
    trajectory: Trajectory | None
    grad_history: list = field(default_factory=list, repr=False)
    param_history: list = field(default_factory=list, repr=False)

    @property
    def epochs(self) -> int:
        return len(self.loss_history)

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1] if self.loss_history else float("nan")


def initial_params(cfg: FitConfig, problem: Problem, first_sample) -> np.ndarray:
    """Initial flat vector, with listed phi entries replaced by the first sample.

    Entry i of phi maps to state component i - (q - d), i.e. the trailing
    d entries of phi are the per-component offsets of the history family.
    """
    phi = np.array(cfg.init_phi, dtype=float)
    d = problem.f.d
    for i in cfg.init_phi_from_data:
        comp = i - (problem.q - d)
        if not 0 <= comp < d:
            raise ConfigError(f"phi index {i} does not map to a state component")
        phi[i] = first_sample[comp]
    return problem.pack(cfg.init_theta, cfg.init_tau, phi)


def build_problem(cfg: FitConfig, times, values, horizon_term: bool = False) -> Problem:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    f = make_model(cfg.model, **cfg.model_kwargs)
    x0 = make_ic(cfg.ic, f.d)
    if values.shape[1] != f.d:
        raise ConfigError(f"data has {values.shape[1]} components, model {cfg.model} expects {f.d}")
    if len(cfg.init_theta) != f.p or len(cfg.init_phi) != x0.q:
        raise ConfigError(
            f"{cfg.model}/{cfg.ic} needs {f.p} theta and {x0.q} phi entries, "
            f"got {len(cfg.init_theta)} and {len(cfg.init_phi)}"
        )
    target = CubicSpline(times, values)
    T = float(times[-1]) if cfg.T is None else float(cfg.T)
    return Problem(f, x0, target, T, cfg.n_tau, cfg.loss, horizon_term=horizon_term,
                   history_shift=cfg.history_shift)


def fit(cfg: FitConfig, data_times, data_values, record: bool = False) -> FitResult:
    """Run up to ``cfg.n_epochs`` Adam epochs; see module docstring.

    With ``record`` the per-epoch gradients and parameters are kept too.
    """
    problem = build_problem(cfg, data_times, data_values)
    params = initial_params(cfg, problem, np.atleast_2d(np.asarray(data_values, float).T).T[0])
    schedule = LrSchedule(cfg.lr0, cfg.n_epochs)
    state = AdamState.fresh(problem.size, cfg.beta1, cfg.beta2)
    tau_idx = problem.p

    losses: list = []
    grads_seen: list = []
    params_seen: list = []
    last_traj = None
    last_good = None  # parameters of the last finite forward solve
    reason = EPOCHS_EXHAUSTED
    for epoch in range(cfg.n_epochs):
        try:
            fwd = problem.forward(params)
            if not np.isfinite(fwd.loss):
                raise NonFiniteState("loss is not finite")
        except NonFiniteState as exc:
            log.warning("epoch %d: forward solve failed (%s)", epoch, exc)
            reason = BLOW_UP
            if last_good is not None:
                params = last_good
            break
        losses.append(fwd.loss)
        last_good = params
        last_traj = fwd.traj
        if record:
            params_seen.append(params.copy())
        if fwd.loss < cfg.L_min:
            reason = LOSS_BELOW_MIN
            break
        try:
            g = problem.gradients(params, fwd).flat()
        except NonFiniteState as exc:
            log.warning("epoch %d: adjoint solve failed (%s)", epoch, exc)
            reason = BLOW_UP
            break
        if not np.all(np.isfinite(g)):
            reason = BLOW_UP
            break
        if record:
            grads_seen.append(g.copy())
        state, new_params = adam_step(state, params, g, lr_at(schedule, epoch))
        new_params[tau_idx] = clamp_tau(new_params[tau_idx], cfg.tau_floor)
        params = new_params

    if last_traj is None or reason == EPOCHS_EXHAUSTED:
        # report the trajectory of the parameters actually returned
        try:
            last_traj = problem.forward(params).traj
        except DelayFitError:
            pass
    theta, tau, phi = problem.unpack(params)
    return FitResult(theta.copy(), tau, phi.copy(), losses, reason, last_traj,
                     grads_seen, params_seen)
