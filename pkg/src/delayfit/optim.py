"""Adam with bias correction, cosine-annealed learning rate, delay clamping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n: int, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        return cls(np.zeros(n), np.zeros(n), 0, beta1, beta2, eps)


def adam_step(state: AdamState, params, grads, lr: float) -> tuple[AdamState, np.ndarray]:
    params = np.asarray(params, dtype=float)
    g = np.asarray(grads, dtype=float)
    if params.shape != g.shape or params.shape != state.m.shape:
        raise ValueError("params, grads and optimizer state must have equal lengths")
    b1, b2 = state.beta1, state.beta2
    k = state.step_count + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * g * g
    m_hat = m / (1.0 - b1**k)
    v_hat = v / (1.0 - b2**k)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return AdamState(m, v, k, b1, b2, state.eps), new_params


@dataclass(frozen=True)
class LrSchedule:
    lr0: float = 0.03
    n_epochs: int = 500
    floor_fraction: float = 0.1

    def __call__(self, epoch: int) -> float:
        return lr_at(self, epoch)


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    """Cosine annealing from lr0 at epoch 0 to floor_fraction*lr0 at n_epochs."""
    lr_min = schedule.floor_fraction * schedule.lr0
    if schedule.n_epochs <= 0:
        return schedule.lr0
    frac = min(max(epoch, 0), schedule.n_epochs) / schedule.n_epochs
    # endpoints exactly, without rounding through lr_min + (lr0 - lr_min)
    if frac == 0.0:
        return schedule.lr0
    if frac == 1.0:
        return lr_min
    return lr_min + 0.5 * (schedule.lr0 - lr_min) * (1.0 + math.cos(math.pi * frac))


def clamp_tau(tau_new: float, tau_floor: float = 1e-3) -> float:
    return max(float(tau_new), tau_floor)
