"""Running/terminal losses with weighted L1, L2 and L-infinity pointwise norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import DimensionMismatch, Trajectory

KINDS = ("L1", "L2", "LInf")


@dataclass(frozen=True)
class NormKind:
    kind: str = "L2"
    weights: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"norm kind must be one of {KINDS}, got {self.kind!r}")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if any(not v > 0 for v in w):
                raise ValueError("norm weights must be strictly positive")
            object.__setattr__(self, "weights", w)

    def w(self, d: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(d)
        if len(self.weights) != d:
            raise DimensionMismatch(f"{len(self.weights)} weights for dimension {d}")
        return np.asarray(self.weights)


@dataclass(frozen=True)
class LossConfig:
    running_norm: NormKind | None = NormKind("L2")
    terminal_norm: NormKind | None = None

    def __post_init__(self):
        if self.running_norm is None and self.terminal_norm is None:
            raise ValueError("at least one of running/terminal loss must be active")


def _diff(x, x_ref):
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    if x.shape != x_ref.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {x_ref.shape} differ")
    return x - x_ref


def pointwise_loss(x, x_ref, norm: NormKind):
    """Loss of state(s) ``x`` against ``x_ref``; leading axes are kept."""
    r = _diff(x, x_ref)
    w = norm.w(r.shape[-1])
    if norm.kind == "L2":
        return np.sum(w * r**2, axis=-1)
    if norm.kind == "L1":
        return np.sum(w * np.abs(r), axis=-1)
    return np.max(w * np.abs(r), axis=-1)


def pointwise_loss_grad(x, x_ref, norm: NormKind) -> np.ndarray:
    """Gradient in ``x``; sign(0) = 0 and L-infinity ties go to the lowest index."""
    r = _diff(x, x_ref)
    w = norm.w(r.shape[-1])
    if norm.kind == "L2":
        return 2.0 * w * r
    if norm.kind == "L1":
        return w * np.sign(r)
    j = np.argmax(w * np.abs(r), axis=-1)
    out = np.zeros_like(r)
    picked = np.take_along_axis(w * np.sign(r), j[..., None], axis=-1)
    np.put_along_axis(out, j[..., None], picked, axis=-1)
    return out


def total_loss(pred: Trajectory, target, cfg: LossConfig) -> float:
    """Trapezoid over the solver grid 0..n_step*dt plus the terminal term at n_step*dt.

    The target spline is extrapolated past its last knot when the grid overshoots.
    """
    ref = target(pred.times)
    value = 0.0
    if cfg.running_norm is not None:
        ell = pointwise_loss(pred.states, ref, cfg.running_norm)
        value += pred.dt * (ell.sum() - 0.5 * (ell[0] + ell[-1]))
    if cfg.terminal_norm is not None:
        value += float(pointwise_loss(pred.states[-1], ref[-1], cfg.terminal_norm))
    return float(value)
