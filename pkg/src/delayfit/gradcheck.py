"""Central finite-difference gradient oracle and adjoint-vs-FD comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ABS_FLOOR = 1e-4


def fd_gradient(loss_of_params, params, h_rel: float = 1e-4, steps=None) -> np.ndarray:
    """(L(p + h_i e_i) - L(p - h_i e_i)) / (2 h_i) with h_i = h_rel * max(1, |p_i|).

    ``steps`` overrides the per-component step sizes.
    """
    params = np.asarray(params, dtype=float)
    h = h_rel * np.maximum(1.0, np.abs(params)) if steps is None else np.asarray(steps, float)
    grad = np.zeros_like(params)
    for i in range(params.size):
        e = np.zeros_like(params)
        e[i] = h[i]
        grad[i] = (loss_of_params(params + e) - loss_of_params(params - e)) / (2.0 * h[i])
    return grad


def tau_step(n_step_of, tau: float, h: float, min_h: float = 1e-9) -> tuple[float, bool, int]:
    """Pick an FD step in tau that does not cross an n_step transition.

    Shrinks ``h`` until tau - h and tau + h both give tau's n_step. When tau
    sits exactly on a transition no central step exists; the returned
    direction is then +1 or -1 (one-sided stencil on the side that keeps
    n_step), otherwise 0. Returns (h, shrunk, direction).
    """
    base = n_step_of(tau)
    h0 = h
    while h > min_h:
        lo, hi = n_step_of(tau - h) == base, n_step_of(tau + h) == base
        if lo and hi:
            return h, h < h0, 0
        h *= 0.5
    h = h0
    while h > min_h:
        if n_step_of(tau + h) == base and n_step_of(tau + 2 * h) == base:
            return h, h < h0, 1
        if n_step_of(tau - h) == base and n_step_of(tau - 2 * h) == base:
            return h, h < h0, -1
        h *= 0.5
    raise ValueError(f"no admissible FD step in tau around {tau}")


def one_sided_derivative(fun, x: float, h: float, direction: int) -> float:
    """Second-order one-sided difference (-3 f0 + 4 f1 - f2) / (2h) stepping in ``direction``."""
    s = direction * h
    return (-3.0 * fun(x) + 4.0 * fun(x + s) - fun(x + 2 * s)) / (2.0 * s)


@dataclass
class ComponentCheck:
    name: str
    adjoint: float
    fd: float
    rel_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.rel_err <= self.tol


@dataclass
class GradCheckReport:
    components: list = field(default_factory=list)
    tau_step: float | None = None
    tau_step_shrunk: bool = False
    tau_one_sided: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.components)

    @property
    def max_rel_err(self) -> float:
        return max((c.rel_err for c in self.components), default=0.0)

    def failures(self) -> list:
        return [c for c in self.components if not c.passed]

    def block_max(self, prefix: str) -> float:
        errs = [c.rel_err for c in self.components if c.name.startswith(prefix)]
        return max(errs) if errs else float("nan")


def relative_error(a: float, b: float, floor: float = ABS_FLOOR) -> float:
    return abs(a - b) / max(abs(b), floor)


def compare(adjoint, fd, tol_rel_theta_phi: float = 1e-2, tol_rel_tau: float = 5e-2,
            p: int | None = None, names=None) -> GradCheckReport:
    """Per-component relative errors of an adjoint gradient against an FD vector.

    ``adjoint`` is a GradientBundle (or any object with ``flat()``) or a flat
    array in theta | tau | phi order; for a flat array pass ``p``.
    """
    if hasattr(adjoint, "grad_theta"):
        p = adjoint.grad_theta.size
        adjoint = adjoint.flat()
    adjoint = np.asarray(adjoint, dtype=float)
    fd = np.asarray(fd, dtype=float)
    if adjoint.shape != fd.shape:
        raise ValueError(f"layout mismatch: {adjoint.shape} vs {fd.shape}")
    if p is None:
        raise ValueError("p is required for flat adjoint vectors")
    if names is None:
        names = (
            [f"theta[{i}]" for i in range(p)]
            + ["tau"]
            + [f"phi[{i}]" for i in range(adjoint.size - p - 1)]
        )
    report = GradCheckReport()
    for i, (a, g) in enumerate(zip(adjoint, fd)):
        tol = tol_rel_tau if i == p else tol_rel_theta_phi
        report.components.append(ComponentCheck(names[i], a, g, relative_error(a, g), tol))
    return report


def check_problem(problem, params, h_rel: float = 1e-4,
                  tol_rel_theta_phi: float = 1e-2, tol_rel_tau: float = 5e-2) -> GradCheckReport:
    """Adjoint gradients of ``problem`` at ``params`` against central FD of its grid loss."""
    params = np.asarray(params, dtype=float)
    p = problem.p
    steps = h_rel * np.maximum(1.0, np.abs(params))
    steps[p], shrunk, direction = tau_step(problem.n_step, params[p], steps[p])
    fd = fd_gradient(problem.loss, params, steps=steps)
    if direction:
        def loss_in_tau(tau):
            moved = params.copy()
            moved[p] = tau
            return problem.loss(moved)

        fd[p] = one_sided_derivative(loss_in_tau, params[p], steps[p], direction)
    bundle = problem.gradients(params)
    report = compare(bundle, fd, tol_rel_theta_phi, tol_rel_tau)
    report.tau_step = float(steps[p])
    report.tau_step_shrunk = shrunk
    report.tau_one_sided = direction
    return report
