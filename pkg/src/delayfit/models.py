"""Benchmark delay models and history-function families with analytic Jacobians.

Every method broadcasts over leading axes so the adjoint pass can evaluate
Jacobians at all grid nodes in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import ConfigError, SingularDynamics


def _b(a):
    return np.asarray(a, dtype=float)


def _leading(x, y, t):
    return np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1], np.shape(t))


class ExponentialDecay:
    """x' = theta0 * x + theta1 * y (componentwise for any d)."""

    name = "exponential"

    def __init__(self, d: int = 1):
        self.d = d
        self.p = 2 * d

    def _split(self, theta):
        theta = _b(theta)
        return theta[: self.d], theta[self.d :]

    def eval(self, x, y, tau, t, theta):
        a, b = self._split(theta)
        return a * _b(x) + b * _b(y)

    def jac_x(self, x, y, tau, t, theta):
        a, _ = self._split(theta)
        lead = _leading(x, y, t)
        return np.broadcast_to(np.diag(a), lead + (self.d, self.d)).copy()

    def jac_y(self, x, y, tau, t, theta):
        _, b = self._split(theta)
        lead = _leading(x, y, t)
        return np.broadcast_to(np.diag(b), lead + (self.d, self.d)).copy()

    def jac_tau(self, x, y, tau, t, theta):
        return np.zeros(_leading(x, y, t) + (self.d,))

    def jac_theta(self, x, y, tau, t, theta):
        x, y = np.broadcast_arrays(_b(x), _b(y))
        eye = np.eye(self.d)
        # d/d theta0_i of F_i = x_i ; d/d theta1_i = y_i
        return np.concatenate([eye * x[..., None, :], eye * y[..., None, :]], axis=-1)


class LogisticDelay:
    """x' = theta0 * x * (1 - theta1 * y), d = 1."""

    name = "logistic"
    d = 1
    p = 2

    def eval(self, x, y, tau, t, theta):
        r, k = theta
        return r * _b(x) * (1.0 - k * _b(y))

    def jac_x(self, x, y, tau, t, theta):
        r, k = theta
        x, y = np.broadcast_arrays(_b(x), _b(y))
        return (r * (1.0 - k * y))[..., None]

    def jac_y(self, x, y, tau, t, theta):
        r, k = theta
        x, y = np.broadcast_arrays(_b(x), _b(y))
        return (-r * k * x)[..., None]

    def jac_tau(self, x, y, tau, t, theta):
        return np.zeros(_leading(x, y, t) + (1,))

    def jac_theta(self, x, y, tau, t, theta):
        r, k = theta
        x, y = np.broadcast_arrays(_b(x), _b(y))
        return np.stack([x * (1.0 - k * y), -r * x * y], axis=-1)


class ENSO:
    """Delayed-oscillator sea-surface temperature model, d = 1.

    x' = theta0 * x - theta1 * x**3 - theta2 * y
    """

    name = "enso"
    d = 1
    p = 3

    def eval(self, x, y, tau, t, theta):
        a, b, c = theta
        x = _b(x)
        return a * x - b * x**3 - c * _b(y)

    def jac_x(self, x, y, tau, t, theta):
        a, b, _ = theta
        x, y = np.broadcast_arrays(_b(x), _b(y))
        return (a - 3.0 * b * x**2)[..., None]

    def jac_y(self, x, y, tau, t, theta):
        c = theta[2]
        x, y = np.broadcast_arrays(_b(x), _b(y))
        return np.full(x.shape + (1,), -c)

    def jac_tau(self, x, y, tau, t, theta):
        return np.zeros(_leading(x, y, t) + (1,))

    def jac_theta(self, x, y, tau, t, theta):
        x, y = np.broadcast_arrays(_b(x), _b(y))
        return np.stack([x, -(x**3), -y], axis=-1)


class CheyneStokes:
    """Blood CO2 model: x' = p - V0 * x * y**m / (alpha + y**m), theta = (p, V0, alpha).

    The Hill exponent ``m`` is a fixed integer, not trained.
    """

    name = "cheyne"
    d = 1
    p = 3

    def __init__(self, m: int = 8):
        self.m = m

    def _parts(self, y, alpha):
        ym = _b(y) ** self.m
        den = alpha + ym
        if np.any(den == 0):
            raise SingularDynamics("alpha + y**m vanished")
        return ym, den

    def eval(self, x, y, tau, t, theta):
        p, v0, alpha = theta
        ym, den = self._parts(y, alpha)
        return p - v0 * _b(x) * ym / den

    def jac_x(self, x, y, tau, t, theta):
        _, v0, alpha = theta
        x, y = np.broadcast_arrays(_b(x), _b(y))
        ym, den = self._parts(y, alpha)
        return (-v0 * ym / den)[..., None]

    def jac_y(self, x, y, tau, t, theta):
        _, v0, alpha = theta
        x, y = np.broadcast_arrays(_b(x), _b(y))
        ym, den = self._parts(y, alpha)
        # d/dy [y^m / (alpha + y^m)] = alpha * m * y^(m-1) / (alpha + y^m)^2
        dfrac = alpha * self.m * y ** (self.m - 1) / den**2
        return (-v0 * x * dfrac)[..., None]

    def jac_tau(self, x, y, tau, t, theta):
        return np.zeros(_leading(x, y, t) + (1,))

    def jac_theta(self, x, y, tau, t, theta):
        _, v0, alpha = theta
        x, y = np.broadcast_arrays(_b(x), _b(y))
        ym, den = self._parts(y, alpha)
        return np.stack(
            [np.ones_like(x), -x * ym / den, v0 * x * ym / den**2], axis=-1
        )


@dataclass(frozen=True)
class HIVConstants:
    k: float = 0.00343
    m: float = 3.8
    delta: float = 0.05
    c: float = 2.0
    T0: float = 1000.0
    n_p: float = 0.43
    N: float = 48.0


class HIV:
    """Infected T-cells / infectious virus / non-infectious virus, d = 3.

    State order is (T*, V_I, V_NI). All coefficients are fixed, so theta is
    empty; only the delay enters explicitly, through exp(-m * tau).
    """

    name = "hiv"
    d = 3
    p = 0

    def __init__(self, constants: HIVConstants | None = None):
        self.const = constants or HIVConstants()

    def _gain(self, tau):
        c = self.const
        return c.k * c.T0 * np.exp(-c.m * tau)

    def eval(self, x, y, tau, t, theta=()):
        c = self.const
        x, y = np.broadcast_arrays(_b(x), _b(y))
        ts, vi, vni = x[..., 0], x[..., 1], x[..., 2]
        return np.stack(
            [
                self._gain(tau) * y[..., 1] - c.delta * ts,
                (1.0 - c.n_p) * c.N * c.delta * ts - c.c * vi,
                c.n_p * c.N * c.delta * ts - c.c * vni,
            ],
            axis=-1,
        )

    def jac_x(self, x, y, tau, t, theta=()):
        c = self.const
        lead = _leading(x, y, t)
        J = np.array(
            [
                [-c.delta, 0.0, 0.0],
                [(1.0 - c.n_p) * c.N * c.delta, -c.c, 0.0],
                [c.n_p * c.N * c.delta, 0.0, -c.c],
            ]
        )
        return np.broadcast_to(J, lead + (3, 3)).copy()

    def jac_y(self, x, y, tau, t, theta=()):
        lead = _leading(x, y, t)
        J = np.zeros((3, 3))
        J[0, 1] = self._gain(tau)
        return np.broadcast_to(J, lead + (3, 3)).copy()

    def jac_tau(self, x, y, tau, t, theta=()):
        y = np.broadcast_to(_b(y), _leading(x, y, t) + (3,))
        out = np.zeros(y.shape)
        out[..., 0] = -self.const.m * self._gain(tau) * y[..., 1]
        return out

    def jac_theta(self, x, y, tau, t, theta=()):
        return np.zeros(_leading(x, y, t) + (3, 0))


# --- history functions -----------------------------------------------------


def _t_col(t):
    return np.asarray(t, dtype=float)[..., None]


class ConstantIC:
    """X0(t) = b."""

    name = "constant"
    groups = ("b",)

    def __init__(self, d: int):
        self.d = d
        self.q = d

    def eval(self, t, phi):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(_b(phi), t.shape + (self.d,)).copy()

    def jac_phi(self, t, phi):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.eye(self.d), t.shape + (self.d, self.d)).copy()

    def eval_dt(self, t, phi):
        return np.zeros(np.shape(t) + (self.d,))


class AffineIC:
    """X0(t) = a*t + b with phi = (a, b)."""

    name = "affine"
    groups = ("a", "b")

    def __init__(self, d: int):
        self.d = d
        self.q = 2 * d

    def eval(self, t, phi):
        phi = _b(phi)
        a, b = phi[: self.d], phi[self.d :]
        return a * _t_col(t) + b

    def jac_phi(self, t, phi):
        tc = _t_col(t)[..., None]  # (..., 1, 1)
        eye = np.eye(self.d)
        lead = np.shape(t)
        return np.concatenate(
            [eye * tc, np.broadcast_to(eye, lead + (self.d, self.d))], axis=-1
        )

    def eval_dt(self, t, phi):
        a = _b(phi)[: self.d]
        return np.broadcast_to(a, np.shape(t) + (self.d,)).copy()


class PeriodicIC:
    """X0(t) = A * sin(omega * t) + b with phi = (A, omega, b), all length d."""

    name = "periodic"
    groups = ("A", "omega", "b")

    def __init__(self, d: int):
        self.d = d
        self.q = 3 * d

    def _split(self, phi):
        phi = _b(phi)
        d = self.d
        return phi[:d], phi[d : 2 * d], phi[2 * d :]

    def eval(self, t, phi):
        A, w, b = self._split(phi)
        return A * np.sin(w * _t_col(t)) + b

    def jac_phi(self, t, phi):
        A, w, _ = self._split(phi)
        tc = _t_col(t)
        eye = np.eye(self.d)
        dA = eye * np.sin(w * tc)[..., None, :]
        dw = eye * (A * tc * np.cos(w * tc))[..., None, :]
        db = np.broadcast_to(eye, np.shape(t) + (self.d, self.d))
        return np.concatenate([dA, dw, db], axis=-1)

    def eval_dt(self, t, phi):
        A, w, _ = self._split(phi)
        return A * w * np.cos(w * _t_col(t))


MODELS = {
    "exponential": ExponentialDecay,
    "logistic": LogisticDelay,
    "enso": ENSO,
    "cheyne": CheyneStokes,
    "hiv": HIV,
}

IC_FAMILIES = {
    "constant": ConstantIC,
    "affine": AffineIC,
    "periodic": PeriodicIC,
}


def param_names(f, x0) -> list[str]:
    """Column names for the flat vector theta | tau | phi."""
    names = [f"theta{i}" for i in range(f.p)] + ["tau"]
    for g in x0.groups:
        names += [g] if x0.d == 1 else [f"{g}{i}" for i in range(x0.d)]
    return names


def make_model(name: str, **kwargs):
    try:
        cls = MODELS[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    return cls(**kwargs)


def make_ic(name: str, d: int):
    try:
        cls = IC_FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown ic family {name!r}; choose from {sorted(IC_FAMILIES)}")
    return cls(d)


@dataclass(frozen=True)
class ModelCatalogEntry:
    """Reference setup of one benchmark experiment."""

    model: str
    ic: str
    true_theta: tuple
    true_tau: float
    true_phi: tuple
    init_theta: tuple
    init_tau: float
    init_phi: tuple
    T: float
    data_dt: float
    n_tau: int = 10
    running_norm: str = "L2"
    init_phi_from_data: tuple = field(default_factory=tuple)


# Reference experiments. init_phi_from_data lists phi indices whose initial
# value is replaced by the first (noisy) data point.
CATALOG = {
    "exponential": ModelCatalogEntry(
        model="exponential", ic="affine",
        true_theta=(-2.0, -2.0), true_tau=1.0, true_phi=(1.5, 4.0),
        init_theta=(-1.5, -2.5), init_tau=2.0, init_phi=(2.25, 2.8),
        T=10.0, data_dt=0.1,
    ),
    "logistic": ModelCatalogEntry(
        model="logistic", ic="periodic",
        true_theta=(2.0, 1.5), true_tau=1.0, true_phi=(-0.5, 5.0, 2.0),
        init_theta=(1.0, 1.0), init_tau=0.5, init_phi=(-0.25, 6.0, 2.6),
        T=10.0, data_dt=0.1,
    ),
    "enso": ModelCatalogEntry(
        model="enso", ic="periodic",
        true_theta=(1.0, 1.0, 0.75), true_tau=5.0, true_phi=(-0.25, 1.0, 1.5),
        init_theta=(1.5, 0.8, 1.2), init_tau=6.0, init_phi=(-0.3, 0.8, 1.95),
        T=10.0, data_dt=0.1, n_tau=50,
    ),
    "cheyne": ModelCatalogEntry(
        model="cheyne", ic="affine",
        true_theta=(1.0, 7.0, 2.0), true_tau=0.25, true_phi=(-5.0, 2.0),
        init_theta=(2.0, 12.0, 1.5), init_tau=0.5, init_phi=(0.0, 2.0),
        T=3.0, data_dt=0.025, init_phi_from_data=(1,),
    ),
    "hiv": ModelCatalogEntry(
        model="hiv", ic="periodic",
        true_theta=(), true_tau=1.0,
        true_phi=(1.0, 3.0, 0.0, 1.0, 3.0, 0.0, 10.0, 8.0, 0.0),
        init_theta=(), init_tau=0.25,
        init_phi=(1.0, 1.0, 1.0, 1.2, 3.6, 0.0, 10.0, 8.0, 0.0),
        T=10.0, data_dt=0.1, running_norm="L1", init_phi_from_data=(6, 7, 8),
    ),
}
