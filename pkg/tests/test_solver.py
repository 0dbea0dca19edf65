import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayfit.models import AffineIC, ConstantIC, ExponentialDecay
from delayfit.solver import delayed_state, make_grid, n_steps_for, solve_forward
from delayfit.types import IndexOutOfRange, NonFiniteState
from oracles import dde_rk4_reference

F_TRUE = ([-2.0, -2.0], 1.0, [1.5, 4.0])


class ZeroDynamics:
    name, d, p = "zero", 1, 0

    def eval(self, x, y, tau, t, theta):
        return np.zeros_like(np.asarray(x, dtype=float))


class RecordingHistory(AffineIC):
    """Affine history that remembers every time it was evaluated at."""

    def __init__(self):
        super().__init__(1)
        self.calls = []

    def eval(self, t, phi):
        self.calls.extend(np.atleast_1d(t).tolist())
        return super().eval(t, phi)


class RecordingDynamics(ExponentialDecay):
    def __init__(self):
        super().__init__()
        self.ys = []

    def eval(self, x, y, tau, t, theta):
        self.ys.append((float(t), float(np.asarray(y).ravel()[0])))
        return super().eval(x, y, tau, t, theta)


@pytest.fixture(scope="module")
def reference():
    return dde_rk4_reference(lambda x, y, t: -2 * x - 2 * y, lambda s: 1.5 * s + 4.0, 1.0, 10.0, 0.001)


def errors_against(reference, n_tau):
    t_ref, x_ref = reference
    tr = solve_forward(ExponentialDecay(), AffineIC(1), *F_TRUE, 10.0, n_tau)
    idx = np.rint(tr.times / 0.001).astype(int)
    return tr, np.abs(tr.states[:, 0] - x_ref[idx])


def test_zero_dynamics_keep_constant_history():
    tr = solve_forward(ZeroDynamics(), ConstantIC(1), [], 0.7, [3.25], 5.0, 7)
    assert np.all(tr.states == 3.25)


def test_grid_contract_and_reference(reference):
    tr, err = errors_against(reference, 10)
    assert tr.dt == pytest.approx(0.1, abs=0) and len(tr) == 101
    assert tr.states[0, 0] == 4.0
    x_ref = reference[1]
    assert err.max() / np.abs(x_ref).max() <= 1e-2


def test_second_order_convergence(reference):
    tr10, e10 = errors_against(reference, 10)
    tr20, e20 = errors_against(reference, 20)
    assert 3.3 <= e10.max() / e20.max() <= 4.8
    at5 = lambda tr, e: e[int(round(5.0 / tr.dt))]  # noqa: E731
    assert 3.3 <= at5(tr10, e10) / at5(tr20, e20) <= 4.8


def test_delayed_state_lookup():
    grid = make_grid(1.0, 10.0, 10)
    x0 = AffineIC(1)
    phi = [1.5, 4.0]
    states = np.arange(30.0)[:, None]
    assert delayed_state(states, x0, phi, 0, grid)[0] == pytest.approx(1.5 * -1.0 + 4.0)
    assert delayed_state(states, x0, phi, 10, grid)[0] == 0.0
    assert delayed_state(states, x0, phi, 25, grid)[0] == 15.0
    with pytest.raises(IndexOutOfRange):
        delayed_state(states[:5], x0, phi, 25, grid)


def test_history_used_only_before_zero():
    x0 = RecordingHistory()
    f = RecordingDynamics()
    tr = solve_forward(f, x0, [-2.0, -2.0], 1.0, [1.5, 4.0], 3.0, 10)
    assert all(t <= 0.0 for t in x0.calls)
    # for stage times t >= tau the delayed value is the stored state at t - tau
    for t, y in f.ys:
        k = int(round(t / tr.dt))
        if k >= 10:
            assert y == tr.states[k - 10, 0]
        else:
            assert y == pytest.approx(1.5 * (t - 1.0) + 4.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.1, 30.0), st.integers(1, 60))
def test_output_length(tau, T, n_tau):
    grid = make_grid(tau, T, n_tau)
    n = grid.n_step
    assert n * grid.dt >= T * (1 - 1e-12)
    assert n == 1 or (n - 1) * grid.dt < T
    assert grid.tau == pytest.approx(tau, rel=1e-14)


def test_exact_multiple_hits_T():
    assert n_steps_for(10.0, 0.1) == 100
    assert n_steps_for(9.9, 0.1) == 99
    assert n_steps_for(10.0, 0.3) == 34


def test_blow_up_detected():
    class Explosive(ExponentialDecay):
        def eval(self, x, y, tau, t, theta):
            return 1e200 * np.asarray(x) ** 2

    with pytest.raises(NonFiniteState):
        solve_forward(Explosive(), ConstantIC(1), [0.0, 0.0], 1.0, [10.0], 10.0, 10)
