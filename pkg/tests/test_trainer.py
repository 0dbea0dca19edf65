import numpy as np
import pytest

from delayfit import problem as problem_mod
from delayfit import trainer
from delayfit.config import MODEL_PRESETS, load
from delayfit.data import generate_true
from delayfit.models import AffineIC, ExponentialDecay
from delayfit.solver import solve_forward
from delayfit.trainer import BLOW_UP, EPOCHS_EXHAUSTED, LOSS_BELOW_MIN, FitConfig, fit, initial_params, build_problem
from delayfit.types import ConfigError, NonFiniteState

EXP_INIT = dict(model="exponential", ic="affine", init_theta=(-1.5, -2.5), init_tau=2.0, init_phi=(2.25, 2.8))


@pytest.fixture(scope="module")
def exp_clean():
    return generate_true(ExponentialDecay(), AffineIC(1), [-2.0, -2.0], 1.0, [1.5, 4.0], 10.0, 0.1)


@pytest.fixture(scope="module")
def exp_fit(exp_clean):
    return fit(FitConfig(**EXP_INIT), exp_clean.times, exp_clean.values)


def test_noise_free_exponential_recovers_delay(exp_fit):
    assert exp_fit.stop_reason == EPOCHS_EXHAUSTED and exp_fit.epochs == 500
    assert exp_fit.tau == pytest.approx(1.0, rel=0.02)
    assert exp_fit.final_loss < exp_fit.loss_history[0] / 100


@pytest.mark.xfail(strict=True, reason="theta1 ends near -2.13 after 500 epochs; the fit is still creeping along "
                                       "a shallow theta1/b valley (reaches the truth with ~3000 epochs)")
def test_noise_free_exponential_theta_within_five_percent(exp_fit):
    assert np.allclose(exp_fit.theta, [-2.0, -2.0], rtol=0.05)


def test_stops_immediately_on_own_solution():
    tr = solve_forward(ExponentialDecay(), AffineIC(1), [-1.5, -2.5], 2.0, [2.25, 2.8], 10.0, 10)
    keep = tr.times <= 9.9 + 1e-9
    res = fit(FitConfig(**EXP_INIT), tr.times[keep], tr.states[keep])
    assert res.stop_reason == LOSS_BELOW_MIN and res.epochs == 1
    assert res.tau == 2.0 and res.theta.tolist() == [-1.5, -2.5]


def test_huge_threshold_stops_at_first_epoch(exp_clean):
    res = fit(FitConfig(**EXP_INIT, L_min=1e9), exp_clean.times, exp_clean.values)
    assert res.stop_reason == LOSS_BELOW_MIN and res.epochs == 1


def test_deterministic(exp_clean):
    cfg = FitConfig(**EXP_INIT, n_epochs=40)
    a = fit(cfg, exp_clean.times, exp_clean.values, record=True)
    b = fit(cfg, exp_clean.times, exp_clean.values, record=True)
    assert a.loss_history == b.loss_history
    assert np.array_equal(a.theta, b.theta) and a.tau == b.tau and np.array_equal(a.phi, b.phi)
    assert all(np.array_equal(g, h) for g, h in zip(a.grad_history, b.grad_history))


def test_dt_tracks_tau(exp_clean, monkeypatch):
    seen = []

    def spy(f, x0, theta, tau, phi, T, n_tau):
        tr = solve_forward(f, x0, theta, tau, phi, T, n_tau)
        seen.append((tau, n_tau, tr.dt))
        return tr

    monkeypatch.setattr(problem_mod, "solve_forward", spy)
    res = fit(FitConfig(**EXP_INIT, n_epochs=30), exp_clean.times, exp_clean.values, record=True)
    taus = [p[2] for p in res.param_history]
    assert [s[0] for s in seen[: len(taus)]] == taus
    assert all(dt == tau / n for tau, n, dt in seen)
    assert len(set(taus)) > 1


def test_target_spline_built_once(exp_clean, monkeypatch):
    calls = []
    real = trainer.CubicSpline

    def counting(*a, **k):
        calls.append(1)
        return real(*a, **k)

    monkeypatch.setattr(trainer, "CubicSpline", counting)
    fit(FitConfig(**EXP_INIT, n_epochs=15), exp_clean.times, exp_clean.values)
    assert len(calls) == 1


def test_blow_up_keeps_last_finite_parameters(exp_clean, monkeypatch):
    real = problem_mod.Problem.forward
    count = []

    def flaky(self, params):
        count.append(1)
        if len(count) == 4:
            raise NonFiniteState("injected")
        return real(self, params)

    monkeypatch.setattr(problem_mod.Problem, "forward", flaky)
    res = fit(FitConfig(**EXP_INIT), exp_clean.times, exp_clean.values, record=True)
    assert res.stop_reason == BLOW_UP and res.epochs == 3
    last = res.param_history[-1]
    assert res.theta.tolist() == list(last[:2]) and res.tau == last[2]
    assert res.trajectory is not None


def test_history_lengths_and_positive_delay(exp_clean):
    # a huge rate throws tau below zero on the first step; short data keeps tiny-delay solves cheap
    res = fit(FitConfig(**EXP_INIT, n_epochs=6, lr0=5.0), exp_clean.times[:11], exp_clean.values[:11], record=True)
    assert len(res.loss_history) == res.epochs == len(res.param_history)
    assert min(p[2] for p in res.param_history) == 1e-3
    assert all(p[2] > 0 for p in res.param_history) and res.tau > 0


@pytest.mark.parametrize("bad", [dict(n_tau=0), dict(L_min=0.0), dict(init_tau=-1.0), dict(n_epochs=-1), dict(lr0=0.0)])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        FitConfig(**{**EXP_INIT, **bad})


def test_phi_from_data_uses_matching_component():
    cfg = FitConfig(model="hiv", ic="periodic", init_theta=(), init_tau=0.25,
                    init_phi=(1, 1, 1, 1.2, 3.6, 0, 0, 0, 0), init_phi_from_data=(6, 7, 8))
    times = np.linspace(0, 1, 5)
    values = np.tile([10.5, 7.5, 0.25], (5, 1))
    pr = build_problem(cfg, times, values)
    p = initial_params(cfg, pr, values[0])
    assert p[-3:].tolist() == [10.5, 7.5, 0.25]
    with pytest.raises(ConfigError):
        initial_params(FitConfig(**{**cfg.__dict__, "init_phi_from_data": (0,)}), pr, values[0])


def test_wrong_data_dimension():
    with pytest.raises(ConfigError):
        build_problem(FitConfig(**EXP_INIT), np.linspace(0, 1, 4), np.zeros((4, 2)))


@pytest.mark.slow
@pytest.mark.parametrize("name", MODEL_PRESETS)
def test_noise_free_loss_decreases(name):
    from delayfit.pipeline import clean_data

    cfg = load(name)
    clean = clean_data(cfg)
    res = fit(cfg.fit_config(), clean.times, clean.values)
    assert res.stop_reason != BLOW_UP
    assert res.final_loss < res.loss_history[0]
