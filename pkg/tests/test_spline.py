import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayfit.spline import CubicSpline, eval_spline, fit_natural_cubic
from delayfit.types import DegenerateInput, DimensionMismatch
from oracles import natural_spline_eval, natural_spline_second_derivs


def test_two_points_give_a_line():
    s = fit_natural_cubic([0.0, 1.0], [0.0, 2.0])
    assert eval_spline(s, 0.5)[0] == pytest.approx(1.0, abs=1e-14)


def test_affine_data_reproduced():
    t = np.array([0.0, 0.5, 1.0, 1.5])
    s = fit_natural_cubic(t, 3 * t + 1)
    assert s(0.75)[0] == pytest.approx(3.25, abs=1e-12)
    # extrapolation past the last knot continues the line
    assert s(1.55)[0] == pytest.approx(3 * 1.55 + 1, abs=1e-12)


def test_matches_tridiagonal_oracle_on_sine():
    knots = np.linspace(0.0, 3.0, 11)
    vals = np.sin(knots)
    s = fit_natural_cubic(knots, vals)
    M = natural_spline_second_derivs(knots, vals)
    mids = np.linspace(0.0, 3.0, 51)[:-1] + 0.03
    ours = s(mids)[:, 0]
    ref = np.array([natural_spline_eval(knots, vals, M, t) for t in mids])
    assert np.max(np.abs(ours - ref)) <= 1e-10
    assert s(1.234)[0] == pytest.approx(natural_spline_eval(knots, vals, M, 1.234), abs=1e-10)


def test_errors():
    with pytest.raises(DegenerateInput):
        fit_natural_cubic([0.0], [1.0])
    with pytest.raises(DegenerateInput):
        fit_natural_cubic([0.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateInput):
        fit_natural_cubic([0.0, 2.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatch):
        fit_natural_cubic([0.0, 1.0, 2.0], [1.0, 2.0])


def test_vector_data_fit_componentwise():
    t = np.linspace(0, 2, 9)
    vals = np.stack([np.sin(t), t**2, np.ones_like(t)], axis=1)
    s = CubicSpline(t, vals)
    assert s.d == 3
    for j in range(3):
        sj = CubicSpline(t, vals[:, j])
        assert np.allclose(s(0.37)[j], sj(0.37)[0], atol=1e-14)


knot_sets = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=25).map(
    lambda gaps: np.concatenate([[0.0], np.cumsum(gaps)])
)


@settings(max_examples=60, deadline=None)
@given(knot_sets, st.integers(0, 2**31 - 1))
def test_interpolation_and_natural_ends(knots, seed):
    vals = np.random.default_rng(seed).uniform(-1, 1, size=knots.size)
    s = fit_natural_cubic(knots, vals)
    assert np.all(np.abs(s(knots)[:, 0] - vals) <= 1e-10 * (1 + np.abs(vals)))
    d2 = s.derivative(knots[[0, -1]], order=2)
    assert np.max(np.abs(d2)) <= 1e-8


@settings(max_examples=40, deadline=None)
@given(knot_sets, st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**31 - 1))
def test_reproduces_degree_one(knots, a, b, seed):
    s = fit_natural_cubic(knots, a * knots + b)
    t = np.random.default_rng(seed).uniform(knots[0], knots[-1], 100)
    assert np.max(np.abs(s(t)[:, 0] - (a * t + b))) <= 1e-9


def test_c2_continuity_at_interior_knots():
    knots = np.linspace(0, 4, 9)
    s = fit_natural_cubic(knots, np.cos(knots) + knots**3 / 10)
    eps = 1e-7
    for k in knots[1:-1]:
        for order in (0, 1, 2):
            left = s.derivative(k - eps, order) if order else s(k - eps)
            right = s.derivative(k + eps, order) if order else s(k + eps)
            assert np.allclose(left, right, atol=1e-5)
