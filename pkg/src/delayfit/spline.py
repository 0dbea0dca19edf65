"""Natural cubic-spline interpolation of vector-valued samples."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline as _ScipyCubicSpline

from .types import DegenerateInput, DimensionMismatch


class CubicSpline:
    """Natural cubic spline through ``(times[i], values[i])``, fit per component.

    Outside ``[times[0], times[-1]]`` the boundary interval's cubic is
    continued, so evaluation is defined everywhere.
    """

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or times.shape[0] < 2:
            raise DegenerateInput("need at least two knots")
        if values.shape[0] != times.shape[0]:
            raise DimensionMismatch(
                f"{times.shape[0]} knots but {values.shape[0]} values"
            )
        if np.any(np.diff(times) <= 0):
            raise DegenerateInput("knot times must be strictly increasing")
        self.knots = times
        self.d = values.shape[1]
        # scipy's natural spline with 2 knots is already the connecting line
        self._spl = _ScipyCubicSpline(
            times, values, axis=0, bc_type="natural", extrapolate=True
        )

    def __call__(self, t) -> np.ndarray:
        """Value at ``t`` (scalar -> shape (d,), array of shape (n,) -> (n, d))."""
        return self._spl(np.asarray(t, dtype=float))

    def derivative(self, t, order: int = 1) -> np.ndarray:
        return self._spl(np.asarray(t, dtype=float), nu=order)

    @property
    def coeffs(self) -> np.ndarray:
        """Per-interval polynomial coefficients, shape (4, n_knots - 1, d)."""
        return self._spl.c


def fit_natural_cubic(times, values) -> CubicSpline:
    return CubicSpline(times, values)


def eval_spline(spline: CubicSpline, t) -> np.ndarray:
    return spline(t)
