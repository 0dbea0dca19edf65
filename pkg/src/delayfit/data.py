"""Synthetic measurements and CSV persistence.

CSV layout: header ``t,x0,...,x{d-1}``, one row per sample, ascending times.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .solver import solve_forward
from .types import DelayFitError, ParseError


@dataclass(frozen=True)
class NoiseSpec:
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be >= 0")


@dataclass(frozen=True)
class Dataset:
    times: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.shape[0] != times.shape[0]:
            raise ParseError("times and values must have matching lengths")
        if times.size and times[0] != 0.0:
            raise ParseError(f"first sample time must be 0, got {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ParseError("sample times must be strictly ascending")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return self.times.shape[0]

    def equals(self, other: "Dataset") -> bool:
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )


def generate_true(model, ic, theta, tau, phi, T: float, solve_dt: float) -> Dataset:
    """Solve with step ``solve_dt`` and keep the first round(T/solve_dt) grid samples.

    For T = 10, dt = 0.1 that is 100 samples at t = 0, 0.1, ..., 9.9.
    """
    n_tau = int(round(tau / solve_dt))
    if n_tau < 1 or abs(n_tau * solve_dt - tau) > 1e-9 * max(1.0, tau):
        raise DelayFitError(f"solve_dt={solve_dt} must divide tau={tau}")
    traj = solve_forward(model, ic, theta, tau, phi, T, n_tau)
    n_data = int(round(T / solve_dt))
    return Dataset(
        times=traj.times[:n_data],
        values=traj.states[:n_data],
        provenance={
            "model": model.name, "ic": ic.name, "theta": list(map(float, theta)),
            "tau": float(tau), "phi": list(map(float, phi)), "noise": 0.0,
        },
    )


def noise_sigma(ds: Dataset, level: float) -> np.ndarray:
    """Per-component sigma = level * unbiased sample std of the clean data."""
    return level * np.std(ds.values, axis=0, ddof=1)


def add_noise(ds: Dataset, spec: NoiseSpec) -> Dataset:
    if spec.level == 0:
        return ds
    rng = np.random.default_rng(spec.seed)
    sigma = noise_sigma(ds, spec.level)
    noisy = ds.values + rng.normal(size=ds.values.shape) * sigma
    prov = dict(ds.provenance, noise=spec.level, seed=spec.seed)
    return Dataset(ds.times.copy(), noisy, prov)


def write_csv(ds: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(ds.d)])
        for t, row in zip(ds.times, ds.values):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def read_csv(path) -> Dataset:
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DelayFitError(f"cannot read {path}: {exc}") from exc
    with fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != ["t"] + [f"x{i}" for i in range(d)]:
        raise ParseError(f"{path}: bad header {rows[0]}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise ParseError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if len(data) < 2:
        raise ParseError(f"{path}: need at least two samples")
    arr = np.array(data)
    return Dataset(arr[:, 0], arr[:, 1:])
