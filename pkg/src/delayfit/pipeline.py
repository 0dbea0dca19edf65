"""Run-level workflows shared by the CLI and the tests.

Everything here is deterministic given the config and the master seed;
trial ``i`` of an experiment draws its noise with seed ``seed + i``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as config_mod
from .data import Dataset, NoiseSpec, add_noise, generate_true
from .gradcheck import GradCheckReport, check_problem
from .models import param_names
from .spline import CubicSpline
from .trainer import BLOW_UP, FitResult, build_problem, fit, initial_params
from .types import DelayFitError


def fmt(v) -> str:
    """Shortest round-trip text for a float; 'NA' for None/NaN."""
    if v is None:
        return "NA"
    v = float(v)
    return "NA" if math.isnan(v) else repr(v)


def clean_data(cfg) -> Dataset:
    cfg.require_truth()
    if cfg.T is None:
        raise config_mod.ConfigError("[grid] T is required to generate data")
    f, x0 = cfg.dynamics(), cfg.history()
    return generate_true(f, x0, cfg.true_theta, cfg.true_tau, cfg.true_phi, cfg.T, cfg.data_dt)


def simulate(cfg, seed: int | None = None, level: float | None = None) -> tuple[Dataset, Dataset]:
    clean = clean_data(cfg)
    spec = NoiseSpec(cfg.noise_level if level is None else level, cfg.seed if seed is None else seed)
    return clean, add_noise(clean, spec)


def fit_dataset(cfg, ds: Dataset, record: bool = False) -> FitResult:
    return fit(cfg.fit_config(), ds.times, ds.values, record=record)


def result_header(cfg) -> list[str]:
    return param_names(cfg.dynamics(), cfg.history()) + ["final_loss", "stop_reason", "epochs"]


def result_row(res: FitResult) -> list[str]:
    params = list(res.theta) + [res.tau] + list(res.phi)
    return [fmt(v) for v in params] + [fmt(res.final_loss), res.stop_reason, str(res.epochs)]


def trajectory_rows(cfg, res: FitResult, ds: Dataset):
    """Rows t, predicted components, target-spline components on the solver grid."""
    if res.trajectory is None:
        return [], []
    traj = res.trajectory
    target = CubicSpline(ds.times, ds.values)
    d = traj.d
    header = ["t"] + [f"pred{i}" for i in range(d)] + [f"target{i}" for i in range(d)]
    ref = target(traj.times)
    rows = [[fmt(t)] + [fmt(v) for v in p] + [fmt(v) for v in r]
            for t, p, r in zip(traj.times, traj.states, ref)]
    return header, rows


def write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# --- experiments ------------------------------------------------------------


@dataclass
class TrialOutcome:
    trial: int
    seed: int
    status: str
    epochs: int = 0
    final_loss: float = float("nan")
    params: list = field(default_factory=list)
    error: str = ""

    @property
    def usable(self) -> bool:
        return bool(self.params) and self.status != BLOW_UP and not self.error


def run_trial(cfg, clean: Dataset, level: float, trial: int, master_seed: int) -> TrialOutcome:
    seed = master_seed + trial
    try:
        noisy = add_noise(clean, NoiseSpec(level, seed))
        res = fit_dataset(cfg, noisy)
    except DelayFitError as exc:
        return TrialOutcome(trial, seed, "error", error=f"{type(exc).__name__}: {exc}")
    params = list(map(float, res.theta)) + [res.tau] + list(map(float, res.phi))
    return TrialOutcome(trial, seed, res.stop_reason, res.epochs, res.final_loss, params)


def _trial_job(args):
    return run_trial(*args)


@dataclass
class LevelSummary:
    level: float
    names: list
    truth: list
    trials: list  # TrialOutcome, in trial order

    def stats(self):
        """(mean, unbiased std) per parameter over usable trials; std None if < 2."""
        good = np.array([t.params for t in self.trials if t.usable])
        out = []
        for j in range(len(self.names)):
            if good.size == 0:
                out.append((None, None))
                continue
            col = good[:, j]
            std = float(np.std(col, ddof=1)) if col.size >= 2 else None
            out.append((float(np.mean(col)), std))
        return out

    @property
    def n_usable(self) -> int:
        return sum(t.usable for t in self.trials)


def run_experiment(cfg, master_seed: int | None = None, jobs: int = 1,
                   levels=None) -> list[LevelSummary]:
    cfg.require_truth()
    cfg.require_init()
    master = cfg.seed if master_seed is None else master_seed
    clean = clean_data(cfg)
    names = param_names(cfg.dynamics(), cfg.history())
    truth = list(cfg.true_theta) + [cfg.true_tau] + list(cfg.true_phi)
    out = []
    for level in (cfg.noise_levels if levels is None else levels):
        tasks = [(cfg, clean, level, i, master) for i in range(cfg.trials)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                trials = list(ex.map(_trial_job, tasks))  # map preserves trial order
        else:
            trials = [_trial_job(t) for t in tasks]
        out.append(LevelSummary(level, names, truth, trials))
    return out


def experiment_filename(cfg, level: float) -> str:
    return f"{cfg.model}_noise{level:g}.csv"


def write_experiment(summary: LevelSummary, path) -> None:
    """Trial rows, a blank line, then the per-parameter summary block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "seed", "status", "epochs", "final_loss"] + summary.names + ["error"])
        for t in summary.trials:
            vals = [fmt(v) for v in t.params] if t.params else ["NA"] * len(summary.names)
            w.writerow([t.trial, t.seed, t.status, t.epochs, fmt(t.final_loss)] + vals + [t.error])
        w.writerow([])
        w.writerow(["parameter", "true_value", "mean", "std", "n"])
        for name, true, (mean, std) in zip(summary.names, summary.truth, summary.stats()):
            w.writerow([name, fmt(true), fmt(mean), fmt(std), summary.n_usable])


def read_experiment_summary(path) -> dict:
    """Parse the summary block back into {parameter: (mean, std)}."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    start = rows.index([]) + 2
    parse = lambda s: None if s == "NA" else float(s)  # noqa: E731
    return {r[0]: (parse(r[2]), parse(r[3])) for r in rows[start:]}


# --- gradient checks ----------------------------------------------------------


class _ScaledThetaJacobian:
    """Wraps a model and multiplies jac_theta by (1 + scale); for fault injection."""

    def __init__(self, inner, scale: float):
        self._inner = inner
        self._scale = scale

    def __getattr__(self, name):
        return getattr(self._inner, name)

    def jac_theta(self, *args, **kwargs):
        return (1.0 + self._scale) * self._inner.jac_theta(*args, **kwargs)


@dataclass
class ModelCheck:
    model: str
    n_tau: int
    report: GradCheckReport
    names: list


def gradcheck_model(cfg, n_tau: int | None = None) -> ModelCheck:
    """Adjoint vs FD at the initial parameters against the model's clean data."""
    gc = cfg.gradcheck
    n_tau = n_tau or gc.n_tau or cfg.n_tau
    clean = clean_data(cfg)
    fc = cfg.fit_config()
    problem = build_problem(fc, clean.times, clean.values, horizon_term=True)
    problem.n_tau = n_tau
    if gc.corrupt_jac_theta:
        problem.f = _ScaledThetaJacobian(problem.f, gc.corrupt_jac_theta)
    params = initial_params(fc, problem, clean.values[0])
    report = check_problem(problem, params, gc.h_rel, gc.tol_theta_phi, gc.tol_tau)
    names = param_names(cfg.dynamics(), cfg.history())
    for c, n in zip(report.components, names):
        c.name = n
    return ModelCheck(cfg.model, n_tau, report, names)


def gradcheck_all(cfg) -> list[ModelCheck]:
    """One check per model listed in [gradcheck] models, or just this config's model."""
    if not cfg.gradcheck.models:
        return [gradcheck_model(cfg)]
    out = []
    for name in cfg.gradcheck.models:
        sub = config_mod.load(name)
        # settings from the driving config apply to every listed model
        sub = sub.with_overrides(gradcheck=type(cfg.gradcheck)(
            models=(), n_tau=sub.gradcheck.n_tau, h_rel=cfg.gradcheck.h_rel,
            tol_theta_phi=cfg.gradcheck.tol_theta_phi, tol_tau=cfg.gradcheck.tol_tau,
            corrupt_jac_theta=cfg.gradcheck.corrupt_jac_theta,
        ))
        out.append(gradcheck_model(sub))
    return out


def final_relative_l2(res: FitResult, clean: Dataset) -> float:
    """||pred - clean|| / ||clean|| over the clean sample times."""
    if res.trajectory is None:
        return float("inf")
    pred = CubicSpline(res.trajectory.times, res.trajectory.states)(clean.times)
    return float(np.linalg.norm(pred - clean.values) / np.linalg.norm(clean.values))

