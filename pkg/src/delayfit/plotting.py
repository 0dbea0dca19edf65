"""PNG figures written next to the CSV outputs (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .spline import CubicSpline  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps reruns byte-stable
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_fit(res, ds, path, clean=None, title: str = "") -> Path:
    """Data points, target spline and predicted trajectory, one panel per component."""
    d = ds.d
    fig, axes = plt.subplots(d, 1, figsize=(7, 2.6 * d), sharex=True, squeeze=False)
    fine = np.linspace(ds.times[0], ds.times[-1], 400)
    target = CubicSpline(ds.times, ds.values)(fine)
    for i, ax in enumerate(axes[:, 0]):
        ax.plot(ds.times, ds.values[:, i], ".", ms=3, color="0.55", label="data")
        ax.plot(fine, target[:, i], "-", lw=1, color="tab:blue", label="target")
        if clean is not None:
            ax.plot(clean.times, clean.values[:, i], "--", lw=1, color="k", label="true")
        if res.trajectory is not None:
            tr = res.trajectory
            ax.plot(tr.times, tr.states[:, i], "-", lw=1.5, color="tab:red", label="predicted")
        ax.set_ylabel(f"x{i}")
    axes[0, 0].legend(loc="best", fontsize=8)
    axes[-1, 0].set_xlabel("t")
    if title:
        axes[0, 0].set_title(title)
    return _save(fig, path)


def plot_loss(res, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.2))
    losses = np.asarray(res.loss_history, dtype=float)
    if losses.size:
        ax.semilogy(np.arange(losses.size), losses, lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    return _save(fig, path)


def plot_experiment(summary, path) -> Path:
    """Learned value relative to truth for each parameter, one dot per usable trial."""
    good = [t.params for t in summary.trials if t.usable]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * len(summary.names) + 1.5), 3.6))
    if good:
        vals = np.array(good)
        truth = np.array(summary.truth, dtype=float)
        scale = np.where(truth != 0, np.abs(truth), 1.0)
        rel = (vals - truth) / scale
        for j in range(rel.shape[1]):
            ax.plot(np.full(rel.shape[0], j), rel[:, j], "o", ms=3, alpha=0.6, color="tab:blue")
            ax.plot([j - 0.3, j + 0.3], [rel[:, j].mean()] * 2, "-", color="tab:red")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xticks(range(len(summary.names)))
    ax.set_xticklabels(summary.names, rotation=45, ha="right")
    ax.set_ylabel("(learned - true) / |true|")
    ax.set_title(f"noise level {summary.level:g}, {len(good)} trials")
    return _save(fig, path)
