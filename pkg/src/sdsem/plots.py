"""Figure rendering for the CLI report path.

Everything renders through the Agg backend straight to files; nothing
here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .engine import Trajectory  # noqa: E402
from .measurement import ObservationMatrix  # noqa: E402

_STYLE = {
    "figure.figsize": (8.0, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def _latent_labels(names: dict, kind: str, count: int) -> list[str]:
    given = list(names.get(kind, []))
    return [given[i] if i < len(given) else f"{kind}_{i + 1}" for i in range(count)]


def plot_trajectory(traj: Trajectory, path, names: dict | None = None) -> Path:
    names = names or {}
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for j, label in enumerate(_latent_labels(names, "x", traj.m)):
            ax.plot(traj.grid, traj.x[:, j], lw=2.0, label=label)
        for j, label in enumerate(_latent_labels(names, "y", traj.n)):
            ax.plot(traj.grid, traj.y[:, j], lw=0.9, alpha=0.7, label=label)
        ax.set_xlabel("time")
        ax.set_ylabel("value")
        ax.set_title("simulated latent trajectories")
        if traj.m + traj.n <= 12:
            ax.legend(fontsize=8, ncol=2)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_observations(obs: ObservationMatrix, path) -> Path:
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for i in range(obs.p):
            label = obs.labels[i] if i < len(obs.labels) else f"z_{i + 1}"
            ax.plot(obs.times, obs.values[i], marker="o", ms=3, lw=1.0, label=label)
        ax.set_xlabel("time")
        ax.set_ylabel("indicator value")
        ax.set_title("synthesized observations")
        if obs.p <= 12:
            ax.legend(fontsize=8, ncol=2)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_fit(pair, report, path) -> Path:
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(pair.times, pair.observed, "o-", ms=4, lw=1.0, label="observed")
        ax.plot(pair.times, pair.simulated, lw=2.0, label="simulated")
        ax.set_xlabel("time")
        ax.set_ylabel("value")
        ax.set_title(f"fit: rmse={report.rmse:.4g}  "
                     f"u_m={report.theil_um:.3f} u_s={report.theil_us:.3f} "
                     f"u_c={report.theil_uc:.3f}")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
