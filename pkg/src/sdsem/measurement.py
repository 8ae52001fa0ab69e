"""Measurement subsystem: latent trajectories to noisy indicator data.

Each indicator reads every loaded latent once, at the observation time
minus a per-(indicator, latent) delay, by linear interpolation on the
simulation grid. Lookups before the start of the horizon clamp to the
initial latent value. Measurement error is i.i.d. Normal per cell with a
constant sd per indicator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model
from .engine import Trajectory
from .errors import DimensionError, InsufficientDataError


@dataclass
class ObservationMatrix:
    values: np.ndarray          # p x q, column j at times[j]
    times: np.ndarray           # length q, ascending
    labels: list[str] = field(default_factory=list)

    @property
    def p(self):
        return self.values.shape[0]

    @property
    def q(self):
        return self.values.shape[1]

    def to_csv(self, path) -> None:
        # transposed on disk: one row per observation time
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"z_{i + 1}" for i in range(self.p)])
            for j, t in enumerate(self.times):
                writer.writerow([repr(float(t))]
                                + [repr(float(v)) for v in self.values[:, j]])

    @classmethod
    def from_csv(cls, path) -> "ObservationMatrix":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        data = np.asarray(rows, dtype=float)
        labels = [h.strip() for h in header[1:]]
        return cls(values=data[:, 1:].T, times=data[:, 0], labels=labels)


def _delayed(series: np.ndarray, grid: np.ndarray, times: np.ndarray) -> np.ndarray:
    # np.interp clamps outside the grid, which gives the pre-horizon clamp.
    return np.interp(times, grid, series)


def observe(spec: model.ModelSpec, trajectory: Trajectory, seed: int = 0) -> ObservationMatrix:
    """Synthesize the p x q indicator matrix from a trajectory.

    Noise for cell (indicator i, observation j) is drawn from a generator
    keyed by (seed, i, j), so values are reproducible and independent of
    evaluation order. A zero error sd makes the cell deterministic.
    """
    p, q = spec.dims.p, spec.dims.q
    me = spec.measurement
    lx = np.asarray(me.lambda_x, dtype=float)
    ly = np.asarray(me.lambda_y, dtype=float)
    tx = np.asarray(me.theta_x, dtype=float)
    ty = np.asarray(me.theta_y, dtype=float)
    sd = np.asarray(me.error_sd, dtype=float)
    if trajectory.m != spec.dims.m or trajectory.n != spec.dims.n:
        raise DimensionError(
            f"trajectory has ({trajectory.m}, {trajectory.n}) latents, "
            f"spec expects ({spec.dims.m}, {spec.dims.n})")
    times = np.asarray(spec.horizon.observation_times, dtype=float)
    if times.size != q:
        raise DimensionError(f"expected {q} observation times, got {times.size}")

    values = np.zeros((p, q))
    for i in range(p):
        row = np.zeros(q)
        for j in range(spec.dims.m):
            if lx[i, j] != 0:
                row = row + lx[i, j] * _delayed(trajectory.x[:, j], trajectory.grid,
                                                times - tx[i, j])
        for j in range(spec.dims.n):
            if ly[i, j] != 0:
                row = row + ly[i, j] * _delayed(trajectory.y[:, j], trajectory.grid,
                                                times - ty[i, j])
        if sd[i] > 0:
            for k in range(q):
                rng = np.random.default_rng([seed, i, k])
                row[k] += sd[i] * rng.standard_normal()
        values[i] = row
    labels = list(spec.names.get("z", [])) or [f"z_{i + 1}" for i in range(p)]
    return ObservationMatrix(values=values, times=times, labels=labels)


def sample_covariance(obs: ObservationMatrix | np.ndarray) -> np.ndarray:
    """Unbiased sample covariance across observation columns (divisor q-1)."""
    values = obs.values if isinstance(obs, ObservationMatrix) else np.asarray(obs, dtype=float)
    if values.ndim != 2:
        raise DimensionError("expected a p x q matrix")
    q = values.shape[1]
    if q < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {q}")
    centered = values - values.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / (q - 1)
    return (cov + cov.T) / 2.0
