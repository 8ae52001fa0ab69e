"""Fixed-step integration of the dynamic subsystem.

Stocks integrate rate terms that are power combinations of the static
variables; Euler and classical RK4 are provided, plus closed-form oracles
and an empirical convergence-order check against an oracle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import model, statics
from .errors import DivergenceError, OracleMismatchError

EULER = "euler"
RK4 = "rk4"

DEFAULT_OVERFLOW_GUARD = 1e12
_DEFAULT_DT_CAP = 0.0625


@dataclass
class IntegratorConfig:
    method: str = RK4
    dt: float | None = None  # None: min(0.0625, span / 64)
    overflow_guard: float = DEFAULT_OVERFLOW_GUARD


@dataclass
class Trajectory:
    """Latent states on the simulation grid.

    grid[0] is the start time, grid[-1] the end time exactly (the last
    step may be shorter than dt). x is (K+1, m), y is (K+1, n).
    """

    grid: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def m(self):
        return self.x.shape[1]

    @property
    def n(self):
        return self.y.shape[1]

    def latent_series(self, kind: str, index: int) -> np.ndarray:
        if kind == "x":
            return self.x[:, index]
        if kind == "y":
            return self.y[:, index]
        raise KeyError(f"unknown latent kind {kind!r}")

    def sample(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Linear interpolation of x and y at the given times (clamped at
        the ends of the grid)."""
        times = np.asarray(times, dtype=float)
        xs = np.column_stack([np.interp(times, self.grid, self.x[:, j])
                              for j in range(self.m)]) if self.m else np.zeros((len(times), 0))
        ys = np.column_stack([np.interp(times, self.grid, self.y[:, j])
                              for j in range(self.n)]) if self.n else np.zeros((len(times), 0))
        return xs, ys

    def to_csv(self, path) -> None:
        path = Path(path)
        header = (["t"] + [f"x_{j + 1}" for j in range(self.m)]
                  + [f"y_{j + 1}" for j in range(self.n)])
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k, t in enumerate(self.grid):
                row = [repr(float(t))]
                row += [repr(float(v)) for v in self.x[k]]
                row += [repr(float(v)) for v in self.y[k]]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        m = sum(1 for h in header if h.strip().startswith("x_"))
        n = sum(1 for h in header if h.strip().startswith("y_"))
        data = np.asarray(rows, dtype=float)
        return cls(grid=data[:, 0], x=data[:, 1:1 + m], y=data[:, 1 + m:1 + m + n])


def time_grid(t_start: float, t_end: float, dt: float) -> np.ndarray:
    """Uniform grid with an exact final time; the last step may be short."""
    span = t_end - t_start
    n_full = int(math.floor(span / dt + 1e-9))
    times = t_start + np.arange(n_full + 1) * dt
    if times[-1] >= t_end - dt * 1e-9:
        times[-1] = t_end
    else:
        times = np.append(times, t_end)
    times[0] = t_start
    return times


def effective_dt(spec: model.ModelSpec, config: IntegratorConfig) -> float:
    if config.dt is not None:
        return float(config.dt)
    if spec.horizon.dt:
        return float(spec.horizon.dt)
    return min(_DEFAULT_DT_CAP, spec.horizon.span / 64.0)


def derivative(spec: model.ModelSpec, x, t: float,
               plan: statics._Plan | None = None) -> np.ndarray:
    """Rate vector dx at state ``x`` and time ``t``."""
    if plan is None:
        plan = statics.build_plan(spec)
    y = statics.eval_static(spec, x, t, plan=plan)
    return _derivative_from_y(spec, y)


def _derivative_from_y(spec: model.ModelSpec, y: np.ndarray) -> np.ndarray:
    b1 = np.asarray(spec.dynamic.b1, dtype=float)
    g1 = np.asarray(spec.dynamic.gamma1, dtype=float)
    dx = np.zeros(spec.dims.m)
    for i in range(spec.dims.m):
        total = 0.0
        for j in range(spec.dims.n):
            if b1[i, j] != 0:
                total += b1[i, j] * statics.power(float(y[j]), g1[i, j])
        dx[i] = total
    return dx


def simulate(spec: model.ModelSpec, config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the spec over its horizon on a fixed grid.

    Models without stocks reduce to a static evaluation at each grid time.
    Raises DivergenceError when any stock magnitude exceeds the overflow
    guard, reporting the grid time where it happened.
    """
    config = config or IntegratorConfig()
    if config.method not in (EULER, RK4):
        raise ValueError(f"unknown method {config.method!r}")
    plan = statics.build_plan(spec)
    dt = effective_dt(spec, config)
    grid = time_grid(spec.horizon.t_start, spec.horizon.t_end, dt)
    m = spec.dims.m
    guard = config.overflow_guard

    x = np.zeros((len(grid), m))
    y = np.zeros((len(grid), spec.dims.n))
    if m:
        x[0] = np.asarray(spec.dynamic.x0, dtype=float)
    y[0] = statics.eval_static(spec, x[0], grid[0], plan=plan)

    def f(state, t):
        ys = statics.eval_static(spec, state, t, plan=plan)
        return _derivative_from_y(spec, ys)

    for k in range(len(grid) - 1):
        t, h = grid[k], grid[k + 1] - grid[k]
        if m:
            if config.method == EULER:
                x[k + 1] = x[k] + h * f(x[k], t)
            else:
                k1 = f(x[k], t)
                k2 = f(x[k] + 0.5 * h * k1, t + 0.5 * h)
                k3 = f(x[k] + 0.5 * h * k2, t + 0.5 * h)
                k4 = f(x[k] + h * k3, t + h)
                x[k + 1] = x[k] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x[k + 1])) or np.any(np.abs(x[k + 1]) > guard):
                raise DivergenceError(
                    f"state exceeded overflow guard {guard:g} at t = {grid[k + 1]:g}",
                    time=float(grid[k + 1]))
        y[k + 1] = statics.eval_static(spec, x[k + 1], grid[k + 1], plan=plan)
    return Trajectory(grid=grid, x=x, y=y)


def static_table(spec: model.ModelSpec) -> Trajectory:
    """Static-only evaluation at the observation times (stockless models);
    falls back to the simulation grid when there are no observations."""
    times = np.asarray(spec.horizon.observation_times, dtype=float)
    if times.size == 0:
        times = time_grid(spec.horizon.t_start, spec.horizon.t_end,
                          effective_dt(spec, IntegratorConfig()))
    plan = statics.build_plan(spec)
    x = np.zeros((len(times), spec.dims.m))
    y = np.vstack([statics.eval_static(spec, x[k], t, plan=plan)
                   for k, t in enumerate(times)])
    return Trajectory(grid=times, x=x, y=y)


def analytic_linear_population(pop0: float, c: float, t: float) -> float:
    """Exact exponential solution pop0 * e^(c t) of dx = c x."""
    return pop0 * math.exp(c * t)


def convergence_order(spec: model.ModelSpec, oracle, method: str, dt_list) -> float:
    """Empirical order of accuracy against an exact oracle.

    ``oracle(t)`` must return the exact state vector. The slope of
    log(max error) against log(dt) is the estimated order; errors that are
    not strictly decreasing as dt shrinks mean the oracle and the system
    disagree (or the errors are degenerate).
    """
    dt_list = [float(dt) for dt in dt_list]
    if len(dt_list) < 3:
        raise ValueError("need at least 3 dt values")
    errors = []
    for dt in dt_list:
        traj = simulate(spec, IntegratorConfig(method=method, dt=dt))
        exact = np.vstack([np.atleast_1d(oracle(t)) for t in traj.grid])
        errors.append(float(np.max(np.abs(traj.x - exact))))
    pairs = list(zip(sorted(dt_list), [e for _, e in sorted(zip(dt_list, errors))]))
    errs_by_dt = [e for _, e in pairs]
    if any(e <= 0 for e in errs_by_dt) or any(a >= b for a, b in zip(errs_by_dt, errs_by_dt[1:])):
        raise OracleMismatchError(
            f"errors are not strictly decreasing with dt: {errs_by_dt}")
    slope, _ = np.polyfit(np.log(dt_list), np.log(errors), 1)
    return float(slope)
