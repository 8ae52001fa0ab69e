"""Fit statistics between a simulated series and an observed or reference
series, including the bias / variance / covariance decomposition of mean
squared error.

All moments inside the decomposition use the population convention
(divisor q) so the three components sum to one exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import Trajectory
from .errors import (AllZeroObservedError, LengthMismatchError, OutOfSpanError,
                     PerfectFitError)
from .measurement import ObservationMatrix

VS_OBSERVED = "VS_OBSERVED_o"
VS_REFERENCE = "VS_REFERENCE_r"

NEG_INF = float("-inf")


@dataclass
class SeriesPair:
    times: np.ndarray
    simulated: np.ndarray
    observed: np.ndarray
    role: str = VS_OBSERVED

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.simulated = np.asarray(self.simulated, dtype=float)
        self.observed = np.asarray(self.observed, dtype=float)
        if not (len(self.times) == len(self.simulated) == len(self.observed)):
            raise LengthMismatchError(
                f"lengths differ: times {len(self.times)}, simulated "
                f"{len(self.simulated)}, observed {len(self.observed)}")
        if len(self.times) < 2:
            raise LengthMismatchError("need at least 2 points")
        if np.any(np.diff(self.times) <= 0):
            raise LengthMismatchError("times must be strictly ascending")


@dataclass
class FitReport:
    mse: float
    rmse: float
    r_squared: float
    mape: float
    theil_um: float
    theil_us: float
    theil_uc: float
    flags: list[str] = field(default_factory=list)
    mape_skipped: int = 0

    _KEYS = ("mse", "rmse", "r2", "mape", "u_m", "u_s", "u_c", "flags")

    def as_items(self):
        return [("mse", self.mse), ("rmse", self.rmse), ("r2", self.r_squared),
                ("mape", self.mape), ("u_m", self.theil_um),
                ("u_s", self.theil_us), ("u_c", self.theil_uc),
                ("flags", ";".join(self.flags))]

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.as_items()) + "\n"

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            items = self.as_items()
            writer.writerow([k for k, _ in items])
            writer.writerow([v for _, v in items])


def theil_decomposition(pair: SeriesPair) -> tuple[float, float, float]:
    """Split MSE into bias, variance, and covariance shares.

    U_m = (mean_s - mean_o)^2 / MSE, U_s = (sd_s - sd_o)^2 / MSE,
    U_c = 2 (1 - r) sd_s sd_o / MSE with population moments; r is taken
    as 0 when either series is constant so the covariance share stays
    finite. The three shares are nonnegative and sum to 1.
    """
    s, o = pair.simulated, pair.observed
    mse = float(np.mean((s - o) ** 2))
    if mse == 0.0:
        raise PerfectFitError("series are identical; decomposition undefined")
    sd_s = float(np.std(s))
    sd_o = float(np.std(o))
    if sd_s == 0.0 or sd_o == 0.0:
        r = 0.0
    else:
        r = float(np.mean((s - s.mean()) * (o - o.mean())) / (sd_s * sd_o))
    u_m = (float(s.mean()) - float(o.mean())) ** 2 / mse
    u_s = (sd_s - sd_o) ** 2 / mse
    u_c = 2.0 * (1.0 - r) * sd_s * sd_o / mse
    return u_m, u_s, u_c


def basic_fit(pair: SeriesPair) -> FitReport:
    """Full fit report for one series pair.

    R^2 is 1 - SSE/SST about the observed mean and is deliberately not
    clamped; a constant observed series makes it undefined and is
    reported as -inf with a flag. MAPE skips observed zeros.
    """
    s, o = pair.simulated, pair.observed
    flags = []
    mse = float(np.mean((s - o) ** 2))
    rmse = float(np.sqrt(mse))

    sst = float(np.sum((o - o.mean()) ** 2))
    sse = float(np.sum((s - o) ** 2))
    if sst == 0.0:
        r2 = NEG_INF
        flags.append("r2_undefined_constant_observed")
    else:
        r2 = 1.0 - sse / sst

    nonzero = o != 0
    skipped = int(np.sum(~nonzero))
    if not np.any(nonzero):
        raise AllZeroObservedError("all observed values are zero; MAPE undefined")
    mape = float(np.mean(np.abs((s[nonzero] - o[nonzero]) / o[nonzero]))) * 100.0
    if skipped:
        flags.append(f"mape_skipped_{skipped}_zeros")

    if mse == 0.0:
        flags.append("perfect_fit")
        u_m = u_s = u_c = 0.0
    else:
        sd_s, sd_o = float(np.std(s)), float(np.std(o))
        if sd_s == 0.0 or sd_o == 0.0:
            flags.append("constant_series_r_zero")
        u_m, u_s, u_c = theil_decomposition(pair)
    return FitReport(mse=mse, rmse=rmse, r_squared=r2, mape=mape,
                     theil_um=u_m, theil_us=u_s, theil_uc=u_c,
                     flags=flags, mape_skipped=skipped)


def align(sim: Trajectory, obs: ObservationMatrix, indicator: int,
          latent: tuple[str, int], role: str = VS_OBSERVED) -> SeriesPair:
    """Pair a simulated latent with an observed indicator by time.

    The simulated series is interpolated at the exact observation times;
    pairing is never positional. Observation times outside the simulated
    span are an error rather than an extrapolation.
    """
    times = np.asarray(obs.times, dtype=float)
    lo, hi = sim.grid[0], sim.grid[-1]
    if np.any(times < lo) or np.any(times > hi):
        raise OutOfSpanError(
            f"observation times outside simulated span [{lo}, {hi}]")
    kind, index = latent
    series = sim.latent_series(kind, index)
    simulated = np.interp(times, sim.grid, series)
    return SeriesPair(times=times, simulated=simulated,
                      observed=obs.values[indicator], role=role)
