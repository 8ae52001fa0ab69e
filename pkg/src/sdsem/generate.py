"""Random model sampling with rejection.

Proposals are drawn cell-by-cell from configured sparsity and value
distributions; anything that fails validation, has a stock without a
flow, hits a power-domain error, or diverges over a probe horizon is
rejected and redrawn. Per-index sub-seeding makes any batch prefix
reproducible independent of the batch size.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model
from .engine import IntegratorConfig, simulate
from .errors import (ConvergenceError, DivergenceError, DomainError,
                     ExhaustedAttemptsError, ParseError, SchemaError)


@dataclass
class GeneratorConfig:
    m_range: tuple[int, int] = (1, 3)
    n_range: tuple[int, int] = (2, 6)
    p_range: tuple[int, int] = (1, 4)
    obs_count: int = 8
    p_b1: float = 0.6
    p_b2: float = 0.35
    p_b3: float = 0.3
    p_b4: float = 0.1
    p_lambda: float = 0.5
    p_constant: float = 0.3
    coef_range: tuple[float, float] = (-1.0, 1.0)
    exponent_pool: tuple[float, ...] = (0.0, 1.0, 2.0, -1.0)
    x0_range: tuple[float, float] = (0.5, 2.0)
    delay_range: tuple[float, float] = (0.0, 1.0)
    error_sd_range: tuple[float, float] = (0.05, 0.3)
    mode: str = model.SD_RESTRICTED
    seed: int = 0
    max_attempts: int = 200
    horizon: float = 10.0
    overflow_guard: float = 1e12

    def check(self):
        for name in ("p_b1", "p_b2", "p_b3", "p_b4", "p_lambda", "p_constant"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SchemaError(f"{name} must be in [0, 1], got {v}")
        for name in ("m_range", "n_range", "p_range"):
            lo, hi = getattr(self, name)
            if hi < lo or lo < 0:
                raise SchemaError(f"{name} is empty: {(lo, hi)}")
        if self.n_range[1] < 1:
            raise SchemaError("n_range must allow at least one static variable")
        if self.max_attempts < 1:
            raise SchemaError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if not self.exponent_pool:
            raise SchemaError("exponent_pool must be nonempty")
        if self.mode not in model.MODES:
            raise SchemaError(f"unknown mode {self.mode!r}")

    @classmethod
    def from_file(cls, path) -> "GeneratorConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise SchemaError(f"unknown generator config fields: {sorted(extra)}")
        kwargs = {}
        for key, value in doc.items():
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        config = cls(**kwargs)
        config.check()
        return config


@dataclass
class GeneratedSystem:
    spec: model.ModelSpec
    seed_key: tuple[int, ...]
    attempts: int
    rejections: dict[str, int] = field(default_factory=dict)


def _uniform(rng, lo_hi):
    lo, hi = lo_hi
    return float(rng.uniform(lo, hi))


def propose(config: GeneratorConfig, rng: np.random.Generator) -> model.ModelSpec:
    """One raw proposal; may be invalid or degenerate (no rejection here)."""
    m = int(rng.integers(config.m_range[0], config.m_range[1] + 1))
    n = max(1, int(rng.integers(config.n_range[0], config.n_range[1] + 1)))
    p = int(rng.integers(config.p_range[0], config.p_range[1] + 1))
    q = config.obs_count if p > 0 else 0

    t_end = config.horizon
    dt = t_end / 100.0
    obs_times = list(np.linspace(0.0, t_end, q)) if q else []
    horizon = model.TimeHorizon(t_start=0.0, t_end=t_end, dt=dt,
                                observation_times=obs_times)

    def coef(prob, shape):
        mask = rng.random(shape) < prob
        values = rng.uniform(config.coef_range[0], config.coef_range[1], shape)
        return np.where(mask, values, 0.0)

    def exponents(base, shape):
        pool = np.array(config.exponent_pool, dtype=float)
        draws = pool[rng.integers(0, len(pool), shape)]
        return np.where(base != 0, draws, 0.0)

    b1 = coef(config.p_b1, (m, n))
    gamma1 = exponents(b1, (m, n))
    x0 = rng.uniform(config.x0_range[0], config.x0_range[1], m)

    b2 = coef(config.p_b2, (n, m))
    gamma2 = exponents(b2, (n, m))

    b3 = np.zeros((n, n))
    gamma3 = np.zeros((n, n))
    b4: list[tuple[int, int, int, float]] = []
    pool = np.array(config.exponent_pool, dtype=float)
    for i in range(n):
        for j in range(n):
            if i == j:
                # zero-exponent diagonal entries encode additive constants
                if rng.random() < config.p_constant:
                    b3[i, i] = _uniform(rng, config.coef_range)
                continue
            if config.mode == model.SD_RESTRICTED and j > i:
                continue
            if rng.random() < config.p_b3:
                b3[i, j] = _uniform(rng, config.coef_range)
                gamma3[i, j] = float(pool[rng.integers(0, len(pool))])
    for i in range(n):
        limit = i if config.mode == model.SD_RESTRICTED else n
        for j in range(limit):
            for k in range(j + 1, limit):
                if rng.random() < config.p_b4:
                    b4.append((i, j, k, _uniform(rng, config.coef_range)))

    lambda_x = coef(config.p_lambda, (p, m))
    lambda_y = coef(config.p_lambda, (p, n))
    theta_x = rng.uniform(config.delay_range[0], config.delay_range[1], (p, m))
    theta_y = rng.uniform(config.delay_range[0], config.delay_range[1], (p, n))
    error_sd = rng.uniform(config.error_sd_range[0], config.error_sd_range[1], p)

    return model.ModelSpec(
        dims=model.Dimensions(m=m, n=n, p=p, q=q),
        horizon=horizon,
        dynamic=model.DynamicSpec(b1=b1, gamma1=gamma1, x0=x0),
        statics=model.StaticSpec(b2=b2, gamma2=gamma2, b3=b3, gamma3=gamma3, b4=b4),
        measurement=model.MeasurementSpec(lambda_x=lambda_x, lambda_y=lambda_y,
                                          theta_x=theta_x, theta_y=theta_y,
                                          error_sd=error_sd),
        disturbances=[],
        mode=config.mode,
    )


def _screen(spec: model.ModelSpec, config: GeneratorConfig) -> str | None:
    """Rejection cause for a proposal, or None when it is usable."""
    report = model.validate(spec)
    if report:
        return "invalid"
    b1 = np.asarray(spec.dynamic.b1, dtype=float)
    if spec.dims.m and any(not np.any(b1[i]) for i in range(spec.dims.m)):
        return "stock_no_flow"
    try:
        # divergent proposals are expected here; keep their float warnings quiet
        with np.errstate(over="ignore", invalid="ignore"):
            simulate(spec, IntegratorConfig(method="rk4", dt=spec.horizon.dt,
                                            overflow_guard=config.overflow_guard))
    except DivergenceError:
        return "overflow"
    except DomainError:
        return "domain_error"
    except ConvergenceError:
        return "no_convergence"
    return None


def generate(config: GeneratorConfig, sub_index: int | None = None) -> GeneratedSystem:
    """Draw one accepted system; deterministic given (config.seed, sub_index)."""
    config.check()
    key = (config.seed,) if sub_index is None else (config.seed, sub_index)
    rejections: dict[str, int] = {}
    for attempt in range(config.max_attempts):
        rng = np.random.default_rng([*key, attempt])
        spec = propose(config, rng)
        cause = _screen(spec, config)
        if cause is None:
            return GeneratedSystem(spec=spec, seed_key=key, attempts=attempt + 1,
                                   rejections=rejections)
        rejections[cause] = rejections.get(cause, 0) + 1
    raise ExhaustedAttemptsError(
        f"no acceptable system in {config.max_attempts} attempts "
        f"(rejections: {rejections})", causes=rejections)


@dataclass
class BatchSummary:
    accepted: int
    attempted: int
    causes: dict[str, int]
    failures: list[int] = field(default_factory=list)

    @property
    def acceptance_rate(self):
        return self.accepted / self.attempted if self.attempted else 0.0


def batch(config: GeneratorConfig, count: int) -> tuple[list[GeneratedSystem], BatchSummary]:
    """Generate ``count`` systems on sub-seeds (seed, 0..count-1).

    Per-item exhaustion is recorded in the summary, not raised, unless
    every item fails.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    systems = []
    causes: dict[str, int] = {}
    attempted = 0
    failures = []
    for index in range(count):
        try:
            system = generate(config, sub_index=index)
        except ExhaustedAttemptsError as exc:
            failures.append(index)
            attempted += config.max_attempts
            for cause, num in exc.causes.items():
                causes[cause] = causes.get(cause, 0) + num
            continue
        systems.append(system)
        attempted += system.attempts
        for cause, num in system.rejections.items():
            causes[cause] = causes.get(cause, 0) + num
    if not systems:
        raise ExhaustedAttemptsError(
            f"all {count} batch items exhausted their attempts", causes=causes)
    return systems, BatchSummary(accepted=len(systems), attempted=attempted,
                                 causes=causes, failures=failures)


def save_batch(systems: list[GeneratedSystem], out_dir) -> list[Path]:
    """Write each spec plus a manifest CSV (index, sub_seed, attempts, accepted)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with (out_dir / "manifest.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "sub_seed", "attempts", "accepted"])
        for idx, system in enumerate(systems):
            path = out_dir / f"system_{idx:04d}.json"
            model.save_spec(system.spec, path)
            paths.append(path)
            sub = system.seed_key[1] if len(system.seed_key) > 1 else ""
            writer.writerow([idx, sub, system.attempts, 1])
    return paths
