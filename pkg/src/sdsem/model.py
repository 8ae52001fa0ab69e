"""Model specification: types, validation, ordering, and JSON (de)serialization.

A model couples three subsystems over a time horizon: a dynamic subsystem
(stocks ``x`` driven by rate terms built from static variables), a static
subsystem (auxiliaries ``y`` built from power terms on stocks and other
statics plus pairwise interactions), and a measurement subsystem mapping
latents to noisy, possibly delayed indicators ``z``.
"""

from __future__ import annotations

import heapq
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CycleError, ParseError, SchemaError, ValidationError

SD_RESTRICTED = "SD_RESTRICTED"
NONRECURSIVE = "NONRECURSIVE"
MODES = (SD_RESTRICTED, NONRECURSIVE)

DISTURBANCE_KINDS = ("step", "pulse", "noise")

_BUNDLED_DIR = Path(__file__).parent / "specs"
SPEC_DIR_ENV = "SDSEM_SPEC_DIR"


@dataclass
class Dimensions:
    m: int  # stocks
    n: int  # static variables
    p: int  # indicators
    q: int  # observation times


@dataclass
class TimeHorizon:
    t_start: float
    t_end: float
    dt: float
    observation_times: list[float] = field(default_factory=list)

    @property
    def span(self):
        return self.t_end - self.t_start


@dataclass
class DynamicSpec:
    b1: np.ndarray      # m x n rate coefficients
    gamma1: np.ndarray  # m x n exponents
    x0: np.ndarray      # length m


@dataclass
class StaticSpec:
    b2: np.ndarray      # n x m coefficients on stocks
    gamma2: np.ndarray  # n x m exponents on stocks
    b3: np.ndarray      # n x n coefficients on statics
    gamma3: np.ndarray  # n x n exponents on statics
    b4: list[tuple[int, int, int, float]] = field(default_factory=list)
    # b4 entries are (i, j, k, beta) with j < k: static i receives beta * y_j * y_k.


@dataclass
class MeasurementSpec:
    lambda_x: np.ndarray  # p x m loadings on stocks
    lambda_y: np.ndarray  # p x n loadings on statics
    theta_x: np.ndarray   # p x m delays
    theta_y: np.ndarray   # p x n delays
    error_sd: np.ndarray  # length p


@dataclass
class DisturbanceSpec:
    target: int
    kind: str
    height: float = 0.0
    onset: float = 0.0
    width: float = 0.0
    sd: float = 0.0
    seed: int = 0


@dataclass
class ModelSpec:
    dims: Dimensions
    horizon: TimeHorizon
    dynamic: DynamicSpec
    statics: StaticSpec
    measurement: MeasurementSpec
    disturbances: list[DisturbanceSpec] = field(default_factory=list)
    mode: str = SD_RESTRICTED
    names: dict = field(default_factory=dict)

    def to_dict(self):
        return _spec_to_dict(self)


@dataclass
class Violation:
    location: str
    rule: str
    message: str

    def __str__(self):
        return f"{self.location}: [{self.rule}] {self.message}"


# ---------------------------------------------------------------------------
# validation

def _check_shape(report, arr, shape, location):
    arr = np.asarray(arr)
    if arr.shape != shape:
        report.append(Violation(location, "shape",
                                f"expected shape {shape}, got {arr.shape}"))
        return False
    return True


def _check_finite(report, arr, location):
    arr = np.asarray(arr, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        report.append(Violation(location, "finite", "non-finite entries"))


def validate(spec: ModelSpec) -> list[Violation]:
    """Check every model invariant; an empty list means the spec is admissible.

    All failures are reported, none raised, so a caller sees every problem
    at once.
    """
    report: list[Violation] = []
    d = spec.dims
    if d.m < 0:
        report.append(Violation("dims.m", "nonnegative", f"m = {d.m}"))
    if d.n < 1:
        report.append(Violation("dims.n", "min-one-static", f"n = {d.n}"))
    if d.p < 0:
        report.append(Violation("dims.p", "nonnegative", f"p = {d.p}"))
    if d.q < 0:
        report.append(Violation("dims.q", "nonnegative", f"q = {d.q}"))
    if (d.p == 0) != (d.q == 0):
        report.append(Violation("dims", "indicators-need-observations",
                                f"p = {d.p} but q = {d.q}"))
    if spec.mode not in MODES:
        report.append(Violation("mode", "known-mode", f"unknown mode {spec.mode!r}"))

    h = spec.horizon
    if not h.t_end > h.t_start:
        report.append(Violation("horizon", "t-ordering",
                                f"t_end {h.t_end} must exceed t_start {h.t_start}"))
    if not h.dt > 0:
        report.append(Violation("horizon.dt", "positive-dt", f"dt = {h.dt}"))
    elif h.t_end > h.t_start and h.dt > h.span:
        report.append(Violation("horizon.dt", "dt-within-span",
                                f"dt = {h.dt} exceeds span {h.span}"))
    obs = list(h.observation_times)
    if len(obs) != d.q:
        report.append(Violation("horizon.observation_times", "count",
                                f"expected q = {d.q} times, got {len(obs)}"))
    if any(b <= a for a, b in zip(obs, obs[1:])):
        report.append(Violation("horizon.observation_times", "strictly-increasing",
                                "times must be strictly increasing"))
    if obs and (obs[0] < h.t_start or obs[-1] > h.t_end):
        report.append(Violation("horizon.observation_times", "within-horizon",
                                "times must lie in [t_start, t_end]"))

    m, n, p = d.m, d.n, d.p
    dy = spec.dynamic
    if _check_shape(report, dy.b1, (m, n), "dynamic.b1"):
        _check_finite(report, dy.b1, "dynamic.b1")
    if _check_shape(report, dy.gamma1, (m, n), "dynamic.gamma1"):
        _check_finite(report, dy.gamma1, "dynamic.gamma1")
    if _check_shape(report, dy.x0, (m,), "dynamic.x0"):
        _check_finite(report, dy.x0, "dynamic.x0")

    st = spec.statics
    for name, arr, shape in (("b2", st.b2, (n, m)), ("gamma2", st.gamma2, (n, m)),
                             ("b3", st.b3, (n, n)), ("gamma3", st.gamma3, (n, n))):
        if _check_shape(report, arr, shape, f"static.{name}"):
            _check_finite(report, arr, f"static.{name}")
    for idx, entry in enumerate(st.b4):
        i, j, k, beta = entry
        loc = f"static.b4[{idx}]"
        if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
            report.append(Violation(loc, "index-range", f"indices {(i, j, k)} out of range"))
            continue
        if j >= k:
            report.append(Violation(loc, "interaction-pair-order",
                                    f"requires j < k, got ({j}, {k})"))
        if not np.isfinite(beta):
            report.append(Violation(loc, "finite", "non-finite coefficient"))

    me = spec.measurement
    for name, arr, shape in (("lambda_x", me.lambda_x, (p, m)),
                             ("lambda_y", me.lambda_y, (p, n)),
                             ("theta_x", me.theta_x, (p, m)),
                             ("theta_y", me.theta_y, (p, n)),
                             ("error_sd", me.error_sd, (p,))):
        if _check_shape(report, arr, shape, f"measurement.{name}"):
            _check_finite(report, arr, f"measurement.{name}")
    for name, arr in (("theta_x", me.theta_x), ("theta_y", me.theta_y)):
        arr = np.asarray(arr, dtype=float)
        if arr.size and arr.shape == ((p, m) if name == "theta_x" else (p, n)) and np.any(arr < 0):
            report.append(Violation(f"measurement.{name}", "nonnegative-delay",
                                    "delays must be >= 0"))
    sd = np.asarray(me.error_sd, dtype=float)
    if sd.shape == (p,) and sd.size and np.any(sd < 0):
        report.append(Violation("measurement.error_sd", "nonnegative-sd",
                                "error sds must be >= 0"))

    for idx, dist in enumerate(spec.disturbances):
        loc = f"disturbances[{idx}]"
        if dist.kind not in DISTURBANCE_KINDS:
            report.append(Violation(loc, "known-kind", f"unknown kind {dist.kind!r}"))
            continue
        if not (0 <= dist.target < n):
            report.append(Violation(loc, "target-range",
                                    f"target {dist.target} outside [0, {n})"))
        if dist.kind in ("step", "pulse"):
            if not (h.t_start <= dist.onset <= h.t_end):
                report.append(Violation(loc, "onset-within-horizon",
                                        f"onset {dist.onset} outside horizon"))
            if dist.kind == "pulse" and not dist.width > 0:
                report.append(Violation(loc, "positive-width", f"width = {dist.width}"))
        if dist.kind == "noise" and dist.sd < 0:
            report.append(Violation(loc, "nonnegative-sd", f"sd = {dist.sd}"))

    if spec.mode == SD_RESTRICTED and not report:
        try:
            topological_order(spec)
        except CycleError as exc:
            report.append(Violation("static", "acyclic-statics", str(exc)))
    return report


# ---------------------------------------------------------------------------
# dependence graph

def dependence_edges(spec: ModelSpec) -> set[tuple[int, int]]:
    """Edges (j, i) meaning static j feeds static i.

    A nonzero b3[i][j] only creates an edge when its exponent is nonzero;
    a zero-exponent entry contributes a constant, not a dependence
    (the usual encoding of constants on the diagonal).
    """
    st = spec.statics
    edges = set()
    b3 = np.asarray(st.b3, dtype=float)
    g3 = np.asarray(st.gamma3, dtype=float)
    nz = np.argwhere((b3 != 0) & (g3 != 0))
    for i, j in nz:
        edges.add((int(j), int(i)))
    for i, j, k, beta in st.b4:
        if beta != 0:
            edges.add((int(j), int(i)))
            edges.add((int(k), int(i)))
    return edges


def topological_order(spec: ModelSpec) -> list[int]:
    """Kahn's algorithm with ascending-index tie breaking (deterministic)."""
    n = spec.dims.n
    edges = dependence_edges(spec)
    out = {i: [] for i in range(n)}
    indeg = [0] * n
    for j, i in sorted(edges):
        if j == i:
            raise CycleError(f"static variable y_{i + 1} depends on itself")
        out[j].append(i)
        indeg[i] += 1
    heap = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        j = heapq.heappop(heap)
        order.append(j)
        for i in out[j]:
            indeg[i] -= 1
            if indeg[i] == 0:
                heapq.heappush(heap, i)
    if len(order) != n:
        stuck = [i + 1 for i in range(n) if indeg[i] > 0]
        raise CycleError(f"static dependence cycle involving y indices {stuck}")
    return order


def constant_statics(spec: ModelSpec) -> list[int]:
    """Indices of statics defined only by a zero-exponent diagonal entry."""
    st = spec.statics
    n = spec.dims.n
    b2 = np.asarray(st.b2, dtype=float)
    b3 = np.asarray(st.b3, dtype=float)
    g3 = np.asarray(st.gamma3, dtype=float)
    inter_rows = {i for i, _, _, beta in st.b4 if beta != 0}
    consts = []
    for i in range(n):
        if b3[i, i] == 0 or g3[i, i] != 0:
            continue
        off = np.delete(b3[i], i)
        if np.any(off != 0) or (b2.size and np.any(b2[i] != 0)) or i in inter_rows:
            continue
        consts.append(i)
    return consts


# ---------------------------------------------------------------------------
# serialization

_TOP_KEYS = {"dims", "horizon", "dynamic", "static", "measurement",
             "disturbances", "mode", "names"}
_DIST_FIELDS = {"step": ("height", "onset"),
                "pulse": ("height", "onset", "width"),
                "noise": ("sd", "seed")}


def _spec_to_dict(spec: ModelSpec) -> dict:
    dists = []
    for d in spec.disturbances:
        entry = {"target": d.target, "kind": d.kind}
        for f in _DIST_FIELDS.get(d.kind, ()):
            entry[f] = getattr(d, f)
        dists.append(entry)
    return {
        "dims": {"m": spec.dims.m, "n": spec.dims.n,
                 "p": spec.dims.p, "q": spec.dims.q},
        "horizon": {"t_start": spec.horizon.t_start, "t_end": spec.horizon.t_end,
                    "dt": spec.horizon.dt,
                    "observation_times": [float(t) for t in spec.horizon.observation_times]},
        "dynamic": {"b1": np.asarray(spec.dynamic.b1, dtype=float).tolist(),
                    "gamma1": np.asarray(spec.dynamic.gamma1, dtype=float).tolist(),
                    "x0": np.asarray(spec.dynamic.x0, dtype=float).tolist()},
        "static": {"b2": np.asarray(spec.statics.b2, dtype=float).tolist(),
                   "gamma2": np.asarray(spec.statics.gamma2, dtype=float).tolist(),
                   "b3": np.asarray(spec.statics.b3, dtype=float).tolist(),
                   "gamma3": np.asarray(spec.statics.gamma3, dtype=float).tolist(),
                   "b4": [[int(i), int(j), int(k), float(b)]
                          for i, j, k, b in spec.statics.b4]},
        "measurement": {"lambda_x": np.asarray(spec.measurement.lambda_x, dtype=float).tolist(),
                        "lambda_y": np.asarray(spec.measurement.lambda_y, dtype=float).tolist(),
                        "theta_x": np.asarray(spec.measurement.theta_x, dtype=float).tolist(),
                        "theta_y": np.asarray(spec.measurement.theta_y, dtype=float).tolist(),
                        "error_sd": np.asarray(spec.measurement.error_sd, dtype=float).tolist()},
        "disturbances": dists,
        "mode": spec.mode,
        "names": dict(spec.names),
    }


def _require(doc, key, types, location):
    if key not in doc:
        raise SchemaError(f"{location}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, types):
        raise SchemaError(f"{location}.{key}: expected {types}, got {type(value).__name__}")
    return value


def _matrix(doc, key, rows, cols, location):
    raw = _require(doc, key, list, location)
    if len(raw) != rows or any(not isinstance(r, list) or len(r) != cols for r in raw):
        raise SchemaError(f"{location}.{key}: expected a {rows}x{cols} matrix")
    try:
        return np.array(raw, dtype=float).reshape(rows, cols)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{location}.{key}: non-numeric entries ({exc})") from exc


def _vector(doc, key, length, location):
    raw = _require(doc, key, list, location)
    if len(raw) != length:
        raise SchemaError(f"{location}.{key}: expected length {length}, got {len(raw)}")
    try:
        return np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{location}.{key}: non-numeric entries ({exc})") from exc


def spec_from_dict(doc: dict) -> ModelSpec:
    """Build and validate a ModelSpec from its wire dictionary."""
    if not isinstance(doc, dict):
        raise SchemaError("top-level document must be an object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise SchemaError(f"unknown top-level fields: {sorted(extra)}")
    missing = _TOP_KEYS - {"names"} - set(doc)
    if missing:
        raise SchemaError(f"missing top-level fields: {sorted(missing)}")

    dims_doc = _require(doc, "dims", dict, "")
    dims = Dimensions(m=int(_require(dims_doc, "m", int, "dims")),
                      n=int(_require(dims_doc, "n", int, "dims")),
                      p=int(_require(dims_doc, "p", int, "dims")),
                      q=int(_require(dims_doc, "q", int, "dims")))

    h_doc = _require(doc, "horizon", dict, "")
    dt = float(_require(h_doc, "dt", (int, float), "horizon"))
    if not dt > 0:
        raise SchemaError(f"horizon.dt: must be positive, got {dt}")
    horizon = TimeHorizon(
        t_start=float(_require(h_doc, "t_start", (int, float), "horizon")),
        t_end=float(_require(h_doc, "t_end", (int, float), "horizon")),
        dt=dt,
        observation_times=[float(t) for t in
                           _require(h_doc, "observation_times", list, "horizon")])

    m, n, p = dims.m, dims.n, dims.p
    dy_doc = _require(doc, "dynamic", dict, "")
    dynamic = DynamicSpec(b1=_matrix(dy_doc, "b1", m, n, "dynamic"),
                          gamma1=_matrix(dy_doc, "gamma1", m, n, "dynamic"),
                          x0=_vector(dy_doc, "x0", m, "dynamic"))

    st_doc = _require(doc, "static", dict, "")
    b4_raw = _require(st_doc, "b4", list, "static")
    b4 = []
    for idx, entry in enumerate(b4_raw):
        if not isinstance(entry, list) or len(entry) != 4:
            raise SchemaError(f"static.b4[{idx}]: expected [i, j, k, beta]")
        i, j, k, beta = entry
        b4.append((int(i), int(j), int(k), float(beta)))
    statics = StaticSpec(b2=_matrix(st_doc, "b2", n, m, "static"),
                         gamma2=_matrix(st_doc, "gamma2", n, m, "static"),
                         b3=_matrix(st_doc, "b3", n, n, "static"),
                         gamma3=_matrix(st_doc, "gamma3", n, n, "static"),
                         b4=b4)

    me_doc = _require(doc, "measurement", dict, "")
    measurement = MeasurementSpec(lambda_x=_matrix(me_doc, "lambda_x", p, m, "measurement"),
                                  lambda_y=_matrix(me_doc, "lambda_y", p, n, "measurement"),
                                  theta_x=_matrix(me_doc, "theta_x", p, m, "measurement"),
                                  theta_y=_matrix(me_doc, "theta_y", p, n, "measurement"),
                                  error_sd=_vector(me_doc, "error_sd", p, "measurement"))

    dists = []
    for idx, entry in enumerate(_require(doc, "disturbances", list, "")):
        loc = f"disturbances[{idx}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{loc}: expected an object")
        kind = _require(entry, "kind", str, loc)
        if kind not in DISTURBANCE_KINDS:
            raise SchemaError(f"{loc}.kind: unknown kind {kind!r}")
        allowed = {"target", "kind", *_DIST_FIELDS[kind]}
        unknown = set(entry) - allowed
        if unknown:
            raise SchemaError(f"{loc}: unknown fields {sorted(unknown)}")
        dist = DisturbanceSpec(target=int(_require(entry, "target", int, loc)), kind=kind)
        for f in _DIST_FIELDS[kind]:
            value = _require(entry, f, (int, float), loc)
            setattr(dist, f, int(value) if f == "seed" else float(value))
        dists.append(dist)

    mode = _require(doc, "mode", str, "")
    if mode not in MODES:
        raise SchemaError(f"mode: expected one of {MODES}, got {mode!r}")
    names = doc.get("names", {})
    if not isinstance(names, dict):
        raise SchemaError("names: expected an object")

    spec = ModelSpec(dims=dims, horizon=horizon, dynamic=dynamic, statics=statics,
                     measurement=measurement, disturbances=dists, mode=mode,
                     names=dict(names))
    report = validate(spec)
    if report:
        raise ValidationError(report)
    return spec


def load_spec(path) -> ModelSpec:
    """Load, schema-check, and validate a model spec file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return spec_from_dict(doc)


def save_spec(spec: ModelSpec, path) -> None:
    """Write a spec; ``load_spec(save_spec(s))`` round-trips bit-exactly."""
    path = Path(path)
    path.write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def resolve_spec_path(name) -> Path:
    """Resolve a spec argument: existing path, then the spec-dir override,
    then the bundled directory. Bare names may omit the .json suffix."""
    candidate = Path(name)
    if candidate.exists():
        return candidate
    stem = str(name) if str(name).endswith(".json") else f"{name}.json"
    override = os.environ.get(SPEC_DIR_ENV)
    for base in ([Path(override)] if override else []) + [_BUNDLED_DIR]:
        hit = base / stem
        if hit.exists():
            return hit
    raise ParseError(f"spec not found: {name}")


def bundled_spec(name: str) -> ModelSpec:
    return load_spec(_BUNDLED_DIR / f"{name}.json")
