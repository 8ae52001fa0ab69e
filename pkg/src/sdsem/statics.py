"""Static subsystem evaluation.

Each static variable is a sum of power terms on stocks, power terms on
other statics, pairwise interaction products, and an additive disturbance.
Acyclic (SD-restricted) systems are evaluated in one topological pass;
systems with simultaneous relations are solved directly when linear and
by damped fixed-point iteration otherwise.
"""

from __future__ import annotations

import numpy as np

from . import model
from .errors import (ConvergenceError, DivergenceError, DomainError,
                     SingularSystemError)

FIXED_POINT_TOL = 1e-10
FIXED_POINT_CAP = 10_000
FIXED_POINT_DAMPING = 0.5
CONDITION_LIMIT = 1e12


def power(base: float, exponent: float) -> float:
    """Real power with the conventions the model algebra needs.

    0**0 is 1 so zero-exponent terms encode constants even at a zero base.
    Negative bases are only admitted for integer exponents.
    """
    if exponent == 0.0:
        return 1.0
    if exponent == 1.0:
        return base
    if base < 0.0 and exponent != round(exponent):
        raise DomainError(f"negative base {base} with fractional exponent {exponent}")
    if base == 0.0 and exponent < 0.0:
        raise DomainError(f"zero base with negative exponent {exponent}")
    try:
        with np.errstate(over="ignore"):
            result = base ** exponent
    except OverflowError as exc:
        raise DivergenceError(f"power term overflow: {base}**{exponent}") from exc
    if not np.isfinite(result):
        raise DivergenceError(f"power term overflow: {base}**{exponent}")
    return result


def disturbance_value(spec: model.ModelSpec, target: int, t: float) -> float:
    """Additive exogenous input for static ``target`` at time ``t``.

    Noise draws are keyed by (seed, target, time bits) so a value depends
    only on where it is asked for, never on evaluation order.
    """
    total = 0.0
    for d in spec.disturbances:
        if d.target != target:
            continue
        if d.kind == "step":
            if t >= d.onset:
                total += d.height
        elif d.kind == "pulse":
            if d.onset <= t < d.onset + d.width:
                total += d.height
        elif d.kind == "noise":
            if d.sd > 0:
                t_bits = int(np.float64(t).view(np.uint64))
                rng = np.random.default_rng([d.seed, d.target, t_bits])
                total += d.sd * rng.standard_normal()
    return total


class _Plan:
    """Per-row nonzero term lists, precomputed once per spec."""

    def __init__(self, spec: model.ModelSpec):
        st = spec.statics
        n = spec.dims.n
        b2 = np.asarray(st.b2, dtype=float)
        g2 = np.asarray(st.gamma2, dtype=float)
        b3 = np.asarray(st.b3, dtype=float)
        g3 = np.asarray(st.gamma3, dtype=float)
        self.x_terms = [[(j, b2[i, j], g2[i, j]) for j in range(spec.dims.m)
                         if b2[i, j] != 0] for i in range(n)]
        self.y_terms = [[(j, b3[i, j], g3[i, j]) for j in range(n)
                         if b3[i, j] != 0] for i in range(n)]
        self.interactions = [[] for _ in range(n)]
        for i, j, k, beta in st.b4:
            if beta != 0:
                self.interactions[i].append((j, k, beta))
        self.has_noise = any(d.kind == "noise" and d.sd > 0 for d in spec.disturbances)
        self.has_disturbance = bool(spec.disturbances)
        self.order = (model.topological_order(spec)
                      if spec.mode == model.SD_RESTRICTED else list(range(n)))


def build_plan(spec: model.ModelSpec) -> _Plan:
    return _Plan(spec)


def _row_value(plan: _Plan, spec, i: int, x, y, t: float) -> float:
    total = 0.0
    for j, b, g in plan.x_terms[i]:
        total += b * power(float(x[j]), g)
    for j, b, g in plan.y_terms[i]:
        total += b * power(float(y[j]), g)
    for j, k, beta in plan.interactions[i]:
        total += beta * y[j] * y[k]
    if plan.has_disturbance:
        total += disturbance_value(spec, i, t)
    return total


def _rhs(plan: _Plan, spec, x, y, t: float) -> np.ndarray:
    return np.array([_row_value(plan, spec, i, x, y, t)
                     for i in range(spec.dims.n)])


def eval_static(spec: model.ModelSpec, x, t: float, plan: _Plan | None = None) -> np.ndarray:
    """Evaluate the static vector y for state ``x`` at time ``t``.

    SD-restricted specs are computed in a single topological pass;
    nonrecursive specs are delegated to :func:`solve_nonrecursive`.
    """
    if plan is None:
        plan = _Plan(spec)
    x = np.asarray(x, dtype=float)
    if spec.mode == model.NONRECURSIVE:
        return solve_nonrecursive(spec, x, t, plan=plan)
    y = np.zeros(spec.dims.n)
    for i in plan.order:
        y[i] = _row_value(plan, spec, i, x, y, t)
    if not np.all(np.isfinite(y)):
        bad = int(np.argmax(~np.isfinite(y)))
        raise DivergenceError(f"non-finite static value y_{bad + 1} at t = {t}", time=t)
    return y


def is_linear_static(spec: model.ModelSpec) -> bool:
    """True when every active static-on-static exponent is 0 or 1 and there
    are no interaction terms, i.e. the system (I - L) y = c is exact."""
    st = spec.statics
    b3 = np.asarray(st.b3, dtype=float)
    g3 = np.asarray(st.gamma3, dtype=float)
    active = b3 != 0
    if np.any(active & ~np.isin(g3, (0.0, 1.0))):
        return False
    return not any(beta != 0 for _, _, _, beta in st.b4)


def solve_linear(spec: model.ModelSpec, x, t: float, plan: _Plan | None = None) -> np.ndarray:
    """Direct solve of the linear static system (I - L) y = c."""
    if not is_linear_static(spec):
        raise SingularSystemError("static system is not linear")
    if plan is None:
        plan = _Plan(spec)
    x = np.asarray(x, dtype=float)
    n = spec.dims.n
    L = np.zeros((n, n))
    c = np.zeros(n)
    for i in range(n):
        for j, b, g in plan.x_terms[i]:
            c[i] += b * power(float(x[j]), g)
        for j, b, g in plan.y_terms[i]:
            if g == 0.0:
                c[i] += b
            else:
                L[i, j] += b
        if plan.has_disturbance:
            c[i] += disturbance_value(spec, i, t)
    A = np.eye(n) - L
    if np.linalg.cond(A) > CONDITION_LIMIT:
        raise SingularSystemError("(I - L) is numerically singular")
    return np.linalg.solve(A, c)


def solve_nonrecursive(spec: model.ModelSpec, x, t: float,
                       plan: _Plan | None = None, use_direct: bool = True) -> np.ndarray:
    """Solve the simultaneous static system at state ``x``.

    Linear systems go through the direct solve (unless ``use_direct`` is
    off); anything else uses damped iteration y <- (1 - d) y + d rhs(y)
    from the zero vector.
    """
    if plan is None:
        plan = _Plan(spec)
    x = np.asarray(x, dtype=float)
    if use_direct and is_linear_static(spec):
        return solve_linear(spec, x, t, plan=plan)

    y = np.zeros(spec.dims.n)
    for _ in range(FIXED_POINT_CAP):
        rhs = _rhs(plan, spec, x, y, t)
        if not np.all(np.isfinite(rhs)):
            raise DivergenceError(f"non-finite static iterate at t = {t}", time=t)
        resid = np.max(np.abs(y - rhs)) if y.size else 0.0
        if resid <= FIXED_POINT_TOL * (1.0 + (np.max(np.abs(y)) if y.size else 0.0)):
            return y
        y = (1.0 - FIXED_POINT_DAMPING) * y + FIXED_POINT_DAMPING * rhs
    raise ConvergenceError(
        f"static fixed point did not converge in {FIXED_POINT_CAP} iterations")
