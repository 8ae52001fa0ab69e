"""Linear SEM form and its model-implied covariance matrix.

Holds the classic matrix parameterization (endogenous slopes B, exogenous
slopes Gamma, covariances Phi / Psi, loading and error blocks), the closed
form for the implied indicator covariance, a discrepancy value between
sample and implied covariance, and the bridge from a stockless linear
model spec into this form.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model
from .errors import (DimensionError, HasStocksError, NotLinearError,
                     NotPositiveDefiniteError, SingularSystemError)

CONDITION_LIMIT = 1e12


@dataclass
class LisrelSpec:
    beta: np.ndarray         # m_eta x m_eta endogenous slopes
    gamma: np.ndarray        # m_eta x n_xi exogenous slopes
    phi: np.ndarray          # n_xi x n_xi exogenous covariance
    psi: np.ndarray          # m_eta x m_eta disturbance covariance
    lambda_y: np.ndarray     # p_y x m_eta loadings of y-indicators
    lambda_x: np.ndarray     # p_x x n_xi loadings of x-indicators
    theta_eps: np.ndarray    # length p_y error variances (diagonal)
    theta_delta: np.ndarray  # length p_x error variances (diagonal)
    alpha_eta: np.ndarray | None = None
    nu_y: np.ndarray | None = None
    nu_x: np.ndarray | None = None
    y_labels: list[str] = field(default_factory=list)
    x_labels: list[str] = field(default_factory=list)

    @property
    def m_eta(self):
        return self.beta.shape[0]

    @property
    def n_xi(self):
        return self.phi.shape[0]

    @property
    def labels(self):
        py, px = self.lambda_y.shape[0], self.lambda_x.shape[0]
        ys = self.y_labels or [f"zy_{i + 1}" for i in range(py)]
        xs = self.x_labels or [f"zx_{i + 1}" for i in range(px)]
        return list(ys) + list(xs)


@dataclass
class ImpliedCovariance:
    sigma: np.ndarray
    source: LisrelSpec


def _check_shapes(l: LisrelSpec):
    me, nx = l.m_eta, l.n_xi
    checks = [(l.beta, (me, me), "beta"), (l.gamma, (me, nx), "gamma"),
              (l.phi, (nx, nx), "phi"), (l.psi, (me, me), "psi"),
              (l.lambda_y, (l.lambda_y.shape[0], me), "lambda_y"),
              (l.lambda_x, (l.lambda_x.shape[0], nx), "lambda_x")]
    for arr, shape, name in checks:
        if np.asarray(arr).shape != shape:
            raise DimensionError(f"{name}: expected shape {shape}, got {np.asarray(arr).shape}")
    if np.asarray(l.theta_eps).shape != (l.lambda_y.shape[0],):
        raise DimensionError("theta_eps must have one variance per y-indicator")
    if np.asarray(l.theta_delta).shape != (l.lambda_x.shape[0],):
        raise DimensionError("theta_delta must have one variance per x-indicator")


def implied_covariance(l: LisrelSpec) -> ImpliedCovariance:
    """Implied indicator covariance, y-indicator block first.

    With A = (I - B)^-1: Cov(eta) = A (Gamma Phi Gamma' + Psi) A',
    Sigma_yy = Ly Cov(eta) Ly' + Theta_eps, Sigma_xx = Lx Phi Lx' +
    Theta_delta, Sigma_yx = Ly A Gamma Phi Lx'. The assembled matrix is
    made bitwise symmetric by mirroring the upper triangle.
    """
    _check_shapes(l)
    me = l.m_eta
    i_b = np.eye(me) - np.asarray(l.beta, dtype=float)
    if me and np.linalg.cond(i_b) > CONDITION_LIMIT:
        raise SingularSystemError("(I - B) is numerically singular")
    a = np.linalg.inv(i_b) if me else i_b
    phi = np.asarray(l.phi, dtype=float)
    psi = np.asarray(l.psi, dtype=float)
    ly = np.asarray(l.lambda_y, dtype=float)
    lx = np.asarray(l.lambda_x, dtype=float)

    cov_eta = a @ (l.gamma @ phi @ l.gamma.T + psi) @ a.T
    syy = ly @ cov_eta @ ly.T + np.diag(np.asarray(l.theta_eps, dtype=float))
    sxx = lx @ phi @ lx.T + np.diag(np.asarray(l.theta_delta, dtype=float))
    syx = ly @ a @ l.gamma @ phi @ lx.T
    top = np.hstack([syy, syx])
    bottom = np.hstack([syx.T, sxx])
    sigma = np.vstack([top, bottom])
    sigma = np.triu(sigma) + np.triu(sigma, 1).T
    return ImpliedCovariance(sigma=sigma, source=l)


def ml_discrepancy(sample: np.ndarray, implied: ImpliedCovariance | np.ndarray) -> float:
    """Likelihood discrepancy ln|Sigma| + tr(S Sigma^-1) - ln|S| - dim.

    Zero iff the matrices coincide; requires both positive definite.
    """
    s = np.asarray(sample, dtype=float)
    sigma = implied.sigma if isinstance(implied, ImpliedCovariance) else np.asarray(implied, dtype=float)
    if s.shape != sigma.shape or s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"shape mismatch: {s.shape} vs {sigma.shape}")
    for name, mat in (("sample", s), ("implied", sigma)):
        try:
            np.linalg.cholesky(mat)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(f"{name} covariance is not positive definite") from exc
    dim = s.shape[0]
    sign_sigma, logdet_sigma = np.linalg.slogdet(sigma)
    sign_s, logdet_s = np.linalg.slogdet(s)
    return float(logdet_sigma + np.trace(np.linalg.solve(sigma, s)) - logdet_s - dim)


def to_lisrel(spec: model.ModelSpec) -> LisrelSpec:
    """Bridge a stockless, linear, acyclic-or-simultaneous model spec into
    the matrix SEM form.

    Statics with no inbound linear edge are exogenous; noise disturbance
    variances populate Phi / Psi; zero-exponent diagonal constants become
    intercepts. Indicators loading on an endogenous latent land in the
    y-block, the rest in the x-block.
    """
    if spec.dims.m > 0:
        raise HasStocksError(f"model has {spec.dims.m} stocks; no static-only form")
    st = spec.statics
    b3 = np.asarray(st.b3, dtype=float)
    g3 = np.asarray(st.gamma3, dtype=float)
    if any(beta != 0 for _, _, _, beta in st.b4):
        raise NotLinearError("interaction terms present")
    if np.any((b3 != 0) & ~np.isin(g3, (0.0, 1.0))):
        raise NotLinearError("exponent outside {0, 1} on an active term")
    n = spec.dims.n

    linear_edge = (b3 != 0) & (g3 == 1.0)
    endo = [i for i in range(n) if np.any(linear_edge[i])]
    exo = [i for i in range(n) if i not in endo]
    eta_pos = {v: i for i, v in enumerate(endo)}
    xi_pos = {v: i for i, v in enumerate(exo)}

    me, nx = len(endo), len(exo)
    beta = np.zeros((me, me))
    gamma = np.zeros((me, nx))
    for i in endo:
        for j in range(n):
            if linear_edge[i, j]:
                if j in eta_pos:
                    beta[eta_pos[i], eta_pos[j]] = b3[i, j]
                else:
                    gamma[eta_pos[i], xi_pos[j]] = b3[i, j]

    noise_var = {d.target: d.sd ** 2 for d in spec.disturbances if d.kind == "noise"}
    phi = np.zeros((nx, nx))
    psi = np.zeros((me, me))
    for v in exo:
        if v not in noise_var:
            warnings.warn(f"exogenous latent y_{v + 1} has no noise disturbance; "
                          "its variance is set to 0", stacklevel=2)
        phi[xi_pos[v], xi_pos[v]] = noise_var.get(v, 0.0)
    for v in endo:
        if v not in noise_var:
            warnings.warn(f"endogenous latent y_{v + 1} has no noise disturbance; "
                          "its disturbance variance is set to 0", stacklevel=2)
        psi[eta_pos[v], eta_pos[v]] = noise_var.get(v, 0.0)

    # zero-exponent diagonal constants act as intercepts
    alpha = np.array([b3[v, v] if g3[v, v] == 0 else 0.0 for v in endo])

    ly_full = np.asarray(spec.measurement.lambda_y, dtype=float)
    sd = np.asarray(spec.measurement.error_sd, dtype=float)
    z_names = list(spec.names.get("z", [])) or [f"z_{i + 1}" for i in range(spec.dims.p)]
    y_rows, x_rows = [], []
    for i in range(spec.dims.p):
        loads_endo = any(ly_full[i, v] != 0 for v in endo)
        loads_exo = any(ly_full[i, v] != 0 for v in exo)
        if loads_endo and loads_exo:
            raise NotLinearError(
                f"indicator {z_names[i]} loads on both endogenous and exogenous latents")
        (y_rows if loads_endo else x_rows).append(i)

    lambda_y = np.array([[ly_full[i, v] for v in endo] for i in y_rows]).reshape(len(y_rows), me)
    lambda_x = np.array([[ly_full[i, v] for v in exo] for i in x_rows]).reshape(len(x_rows), nx)
    theta_eps = np.array([sd[i] ** 2 for i in y_rows])
    theta_delta = np.array([sd[i] ** 2 for i in x_rows])

    return LisrelSpec(beta=beta, gamma=gamma, phi=phi, psi=psi,
                      lambda_y=lambda_y, lambda_x=lambda_x,
                      theta_eps=theta_eps, theta_delta=theta_delta,
                      alpha_eta=alpha,
                      nu_y=np.zeros(len(y_rows)), nu_x=np.zeros(len(x_rows)),
                      y_labels=[z_names[i] for i in y_rows],
                      x_labels=[z_names[i] for i in x_rows])


def sample_observations(l: LisrelSpec, count: int, seed: int = 0) -> np.ndarray:
    """Draw ``count`` indicator vectors from the generative model with
    Normal latents and errors; columns ordered as in the implied matrix."""
    rng = np.random.default_rng(seed)
    me, nx = l.m_eta, l.n_xi
    py, px = l.lambda_y.shape[0], l.lambda_x.shape[0]
    chol_phi = np.linalg.cholesky(l.phi) if nx and np.any(l.phi) else np.zeros((nx, nx))
    chol_psi = np.linalg.cholesky(l.psi) if me and np.any(l.psi) else np.zeros((me, me))
    xi = rng.standard_normal((count, nx)) @ chol_phi.T
    zeta = rng.standard_normal((count, me)) @ chol_psi.T
    if me:
        a = np.linalg.inv(np.eye(me) - l.beta)
        eta = (xi @ l.gamma.T + zeta) @ a.T
    else:
        eta = np.zeros((count, 0))
    y = eta @ l.lambda_y.T + rng.standard_normal((count, py)) * np.sqrt(l.theta_eps)
    x = xi @ l.lambda_x.T + rng.standard_normal((count, px)) * np.sqrt(l.theta_delta)
    return np.hstack([y, x])


def write_covariance_csv(sigma: np.ndarray, labels, path) -> None:
    path = Path(path)
    labels = list(labels)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + labels)
        for label, row in zip(labels, sigma):
            writer.writerow([label] + [repr(float(v)) for v in row])


def read_covariance_csv(path) -> tuple[np.ndarray, list[str]]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        labels = [h.strip() for h in header[1:]]
        rows = [[float(v) for v in row[1:]] for row in reader if row]
    return np.asarray(rows, dtype=float), labels
