import math

import numpy as np
import pytest

from sdsem import lisrel, measurement, model
from sdsem.errors import (HasStocksError, NotLinearError,
                          NotPositiveDefiniteError)

from conftest import make_spec


def _single_factor_lisrel():
    return lisrel.to_lisrel(model.bundled_spec("single_factor"))


def test_single_factor_implied_covariance():
    implied = lisrel.implied_covariance(_single_factor_lisrel())
    np.testing.assert_allclose(implied.sigma, [[1.5, 0.8], [0.8, 0.94]], rtol=1e-12)


def test_implied_covariance_bitwise_symmetric():
    implied = lisrel.implied_covariance(lisrel.to_lisrel(
        model.bundled_spec("political_democracy")))
    assert np.array_equal(implied.sigma, implied.sigma.T)


def test_zero_loadings_give_error_variances_only():
    l = lisrel.LisrelSpec(
        beta=np.zeros((0, 0)), gamma=np.zeros((0, 1)),
        phi=np.array([[1.0]]), psi=np.zeros((0, 0)),
        lambda_y=np.zeros((0, 0)), lambda_x=np.zeros((2, 1)),
        theta_eps=np.zeros(0), theta_delta=np.array([0.25, 0.5]))
    implied = lisrel.implied_covariance(l)
    np.testing.assert_allclose(implied.sigma, np.diag([0.25, 0.5]))


def test_single_path_structural_covariance():
    # xi -> eta with slope 0.5, Var(xi) = 1, Var(zeta) = 0.75:
    # Var(eta) = 0.25 + 0.75 = 1, Cov(eta, xi) = 0.5
    l = lisrel.LisrelSpec(
        beta=np.zeros((1, 1)), gamma=np.array([[0.5]]),
        phi=np.array([[1.0]]), psi=np.array([[0.75]]),
        lambda_y=np.array([[1.0]]), lambda_x=np.array([[1.0]]),
        theta_eps=np.zeros(1), theta_delta=np.zeros(1))
    implied = lisrel.implied_covariance(l)
    np.testing.assert_allclose(implied.sigma, [[1.0, 0.5], [0.5, 1.0]], rtol=1e-12)


def test_neumann_series_oracle_for_recursive_beta():
    # lower-triangular beta: (I - B)^-1 = I + B + B^2 (nilpotent), so the
    # implied covariance can be checked by forward substitution
    beta = np.array([[0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.2, 0.3, 0.0]])
    gamma = np.array([[1.0], [0.0], [0.5]])
    phi = np.array([[2.0]])
    psi = np.diag([0.5, 0.6, 0.7])
    a_oracle = np.eye(3) + beta + beta @ beta
    cov_eta = a_oracle @ (gamma @ phi @ gamma.T + psi) @ a_oracle.T
    l = lisrel.LisrelSpec(beta=beta, gamma=gamma, phi=phi, psi=psi,
                          lambda_y=np.eye(3), lambda_x=np.array([[1.0]]),
                          theta_eps=np.zeros(3), theta_delta=np.zeros(1))
    implied = lisrel.implied_covariance(l)
    np.testing.assert_allclose(implied.sigma[:3, :3], cov_eta, rtol=1e-12)


def test_ml_discrepancy_zero_iff_equal():
    sigma = np.array([[1.5, 0.8], [0.8, 0.94]])
    assert abs(lisrel.ml_discrepancy(sigma, sigma)) < 1e-12
    # S = 2I vs Sigma = I in dim 2: F = ln 1 + tr(2I) - ln 4 - 2 = 2 - ln 4
    f = lisrel.ml_discrepancy(2.0 * np.eye(2), np.eye(2))
    assert abs(f - (2.0 - math.log(4.0))) < 1e-12
    assert f > 0


def test_ml_discrepancy_requires_positive_definite():
    with pytest.raises(NotPositiveDefiniteError):
        lisrel.ml_discrepancy(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))


def test_to_lisrel_political_democracy_structure():
    l = lisrel.to_lisrel(model.bundled_spec("political_democracy"))
    assert l.n_xi == 1
    assert l.m_eta == 2
    assert l.lambda_y.shape[0] + l.lambda_x.shape[0] == 11
    assert l.lambda_x.shape == (3, 1)
    assert l.lambda_y.shape == (8, 2)
    np.testing.assert_allclose(l.lambda_x[:, 0], [1.0, 0.9, 1.1])
    # dem60 indicators load only on the first eta, dem65 only on the second
    np.testing.assert_allclose(l.lambda_y[:4, 0], [1.0, 1.2, 1.1, 1.25])
    np.testing.assert_allclose(l.lambda_y[:4, 1], 0.0)
    np.testing.assert_allclose(l.lambda_y[4:, 1], [1.0, 1.2, 1.1, 1.25])
    np.testing.assert_allclose(l.lambda_y[4:, 0], 0.0)
    # structural slopes: ind60 -> dem60 1.5; ind60 -> dem65 0.6, dem60 -> dem65 0.8
    np.testing.assert_allclose(l.gamma[:, 0], [1.5, 0.6])
    assert l.beta[1, 0] == 0.8 and l.beta[0, 1] == 0.0


def test_political_democracy_implied_is_psd():
    implied = lisrel.implied_covariance(lisrel.to_lisrel(
        model.bundled_spec("political_democracy")))
    assert implied.sigma.shape == (11, 11)
    eigs = np.linalg.eigvalsh(implied.sigma)
    assert np.min(eigs) > 0


def test_to_lisrel_rejects_stocks_and_nonlinearities():
    with pytest.raises(HasStocksError):
        lisrel.to_lisrel(model.bundled_spec("limits_to_growth"))
    quad = make_spec(n=2, b3=[[0.0, 0.0], [1.0, 0.0]],
                     gamma3=[[0.0, 0.0], [2.0, 0.0]])
    with pytest.raises(NotLinearError):
        lisrel.to_lisrel(quad)
    inter = make_spec(n=3, b4=[(2, 0, 1, 0.5)])
    with pytest.raises(NotLinearError):
        lisrel.to_lisrel(inter)


def test_monte_carlo_agreement():
    l = _single_factor_lisrel()
    implied = lisrel.implied_covariance(l)
    draws = lisrel.sample_observations(l, 100_000, seed=123)
    sample = measurement.sample_covariance(draws.T)
    np.testing.assert_allclose(sample, implied.sigma, rtol=0.02)


def test_sample_covariance_converges_toward_implied():
    l = _single_factor_lisrel()
    implied = lisrel.implied_covariance(l)
    err = []
    for count in (1_000, 100_000):
        sample = measurement.sample_covariance(
            lisrel.sample_observations(l, count, seed=7).T)
        err.append(np.max(np.abs(sample - implied.sigma)))
    assert err[1] < err[0]


def test_covariance_csv_round_trip(tmp_path):
    l = _single_factor_lisrel()
    implied = lisrel.implied_covariance(l)
    out = tmp_path / "cov.csv"
    lisrel.write_covariance_csv(implied.sigma, l.labels, out)
    sigma, labels = lisrel.read_covariance_csv(out)
    np.testing.assert_array_equal(sigma, implied.sigma)
    assert labels == l.labels
