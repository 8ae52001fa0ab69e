import numpy as np
import pytest

from sdsem import engine, measurement, metrics
from sdsem.errors import (AllZeroObservedError, LengthMismatchError,
                          OutOfSpanError, PerfectFitError)


def pair(s, o, times=None):
    s = np.asarray(s, dtype=float)
    times = np.arange(len(s), dtype=float) if times is None else times
    return metrics.SeriesPair(times=times, simulated=s, observed=o)


def test_theil_pure_bias_fixture():
    u_m, u_s, u_c = metrics.theil_decomposition(pair([2, 2, 2], [1, 1, 1]))
    assert abs(u_m - 1.0) < 1e-12
    assert abs(u_s) < 1e-12
    assert abs(u_c) < 1e-12


def test_theil_bias_variance_fixture():
    # s = 1 + 2 o with o = (0, 1, 2): shares (6/7, 1/7, 0)
    u_m, u_s, u_c = metrics.theil_decomposition(pair([1, 3, 5], [0, 1, 2]))
    assert abs(u_m - 6.0 / 7.0) < 1e-12
    assert abs(u_s - 1.0 / 7.0) < 1e-12
    assert abs(u_c) < 1e-12


def test_theil_identity_property():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        q = int(rng.integers(2, 201))
        s = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), q)
        o = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), q)
        u_m, u_s, u_c = metrics.theil_decomposition(pair(s, o))
        assert min(u_m, u_s, u_c) >= -1e-12
        assert abs(u_m + u_s + u_c - 1.0) < 1e-9


def test_theil_perfect_fit_raises():
    with pytest.raises(PerfectFitError):
        metrics.theil_decomposition(pair([1, 2], [1, 2]))


def test_theil_constant_series_covariance_share():
    # observed constant: sd_o = 0 forces r = 0 and u_c = 0
    u_m, u_s, u_c = metrics.theil_decomposition(pair([0, 2], [1, 1]))
    assert u_c == 0.0
    assert abs(u_m + u_s - 1.0) < 1e-12


def test_r_squared_unclamped_fixture():
    report = metrics.basic_fit(pair([2, 4, 6], [1, 2, 3]))
    assert abs(report.r_squared - (-6.0)) < 1e-12


def test_r_squared_constant_observed_sentinel():
    report = metrics.basic_fit(pair([1, 2], [3, 3]))
    assert report.r_squared == float("-inf")
    assert "r2_undefined_constant_observed" in report.flags


def test_perfect_fit_flag_and_zero_error_stats():
    report = metrics.basic_fit(pair([1, 2, 3], [1, 2, 3]))
    assert report.mse == 0.0 and report.rmse == 0.0
    assert report.r_squared == 1.0
    assert "perfect_fit" in report.flags
    assert (report.theil_um, report.theil_us, report.theil_uc) == (0.0, 0.0, 0.0)


def test_mape_skips_observed_zeros():
    report = metrics.basic_fit(pair([1, 2, 3], [0, 2, 4]))
    assert report.mape_skipped == 1
    assert any(f.startswith("mape_skipped_1") for f in report.flags)
    # mean of |0/2|, |1/4| over the two nonzero points
    assert abs(report.mape - 12.5) < 1e-12


def test_mape_all_zero_observed_raises():
    with pytest.raises(AllZeroObservedError):
        metrics.basic_fit(pair([1, 2], [0, 0]))


def test_rmse_scale_behaviour():
    base = metrics.basic_fit(pair([1, 2, 4], [1, 2, 3]))
    scaled = metrics.basic_fit(pair([10, 20, 40], [10, 20, 30]))
    assert abs(scaled.rmse - 10.0 * base.rmse) < 1e-12
    # shifting both series leaves rmse and the decomposition untouched
    shifted = metrics.basic_fit(pair([101, 102, 104], [101, 102, 103]))
    assert abs(shifted.rmse - base.rmse) < 1e-12
    assert abs(shifted.theil_um - base.theil_um) < 1e-12


def test_series_pair_validation():
    with pytest.raises(LengthMismatchError):
        metrics.SeriesPair(times=[0, 1], simulated=[1, 2, 3], observed=[1, 2])
    with pytest.raises(LengthMismatchError):
        metrics.SeriesPair(times=[0.0], simulated=[1.0], observed=[1.0])
    with pytest.raises(LengthMismatchError):
        metrics.SeriesPair(times=[0, 0], simulated=[1, 2], observed=[1, 2])


def test_align_interpolates_at_observation_times():
    traj = engine.Trajectory(grid=np.array([0.0, 2.0]),
                             x=np.array([[0.0], [4.0]]), y=np.zeros((2, 0)))
    obs = measurement.ObservationMatrix(values=np.array([[1.0, 3.0]]),
                                        times=np.array([0.5, 1.5]))
    p = metrics.align(traj, obs, indicator=0, latent=("x", 0))
    np.testing.assert_allclose(p.simulated, [1.0, 3.0])
    np.testing.assert_allclose(p.observed, [1.0, 3.0])
    assert metrics.basic_fit(p).mse == 0.0


def test_align_rejects_out_of_span_times():
    traj = engine.Trajectory(grid=np.array([0.0, 1.0]),
                             x=np.array([[0.0], [1.0]]), y=np.zeros((2, 0)))
    obs = measurement.ObservationMatrix(values=np.array([[1.0, 2.0]]),
                                        times=np.array([0.5, 1.5]))
    with pytest.raises(OutOfSpanError):
        metrics.align(traj, obs, indicator=0, latent=("x", 0))


def test_fit_report_serialization(tmp_path):
    report = metrics.basic_fit(pair([2, 4, 6], [1, 2, 3]))
    text = report.to_text()
    assert "r2=-6.0" in text
    out = tmp_path / "fit.csv"
    report.to_csv(out)
    header, row = out.read_text().strip().splitlines()
    assert header.split(",")[:4] == ["mse", "rmse", "r2", "mape"]
    assert float(row.split(",")[2]) == -6.0
