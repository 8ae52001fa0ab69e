import numpy as np
import pytest

from sdsem import model


def make_spec(m=0, n=1, p=0, q=0, *, mode=model.SD_RESTRICTED,
              t_start=0.0, t_end=10.0, dt=0.01, obs_times=None,
              b1=None, gamma1=None, x0=None,
              b2=None, gamma2=None, b3=None, gamma3=None, b4=None,
              lambda_x=None, lambda_y=None, theta_x=None, theta_y=None,
              error_sd=None, disturbances=None, names=None):
    """Zero-filled spec of the given dimensions with selective overrides."""
    def arr(value, shape):
        return np.asarray(value, dtype=float) if value is not None else np.zeros(shape)

    if obs_times is None:
        obs_times = list(np.linspace(t_start, t_end, q)) if q else []
    return model.ModelSpec(
        dims=model.Dimensions(m=m, n=n, p=p, q=q),
        horizon=model.TimeHorizon(t_start=t_start, t_end=t_end, dt=dt,
                                  observation_times=list(obs_times)),
        dynamic=model.DynamicSpec(b1=arr(b1, (m, n)), gamma1=arr(gamma1, (m, n)),
                                  x0=arr(x0, (m,))),
        statics=model.StaticSpec(b2=arr(b2, (n, m)), gamma2=arr(gamma2, (n, m)),
                                 b3=arr(b3, (n, n)), gamma3=arr(gamma3, (n, n)),
                                 b4=list(b4 or [])),
        measurement=model.MeasurementSpec(
            lambda_x=arr(lambda_x, (p, m)), lambda_y=arr(lambda_y, (p, n)),
            theta_x=arr(theta_x, (p, m)), theta_y=arr(theta_y, (p, n)),
            error_sd=arr(error_sd, (p,))),
        disturbances=list(disturbances or []),
        mode=mode,
        names=dict(names or {}),
    )


@pytest.fixture
def two_stock_transfer():
    """Closed transfer: material flows from x1 to x2 at rate 0.1 x1."""
    return make_spec(
        m=2, n=1, t_end=50.0, dt=0.05,
        b1=[[-0.1], [0.1]], gamma1=[[1.0], [1.0]], x0=[1.0, 0.0],
        b2=[[1.0, 0.0]], gamma2=[[1.0, 0.0]],
    )


@pytest.fixture
def nonrecursive_pair():
    """Simultaneous pair y1 = 1 + 0.5 y2, y2 = 0.5 y1 -> (4/3, 2/3)."""
    return make_spec(
        n=2, mode=model.NONRECURSIVE,
        b3=[[1.0, 0.5], [0.5, 0.0]],
        gamma3=[[0.0, 1.0], [1.0, 0.0]],
    )
