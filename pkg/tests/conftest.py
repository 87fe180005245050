import numpy as np
import pytest

from gdpcast.dlm import TREND_SEASONAL_G


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def simulate_trend_seasonal(n, variances, seed, theta0=(10.0, 0.5, 1.0, -0.5, 0.0)):
    """Draw observations from the trend-plus-seasonal DLM with the given variances."""
    rng = np.random.default_rng(seed)
    v, wm, wb, wg = variances
    theta = np.array(theta0, dtype=float)
    y = np.empty(n)
    for t in range(n):
        theta = TREND_SEASONAL_G @ theta
        theta[:3] += rng.normal(0.0, np.sqrt([wm, wb, wg]))
        y[t] = theta[0] + theta[2] + rng.normal(0.0, np.sqrt(v))
    return y


def simulate_sarima_011_011(n, theta, Theta, seed, s=4, burn=200):
    """Airline-model sample path: (1-B)(1-B^s) y_t = (1 + theta B)(1 + Theta B^s) e_t."""
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + burn + s + 1)
    w = e.copy()
    w[1:] += theta * e[:-1]
    w[s:] += Theta * e[:-s]
    w[s + 1:] += theta * Theta * e[:-s - 1]
    w = w[burn + s + 1:]
    y = np.zeros(n + s + 1)
    for t in range(s + 1, n + s + 1):
        y[t] = w[t - s - 1] + y[t - 1] + y[t - s] - y[t - s - 1]
    return y[s + 1:] + 100.0
