"""Unit-root and residual-whiteness tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import stats

from .errors import InputError, NumericalError
from .series import acf

LEVELS = (0.01, 0.05, 0.10)


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test.

    ``reject_at`` maps each significance level in ``LEVELS`` to whether the
    null is rejected at that level.
    """

    __test__ = False  # not a pytest class

    statistic: float
    p_value: float
    lags_used: int
    reject_at: dict = field(default_factory=dict)
    critical_values: dict = field(default_factory=dict)


@lru_cache(maxsize=None)
def _pp_table():
    text = resources.files("gdpcast").joinpath("data/pp_critical_values.csv").read_text()
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    levels = np.array([float(v) for v in rows[0].split(",")[1:]])
    body = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
    return levels, body[:, 0], body[:, 1:]


def pp_critical_values(n: int) -> dict:
    """Critical values of the coefficient statistic, linearly interpolated in ``n``."""
    levels, sizes, table = _pp_table()
    cv = [np.interp(n, sizes, table[:, j]) for j in range(levels.size)]
    return dict(zip(levels.tolist(), cv))


def newey_west_lag(n: int) -> int:
    return int(np.floor(4.0 * (n / 100.0) ** 0.25))


def long_run_variance(u: np.ndarray, lags: int) -> float:
    """Bartlett-kernel (Newey-West) long-run variance of ``u``, which is not demeaned."""
    n = u.size
    lrv = u @ u / n
    for j in range(1, lags + 1):
        lrv += 2.0 * (1.0 - j / (lags + 1.0)) * (u[j:] @ u[:-j]) / n
    return float(lrv)


def phillips_perron(s) -> TestResult:
    """Phillips-Perron Z-alpha unit-root test on the constant-only regression.

    The null is a unit root. The p-value is read off the Dickey-Fuller
    coefficient table and clamped to [0.01, 0.10] outside it.
    """
    x = np.asarray(s, dtype=float)
    if x.size < 20:
        raise InputError(f"phillips_perron needs at least 20 observations, got {x.size}")
    y, ylag = x[1:], x[:-1]
    n = y.size
    X = np.column_stack([np.ones(n), ylag])
    XtX_inv = np.linalg.inv(X.T @ X)
    beta = XtX_inv @ (X.T @ y)
    u = y - X @ beta
    s2 = u @ u / (n - 2)
    if not s2 > 0:
        raise NumericalError("phillips_perron: zero residual variance in the test regression")
    se2_rho = s2 * XtX_inv[1, 1]
    gamma0 = u @ u / n
    lags = newey_west_lag(n)
    lam2 = long_run_variance(u, lags)
    z_alpha = n * (beta[1] - 1.0) - 0.5 * (n * n * se2_rho / s2) * (lam2 - gamma0)

    cv = pp_critical_values(n)
    levels = np.array(sorted(cv))
    crit = np.array([cv[a] for a in levels])
    if z_alpha <= crit[0]:
        p = float(levels[0])
    elif z_alpha >= crit[-1]:
        p = float(levels[-1])
    else:
        p = float(np.interp(z_alpha, crit, levels))
    reject = {a: bool(z_alpha < cv[a]) for a in LEVELS}
    return TestResult(float(z_alpha), p, lags, reject, cv)


def ljung_box(residuals, lags: int, fitted_params: int = 0) -> TestResult:
    """Ljung-Box portmanteau test with ``lags - fitted_params`` degrees of freedom."""
    e = np.asarray(residuals, dtype=float)
    n = e.size
    if lags <= fitted_params:
        raise InputError(f"ljung_box: lags ({lags}) must exceed fitted_params ({fitted_params})")
    if n <= lags:
        raise InputError(f"ljung_box: need more than {lags} residuals, got {n}")
    rho = acf(e, lags)[1:]
    k = np.arange(1, lags + 1)
    q = n * (n + 2.0) * np.sum(rho ** 2 / (n - k))
    p = float(stats.chi2.sf(q, lags - fitted_params))
    return TestResult(float(q), p, int(lags), {a: p < a for a in LEVELS})
