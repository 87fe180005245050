"""Additive and multiplicative Holt-Winters exponential smoothing."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .errors import DomainError, InputError
from .metrics import ForecastResult
from .series import TimeSeries

METHODS = ("additive", "multiplicative")
GRID = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class HWParams:
    alpha: float
    beta: float
    gamma: float
    method: str = "additive"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown Holt-Winters method {self.method!r}")
        for k in ("alpha", "beta", "gamma"):
            v = float(getattr(self, k))
            if not 0.0 <= v <= 1.0:
                raise InputError(f"{k}={v} outside [0, 1]")
            object.__setattr__(self, k, v)


@dataclass(frozen=True)
class HWState:
    """Level, trend and the last ``m`` seasonal terms (oldest first)."""

    level: float
    trend: float
    seasonal: tuple

    def __post_init__(self):
        object.__setattr__(self, "seasonal", tuple(float(v) for v in self.seasonal))
        object.__setattr__(self, "level", float(self.level))
        object.__setattr__(self, "trend", float(self.trend))


@dataclass(frozen=True)
class HWFit:
    params: HWParams
    initial_state: HWState
    final_state: HWState
    fitted: TimeSeries
    residuals: np.ndarray
    sse: float
    sse_trace: tuple = field(default=(), repr=False)

    @property
    def n(self) -> int:
        return len(self.fitted)


def hw_initial_state(s: TimeSeries, method: str = "additive") -> HWState:
    """Seed the recursion from the first two seasonal cycles.

    The trend is the per-period change between the first two cycle means.
    Seasonal terms are the first-cycle deviations (additive) or ratios
    (multiplicative) from that trend line, normalised to sum to 0 or ``m``.
    The level is the first-cycle mean carried back to the period before the
    first observation, so a pure linear series is reproduced exactly.
    """
    m = s.m
    y = s.values
    if len(s) < 2 * m:
        raise InputError(f"need at least {2 * m} observations to initialise, got {len(s)}")
    if method not in METHODS:
        raise InputError(f"unknown Holt-Winters method {method!r}")
    mean1 = y[:m].mean()
    mean2 = y[m:2 * m].mean()
    trend = (mean2 - mean1) / m
    line = mean1 + trend * (np.arange(m) - (m - 1) / 2.0)
    if method == "additive":
        seas = y[:m] - line
        seas = seas - seas.mean()
    else:
        if np.any(line <= 0):
            raise DomainError("multiplicative initialisation needs a positive trend line")
        seas = y[:m] / line
        seas = seas * (m / seas.sum())
    level = mean1 - trend * (m + 1) / 2.0
    return HWState(level, trend, seas)


def _recursion(y, alpha, beta, gamma, level, trend, seasonal, multiplicative):
    m = len(seasonal)
    buf = list(seasonal)
    fitted = [0.0] * len(y)
    for t, obs in enumerate(y):
        k = t % m
        s_old = buf[k]
        base = level + trend
        if multiplicative:
            fitted[t] = base * s_old
            new_level = alpha * (obs / s_old) + (1.0 - alpha) * base
            buf[k] = gamma * (obs / base) + (1.0 - gamma) * s_old
        else:
            fitted[t] = base + s_old
            new_level = alpha * (obs - s_old) + (1.0 - alpha) * base
            buf[k] = gamma * (obs - base) + (1.0 - gamma) * s_old
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        level = new_level
    r = len(y) % m
    return fitted, level, trend, buf[r:] + buf[:r]


def hw_filter(s: TimeSeries, params: HWParams, init: HWState) -> HWFit:
    """Run the smoothing recursions; ``fitted[t]`` is the forecast of ``y[t]`` made at ``t - 1``."""
    if len(init.seasonal) != s.m:
        raise InputError(f"initial state has {len(init.seasonal)} seasonal terms, expected {s.m}")
    mult = params.method == "multiplicative"
    if mult and np.any(s.values <= 0):
        raise DomainError("multiplicative Holt-Winters needs strictly positive observations")
    fitted, level, trend, seas = _recursion(s.values.tolist(), params.alpha, params.beta,
                                            params.gamma, init.level, init.trend,
                                            init.seasonal, mult)
    fitted = np.array(fitted)
    resid = s.values - fitted
    sse = float(resid @ resid) if np.all(np.isfinite(resid)) else np.inf
    fitted_ts = TimeSeries(fitted, s.origin, s.m) if np.all(np.isfinite(fitted)) else None
    return HWFit(params, init, HWState(level, trend, seas), fitted_ts, resid, sse)


def _sse(y, x, init, mult):
    fitted, *_ = _recursion(y, x[0], x[1], x[2], init.level, init.trend, init.seasonal, mult)
    e = np.subtract(y, fitted)
    val = float(e @ e)
    return val if np.isfinite(val) else np.inf


def hw_optimize(s: TimeSeries, method: str = "additive") -> HWFit:
    """Minimise the one-step SSE over ``(alpha, beta, gamma)`` in the unit cube.

    The best point of a 3x3x3 grid seeds a bounded Nelder-Mead search, which
    is restarted from its own optimum until it stops improving. The returned
    fit is the best point ever evaluated.
    """
    if len(s) < 3 * s.m:
        raise InputError(f"hw_optimize needs at least {3 * s.m} observations, got {len(s)}")
    mult = method == "multiplicative"
    if mult and np.any(s.values <= 0):
        raise DomainError("multiplicative Holt-Winters needs strictly positive observations")
    init = hw_initial_state(s, method)
    y = s.values.tolist()

    best = [np.inf, None]
    trace = []

    def objective(x):
        x = np.clip(x, 0.0, 1.0)
        val = _sse(y, x, init, mult)
        if val < best[0]:
            best[0], best[1] = val, tuple(float(v) for v in x)
        trace.append(best[0])
        return val

    for point in itertools.product(GRID, repeat=3):
        objective(np.array(point))
    for _ in range(5):
        before = best[0]
        optimize.minimize(objective, np.array(best[1]), method="Nelder-Mead",
                          bounds=[(0.0, 1.0)] * 3,
                          options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000,
                                   "maxfev": 8000})
        if not best[0] < before * (1.0 - 1e-12):
            break
    fit = hw_filter(s, HWParams(*best[1], method=method), init)
    return HWFit(fit.params, fit.initial_state, fit.final_state, fit.fitted, fit.residuals,
                 fit.sse, tuple(trace))


def variance_multipliers(params: HWParams, h: int, m: int) -> np.ndarray:
    """``c_1..c_h`` of the additive Holt-Winters forecast-error variance."""
    a, b, g = params.alpha, params.beta, params.gamma
    c = np.ones(h)
    acc = 1.0
    for j in range(1, h):
        d = 1.0 if j % m == 0 else 0.0
        acc += (a * (1.0 + j * b) + d * g * (1.0 - a)) ** 2
        c[j] = acc
    return c


def hw_forecast(fit: HWFit, h: int, level: float = 0.95) -> ForecastResult:
    """h-step point forecasts with normal intervals ``z * sigma * sqrt(c_h)``.

    ``sigma**2 = sse / (n - 3)``. The additive variance multipliers are also
    used for the multiplicative method, as an approximation.
    """
    if h < 1:
        raise InputError("forecast horizon must be >= 1")
    m = fit.fitted.m
    if fit.n < 2 * m:
        raise InputError("fit must cover at least two seasonal cycles")
    st = fit.final_state
    steps = np.arange(1, h + 1)
    seas = np.array(st.seasonal)[(steps - 1) % m]
    if fit.params.method == "multiplicative":
        points = (st.level + steps * st.trend) * seas
    else:
        points = st.level + steps * st.trend + seas
    sigma = np.sqrt(fit.sse / (fit.n - 3))
    z = stats.norm.ppf(0.5 + level / 2.0)
    half = z * sigma * np.sqrt(variance_multipliers(fit.params, h, m))
    label = f"Holt-Winters {fit.params.method}"
    return ForecastResult.from_arrays(points, points - half, points + half, fit.fitted, level,
                                      label)
