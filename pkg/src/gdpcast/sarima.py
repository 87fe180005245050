"""Seasonal ARIMA models estimated by exact Gaussian maximum likelihood.

Polynomial conventions: ``phi(B) = 1 - phi_1 B - ...`` and
``theta(B) = 1 + theta_1 B + ...``, and likewise for the seasonal
``Phi(B^s)`` and ``Theta(B^s)``. Differencing is applied outside the state
space; the Kalman filter runs on the stationary ARMA part.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, stats

from . import _kernels
from .dlm import DlmSpec
from .errors import InputError, ModelError
from .metrics import ForecastResult
from .series import TimeSeries, difference, differencing_polynomial

log = logging.getLogger(__name__)

ROOT_MARGIN = 1e-6


@dataclass(frozen=True)
class SarimaOrder:
    p: int = 0
    d: int = 1
    q: int = 1
    P: int = 0
    D: int = 1
    Q: int = 1
    s: int = 4

    def __post_init__(self):
        for k in ("p", "d", "q", "P", "D", "Q"):
            if int(getattr(self, k)) < 0:
                raise InputError(f"order {k} must be non-negative")
        if self.s < 2:
            raise InputError("seasonal period s must be >= 2")
        if self.d + self.D > 2:
            raise InputError("d + D > 2 is not supported")

    @property
    def n_arma(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def n_diff(self) -> int:
        return self.d + self.D * self.s

    def __str__(self):
        return f"({self.p},{self.d},{self.q})x({self.P},{self.D},{self.Q})_{self.s}"


@dataclass(frozen=True)
class SarimaModel:
    order: SarimaOrder
    phi: tuple = ()
    theta: tuple = ()
    Phi: tuple = ()
    Theta: tuple = ()
    sigma2: float = 1.0
    loglik: float = float("nan")
    aic: float = float("nan")
    nobs: int = 0

    def __post_init__(self):
        o = self.order
        for name, size in (("phi", o.p), ("theta", o.q), ("Phi", o.P), ("Theta", o.Q)):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != size:
                raise InputError(f"{name} has {len(vals)} coefficients, order needs {size}")
            object.__setattr__(self, name, vals)
        if not self.sigma2 > 0:
            raise InputError("sigma2 must be positive")

    @property
    def params(self) -> np.ndarray:
        return np.array(self.phi + self.theta + self.Phi + self.Theta)

    @property
    def n_params(self) -> int:
        return self.order.n_arma + 1


def split_params(order: SarimaOrder, params):
    params = np.asarray(params, dtype=float)
    if params.size != order.n_arma:
        raise InputError(f"expected {order.n_arma} parameters, got {params.size}")
    cuts = np.cumsum([order.p, order.q, order.P, order.Q])
    return np.split(params, cuts[:-1])


def expand(order: SarimaOrder, phi=(), theta=(), Phi=(), Theta=()):
    """Multiply out the regular and seasonal polynomials.

    Returns ``(ar_full, ma_full)`` without the leading 1, such that the AR
    operator is ``1 - sum(ar_full[k-1] B^k)`` and the MA operator is
    ``1 + sum(ma_full[k-1] B^k)``.
    """
    s = order.s
    ar = np.r_[1.0, -np.asarray(phi, dtype=float)]
    sar = np.zeros(order.P * s + 1)
    sar[0] = 1.0
    sar[s::s] = -np.asarray(Phi, dtype=float)
    ma = np.r_[1.0, np.asarray(theta, dtype=float)]
    sma = np.zeros(order.Q * s + 1)
    sma[0] = 1.0
    sma[s::s] = np.asarray(Theta, dtype=float)
    return -np.convolve(ar, sar)[1:], np.convolve(ma, sma)[1:]


def _roots_ok(poly_tail, sign) -> bool:
    """True if ``1 + sign * sum(c_k z^k)`` has every root outside the unit circle."""
    c = np.trim_zeros(np.asarray(poly_tail, dtype=float), "b")
    if c.size == 0:
        return True
    roots = np.roots(np.r_[sign * c[::-1], 1.0])
    return bool(np.all(np.abs(roots) > 1.0 + ROOT_MARGIN))


def is_admissible(order: SarimaOrder, params) -> bool:
    ar, ma = expand(order, *split_params(order, params))
    return _roots_ok(ar, -1.0) and _roots_ok(ma, 1.0)


def to_state_space(model: SarimaModel, sigma2=None) -> DlmSpec:
    """Harvey companion form of the ARMA part of the differenced series."""
    sigma2 = model.sigma2 if sigma2 is None else sigma2
    ar, ma = expand(model.order, model.phi, model.theta, model.Phi, model.Theta)
    r = max(ar.size, ma.size + 1, 1)
    G = np.zeros((r, r))
    G[:ar.size, 0] = ar
    G[np.arange(r - 1), np.arange(1, r)] = 1.0
    loading = np.zeros(r)
    loading[0] = 1.0
    loading[1:ma.size + 1] = ma
    W = sigma2 * np.outer(loading, loading)
    if not _roots_ok(ar, -1.0):
        raise ModelError(f"SARIMA{model.order}: AR part is not stationary")
    try:
        C0 = linalg.solve_discrete_lyapunov(G, W)
    except (linalg.LinAlgError, ValueError) as exc:
        raise ModelError(f"SARIMA{model.order}: Lyapunov solve failed: {exc}") from exc
    C0 = 0.5 * (C0 + C0.T)
    if not np.all(np.isfinite(C0)):
        raise ModelError(f"SARIMA{model.order}: stationary covariance not finite")
    F = np.zeros(r)
    F[0] = 1.0
    return DlmSpec(F, G, 0.0, W, np.zeros(r), C0)


def _differenced(order: SarimaOrder, s) -> np.ndarray:
    if isinstance(s, TimeSeries):
        return difference(s, order.d, order.D, order.s).values
    x = np.asarray(s, dtype=float)
    return difference(TimeSeries(x), order.d, order.D, order.s).values


def _innovations(order, params, w):
    model = SarimaModel(order, *split_params(order, params))
    spec = to_state_space(model, 1.0)
    v, Q, bad = _kernels.innovations(w, spec.F, np.ascontiguousarray(spec.G),
                                     np.ascontiguousarray(spec.W), 0.0, spec.m0,
                                     np.ascontiguousarray(spec.C0))
    if bad >= 0:
        raise ModelError(f"SARIMA{order}: degenerate forecast variance at t={bad + 1}")
    return v, Q


def _concentrated(order, params, w):
    v, Q = _innovations(order, params, w)
    n = w.size
    sigma2 = float(np.mean(v * v / Q))
    ll = -0.5 * n * (np.log(2.0 * np.pi * sigma2) + 1.0) - 0.5 * np.sum(np.log(Q))
    return ll, sigma2


def loglik(order: SarimaOrder, params, s, sigma2=None) -> float:
    """Exact Gaussian log-likelihood of the differenced series.

    With ``sigma2=None`` the innovation variance is concentrated out.
    Inadmissible (non-stationary or non-invertible) parameters give ``-inf``.
    """
    w = _differenced(order, s)
    if w.size < order.n_arma + 3:
        raise InputError(f"differenced series too short ({w.size}) for {order.n_arma + 1} "
                         "parameters")
    params = np.asarray(params, dtype=float)
    try:
        if not np.all(np.isfinite(params)) or not is_admissible(order, params):
            return -np.inf
        if sigma2 is None:
            return float(_concentrated(order, params, w)[0])
        if not sigma2 > 0:
            return -np.inf
        v, Q = _innovations(order, params, w)
    except ModelError:
        return -np.inf
    q = sigma2 * Q
    return float(-0.5 * np.sum(np.log(2.0 * np.pi * q) + v * v / q))


def _pacf_to_coef(x):
    """Map unconstrained reals to the coefficients of a stationary AR polynomial."""
    r = x / np.sqrt(1.0 + x * x)
    phi = np.zeros(0)
    for k, rk in enumerate(r):
        phi = np.r_[phi - rk * phi[::-1], rk]
    return phi


def _coef_to_pacf(phi):
    phi = np.array(phi, dtype=float)
    r = np.zeros(phi.size)
    for k in range(phi.size - 1, -1, -1):
        rk = phi[k]
        r[k] = rk
        if k:
            phi = (phi[:k] + rk * phi[:k][::-1]) / (1.0 - rk * rk)
    return r / np.sqrt(1.0 - r * r)


def constrain(order: SarimaOrder, x) -> np.ndarray:
    """Unconstrained vector to stationary/invertible coefficients (MA blocks sign-flipped)."""
    blocks = split_params(order, x)
    signs = (1.0, -1.0, 1.0, -1.0)
    return np.concatenate([sgn * _pacf_to_coef(b) for sgn, b in zip(signs, blocks)])


def unconstrain(order: SarimaOrder, params) -> np.ndarray:
    blocks = split_params(order, params)
    signs = (1.0, -1.0, 1.0, -1.0)
    return np.concatenate([_coef_to_pacf(sgn * b) for sgn, b in zip(signs, blocks)])


def fit(order: SarimaOrder, s) -> SarimaModel:
    """Maximum-likelihood fit by Nelder-Mead, started from all-zero coefficients."""
    w = _differenced(order, s)
    k = order.n_arma
    if w.size < k + 3:
        raise InputError(f"differenced series too short ({w.size}) for {k + 1} parameters")

    def objective(x):
        params = constrain(order, x)
        if not is_admissible(order, params):
            return 1e300
        try:
            ll, _ = _concentrated(order, params, w)
        except ModelError:
            return 1e300
        return -ll if np.isfinite(ll) else 1e300

    x0 = np.zeros(k)
    if not objective(x0) < 1e300:
        raise ModelError(f"SARIMA{order}: non-finite objective at the starting point")
    if k:
        simplex = np.vstack([x0, x0 + 0.5 * np.eye(k)])
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"initial_simplex": simplex, "xatol": 1e-7,
                                         "fatol": 1e-9, "maxiter": 400 * k + 400})
        x = res.x
    else:
        x = x0
    params = constrain(order, x)
    ll, sigma2 = _concentrated(order, params, w)
    return SarimaModel(order, *split_params(order, params), sigma2=sigma2, loglik=float(ll),
                       aic=float(-2.0 * ll + 2.0 * (k + 1)), nobs=w.size)


class SarimaGrid(list):
    """Ranked models; ``failures`` maps each order that could not be fitted to its error."""

    def __init__(self, models=(), failures=None):
        super().__init__(models)
        self.failures = dict(failures or {})


def rank_key(model: SarimaModel):
    o = model.order
    return (model.aic, model.n_params, (o.p, o.q, o.P, o.Q))


def grid_search(s, d: int = 1, D: int = 1, s_period: int = 4) -> SarimaGrid:
    """Fit every (p, q, P, Q) in {0, 1}^4 and rank by AIC."""
    models, failures = [], {}
    for p, q, P, Q in itertools.product((0, 1), repeat=4):
        order = SarimaOrder(p, d, q, P, D, Q, s_period)
        try:
            models.append(fit(order, s))
        except (ModelError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.warning("SARIMA%s failed: %s", order, exc)
            failures[order] = str(exc)
    if not models:
        raise ModelError("grid_search: all 16 SARIMA fits failed")
    return SarimaGrid(sorted(models, key=rank_key), failures)


def psi_weights(model: SarimaModel, h: int) -> np.ndarray:
    """First ``h`` psi-weights of the integrated model, psi_0 = 1."""
    o = model.order
    ar, ma = expand(o, model.phi, model.theta, model.Phi, model.Theta)
    full_ar = np.convolve(np.r_[1.0, -ar], differencing_polynomial(o.d, o.D, o.s))
    theta = np.zeros(h)
    theta[0] = 1.0
    theta[1:min(h, ma.size + 1)] = ma[:h - 1]
    psi = np.zeros(h)
    for j in range(h):
        acc = theta[j]
        for i in range(1, min(j, full_ar.size - 1) + 1):
            acc -= full_ar[i] * psi[j - i]
        psi[j] = acc
    return psi


def residuals(model: SarimaModel, s) -> np.ndarray:
    """One-step prediction errors of the differenced series."""
    w = _differenced(model.order, s)
    v, _ = _innovations(model.order, model.params, w)
    return v


def standardized_residuals(model: SarimaModel, s) -> np.ndarray:
    w = _differenced(model.order, s)
    v, Q = _innovations(model.order, model.params, w)
    return v / np.sqrt(Q)


def fitted_values(model: SarimaModel, s: TimeSeries) -> TimeSeries:
    """One-step-ahead predictions of the original series, from the first predictable period."""
    o = model.order
    w = _differenced(o, s)
    v, _ = _innovations(o, model.params, w)
    k = o.n_diff
    return s.with_values(s.values[k:] - v, k)


def forecast(model: SarimaModel, s: TimeSeries, h: int, level: float = 0.95,
             label: str = "") -> ForecastResult:
    """h-step forecasts, integrated back to the level of ``s``.

    Interval variances are ``sigma2 * cumsum(psi**2)`` with the psi-weights
    of the full integrated polynomial.
    """
    if h < 1:
        raise InputError("forecast horizon must be >= 1")
    o = model.order
    w = _differenced(o, s)
    spec = to_state_space(model)
    F, G, W, V, m0, C0 = (np.ascontiguousarray(spec.F), np.ascontiguousarray(spec.G),
                          np.ascontiguousarray(spec.W), spec.V, np.ascontiguousarray(spec.m0),
                          np.ascontiguousarray(spec.C0))
    a, R, f, Q, m, C, ll, bad = _kernels.filter_full(w, F, G, W, V, m0, C0)
    if bad >= 0:
        raise ModelError(f"SARIMA{o}: degenerate forecast variance at t={bad + 1}")
    state = m[-1]
    w_hat = np.empty(h)
    for k in range(h):
        state = spec.G @ state
        w_hat[k] = spec.F @ state
    delta = differencing_polynomial(o.d, o.D, o.s)
    nd = delta.size - 1
    y = np.r_[s.values, np.zeros(h)]
    n = len(s)
    for k in range(h):
        acc = w_hat[k]
        for j in range(1, nd + 1):
            acc -= delta[j] * y[n + k - j]
        y[n + k] = acc
    points = y[n:]
    var = model.sigma2 * np.cumsum(psi_weights(model, h) ** 2)
    half = stats.norm.ppf(0.5 + level / 2.0) * np.sqrt(var)
    return ForecastResult.from_arrays(points, points - half, points + half, s, level,
                                      label or f"SARIMA{o}")
