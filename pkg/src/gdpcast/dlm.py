"""Univariate dynamic linear models with Gibbs-sampled variances.

The observation equation is ``y_t = F theta_t + v_t`` with ``v_t ~ N(0, V)``
and the state evolves as ``theta_t = G theta_{t-1} + w_t`` with
``w_t ~ N(0, W)``; ``theta_0 ~ N(m0, C0)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .errors import InputError, NumericalError
from .metrics import ForecastResult
from .series import TimeSeries

PARAM_NAMES = ("sigma2", "sigma2_mu", "sigma2_beta", "sigma2_gamma")

TREND_SEASONAL_F = np.array([1.0, 0.0, 1.0, 0.0, 0.0])
TREND_SEASONAL_G = np.array([
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, -1.0, -1.0],
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0, 0.0],
])


def _frozen(x, ndim):
    arr = np.array(x, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DlmSpec:
    """Constant-coefficient DLM with scalar observations.

    Parameters
    ----------
    F : (p,) array
        Observation row.
    G : (p, p) array
        Evolution matrix.
    V : float
        Observational variance.
    W : (p, p) array
        Evolution covariance, symmetric PSD.
    m0, C0 : array
        Prior mean and covariance of theta_0.
    """

    F: np.ndarray
    G: np.ndarray
    V: float
    W: np.ndarray
    m0: np.ndarray
    C0: np.ndarray

    def __post_init__(self):
        F = _frozen(self.F, 1).ravel()
        p = F.size
        G, W, C0 = (_frozen(getattr(self, k), 2) for k in ("G", "W", "C0"))
        m0 = _frozen(self.m0, 1).ravel()
        for name, mat in (("G", G), ("W", W), ("C0", C0)):
            if mat.shape != (p, p):
                raise InputError(f"{name} has shape {mat.shape}, expected {(p, p)}")
        if m0.size != p:
            raise InputError(f"m0 has length {m0.size}, expected {p}")
        V = float(self.V)
        if not V >= 0:
            raise InputError("observational variance V must be non-negative")
        for name, mat in (("W", W), ("C0", C0)):
            if not np.allclose(mat, mat.T, atol=1e-10, rtol=0):
                raise InputError(f"{name} is not symmetric")
            if np.linalg.eigvalsh(mat).min() < -1e-10 * max(1.0, np.abs(mat).max()):
                raise InputError(f"{name} is not positive semidefinite")
        for k, v in (("F", F), ("G", G), ("V", V), ("W", W), ("m0", m0), ("C0", C0)):
            object.__setattr__(self, k, v)

    @property
    def p(self) -> int:
        return self.F.size

    def with_variances(self, V: float, W_diag) -> "DlmSpec":
        return replace(self, V=V, W=np.diag(np.asarray(W_diag, dtype=float)))


@dataclass(frozen=True)
class FilterResult:
    """Kalman filter output; row ``t`` holds time ``t + 1`` quantities."""

    a: np.ndarray
    R: np.ndarray
    f: np.ndarray
    Q: np.ndarray
    m: np.ndarray
    C: np.ndarray
    loglik: float
    y: np.ndarray = field(repr=False)
    SC: Optional[np.ndarray] = field(default=None, repr=False)  # C_t = SC_t SC_t'

    @property
    def innovations(self) -> np.ndarray:
        return self.y - self.f


@dataclass(frozen=True)
class SmootherResult:
    """Smoothed moments; row 0 is theta_0, row ``t`` is theta_t."""

    s: np.ndarray
    S: np.ndarray


def build_trend_seasonal(m0, C0, V: float, W_diag) -> DlmSpec:
    """Local linear trend plus sum-to-zero quarterly seasonal.

    The state is (level, slope, gamma_t, gamma_{t-1}, gamma_{t-2}) and only
    the first three components receive evolution noise.
    """
    W_diag = np.asarray(W_diag, dtype=float).ravel()
    if W_diag.size != 5:
        raise InputError("W_diag must have 5 entries")
    if np.any(W_diag[3:] != 0.0):
        raise InputError("the lagged seasonal slots of W_diag must be zero")
    if np.any(W_diag < 0):
        raise InputError("evolution variances must be non-negative")
    return DlmSpec(TREND_SEASONAL_F, TREND_SEASONAL_G, V, np.diag(W_diag), m0, C0)


def default_initial(y) -> tuple[np.ndarray, np.ndarray]:
    """Diffuse-but-proper prior: level at the first observation, variance 1e7."""
    y = np.asarray(y, dtype=float)
    m0 = np.array([y[0], 0.0, 0.0, 0.0, 0.0])
    return m0, np.eye(5) * 1e7


def _as_array(y) -> np.ndarray:
    y = np.ascontiguousarray(np.asarray(y, dtype=float))
    if y.ndim != 1 or y.size < 1:
        raise InputError("observations must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(y)):
        raise InputError("observations must be finite")
    return y


def _args(spec: DlmSpec):
    return (np.ascontiguousarray(spec.F), np.ascontiguousarray(spec.G),
            np.ascontiguousarray(spec.W), float(spec.V),
            np.ascontiguousarray(spec.m0), np.ascontiguousarray(spec.C0))


def kalman_filter(spec: DlmSpec, y) -> FilterResult:
    y = _as_array(y)
    F, G, W, V, m0, C0 = _args(spec)
    a, SR, f, Q, m, SC, ll, bad = _kernels.sqrt_filter(y, F, G, _kernels.psd_sqrt(W), V, m0,
                                                       _kernels.psd_sqrt(C0))
    if bad >= 0:
        raise NumericalError(f"kalman_filter: forecast variance Q_t <= 1e-300 at t={bad + 1}")
    R = SR @ SR.transpose(0, 2, 1)
    C = SC @ SC.transpose(0, 2, 1)
    return FilterResult(a, R, f, Q, m, C, float(ll), y, SC)


def _roots(spec: DlmSpec, filt: FilterResult):
    SC = filt.SC
    if SC is None:
        SC = np.array([_kernels.psd_sqrt(c) for c in filt.C])
    return (np.ascontiguousarray(spec.G), _kernels.psd_sqrt(np.ascontiguousarray(spec.W)),
            filt.a, filt.m, np.ascontiguousarray(SC), np.ascontiguousarray(spec.m0),
            _kernels.psd_sqrt(np.ascontiguousarray(spec.C0)))


def kalman_smoother(spec: DlmSpec, filt: FilterResult) -> SmootherResult:
    s, S = _kernels.rts_smoother(*_roots(spec, filt))
    return SmootherResult(s, S)


def _ffbs(spec: DlmSpec, filt: FilterResult, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((filt.f.size + 1, spec.p))
    return _kernels.backward_sample(*_roots(spec, filt), z)


def ffbs(spec: DlmSpec, y, rng_seed) -> np.ndarray:
    """Forward-filtering backward-sampling draw of theta_0..theta_n, shape ``(n + 1, p)``."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return _ffbs(spec, kalman_filter(spec, y), rng)


def sample_inverse_gamma(shape: float, rate: float, rng: np.random.Generator, size=None):
    """Inverse-gamma draw with density proportional to ``x**(-shape-1) * exp(-rate/x)``."""
    if not (shape > 0 and rate > 0):
        raise InputError(f"inverse gamma needs shape > 0 and rate > 0, got {shape}, {rate}")
    return rate / rng.gamma(shape, 1.0, size=size)


@dataclass(frozen=True)
class VariancePriors:
    """Hyperparameters ``(a, b)`` for (sigma2, sigma2_mu, sigma2_beta, sigma2_gamma).

    ``a`` and ``b`` are the prior mean and variance of each *precision*
    ``1 / sigma2``, which is gamma distributed with shape ``a**2 / b`` and
    rate ``a / b``. The full conditional of each variance is then inverse
    gamma with ``shape = a**2 / b + n / 2`` and ``rate = a / b + SS / 2``.
    """

    a: tuple = (1.0, 1.0, 1.0, 1.0)
    b: tuple = (10.0, 10.0, 10.0, 10.0)

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        if len(a) != 4 or len(b) != 4:
            raise InputError("VariancePriors needs four means and four variances")
        if min(a) <= 0 or min(b) <= 0:
            raise InputError("prior means and variances must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def shape(self, n: int) -> np.ndarray:
        a, b = np.array(self.a), np.array(self.b)
        return a * a / b + n / 2.0

    def rate(self, ss) -> np.ndarray:
        a, b = np.array(self.a), np.array(self.b)
        return a / b + 0.5 * np.asarray(ss, dtype=float)


def default_priors(y, b_factor: float = 1000.0) -> VariancePriors:
    """Vague priors scaled to the data.

    Every precision gets prior mean ``1 / var(diff(y))`` and variance
    ``b_factor`` times its squared mean, i.e. ``2 / b_factor`` pseudo
    observations of a variance equal to ``var(diff(y))``.
    """
    y = np.asarray(y, dtype=float)
    scale = float(np.var(np.diff(y), ddof=1))
    if not scale > 0:
        raise InputError("default_priors: differenced series has zero variance")
    a = (1.0 / scale,) * 4
    return VariancePriors(a, tuple(b_factor * v * v for v in a))


@dataclass(frozen=True)
class GibbsChain:
    """All Gibbs draws, including burn-in; columns follow ``PARAM_NAMES``."""

    draws: np.ndarray
    n_iter: int
    burn_in: int
    seed: int

    @property
    def retained(self) -> np.ndarray:
        return self.draws[self.burn_in:]

    def posterior_mean(self) -> np.ndarray:
        return self.retained.mean(axis=0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("iter," + ",".join(PARAM_NAMES) + "\n")
            for i, row in enumerate(self.retained, start=self.burn_in + 1):
                fh.write(f"{i}," + ",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path, seed: int = 0) -> "GibbsChain":
        """Load exported draws as a chain with no burn-in left to discard."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] == 0:
            raise InputError(f"{path}: empty chain")
        return cls(data[:, 1:], data.shape[0], 0, seed)


def sum_squares(spec: DlmSpec, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Observation and first-three-component evolution sums of squares of a state path."""
    ss_y = np.sum((y - theta[1:] @ spec.F) ** 2)
    resid = theta[1:] - theta[:-1] @ spec.G.T
    ss_state = np.sum(resid[:, :3] ** 2, axis=0)
    return np.concatenate([[ss_y], ss_state])


def gibbs(y, priors: Optional[VariancePriors] = None, n_iter: int = 5000,
          burn_in: int = 1000, seed: int = 0, m0=None, C0=None) -> GibbsChain:
    """Gibbs sampler for the four variances of the trend-plus-seasonal DLM.

    Each sweep draws a state path by FFBS given the current variances, then
    draws every variance from its inverse-gamma full conditional. The chain
    starts at the variances ``1 / a`` implied by the prior precision means.
    """
    y = _as_array(y)
    n = y.size
    if n < 8:
        raise InputError(f"gibbs needs at least 8 observations, got {n}")
    if not n_iter > burn_in >= 0:
        raise InputError("gibbs needs n_iter > burn_in >= 0")
    priors = default_priors(y) if priors is None else priors
    d_m0, d_C0 = default_initial(y)
    m0 = d_m0 if m0 is None else m0
    C0 = d_C0 if C0 is None else C0
    template = build_trend_seasonal(m0, C0, 1.0, np.zeros(5))
    F, G, _, _, m0a, C0a = _args(template)
    SC0 = _kernels.psd_sqrt(C0a)

    rng = np.random.default_rng(seed)
    shape = priors.shape(n)
    current = 1.0 / np.array(priors.a)
    draws = np.empty((n_iter, 4))
    Wh = np.zeros((5, 5))
    for it in range(n_iter):
        Wh[0, 0], Wh[1, 1], Wh[2, 2] = np.sqrt(current[1:])
        a, SR, f, Q, m, SC, ll, bad = _kernels.sqrt_filter(y, F, G, Wh, current[0], m0a, SC0)
        if bad >= 0:
            raise NumericalError(f"gibbs: degenerate forecast variance at iteration {it + 1}")
        z = rng.standard_normal((n + 1, 5))
        theta = _kernels.backward_sample(G, Wh, a, m, SC, m0a, SC0, z)
        ss = sum_squares(template, y, theta)
        if not np.all(np.isfinite(ss)):
            raise NumericalError(f"gibbs: non-finite sum of squares at iteration {it + 1}")
        rate = priors.rate(ss)
        current = rate / rng.gamma(shape)
        draws[it] = current
    return GibbsChain(draws, n_iter, burn_in, seed)


def ergodic_means(chain: GibbsChain) -> np.ndarray:
    """Running means of the retained draws, one column per variance."""
    kept = chain.retained
    if kept.shape[0] == 0:
        raise InputError("chain has no retained draws")
    return np.cumsum(kept, axis=0) / np.arange(1, kept.shape[0] + 1)[:, None]


def thin_indices(k: int, max_draws: int = 500) -> np.ndarray:
    if k <= max_draws:
        return np.arange(k)
    return np.unique(np.round(np.linspace(0, k - 1, max_draws)).astype(int))


def predictive_moments(spec: DlmSpec, filt: FilterResult, h: int):
    """h-step forecast means and variances from the end of the filter."""
    a = filt.m[-1]
    R = filt.C[-1]
    f, Q = np.empty(h), np.empty(h)
    for k in range(h):
        a = spec.G @ a
        R = spec.G @ R @ spec.G.T + spec.W
        f[k] = spec.F @ a
        Q[k] = spec.F @ R @ spec.F + spec.V
    return f, np.maximum(Q, 0.0)


def dlm_forecast(template: DlmSpec, chain: GibbsChain, y, h: int, level: float = 0.95,
                 max_draws: int = 500, samples_per_draw: int = 2000,
                 sample_budget: int = 1_000_000, label: str = "DLM") -> ForecastResult:
    """Posterior predictive forecast averaged over (thinned) Gibbs draws.

    The predictive distribution is a Gaussian mixture, one component per
    retained draw. Its mean is exact; interval bounds are Monte Carlo
    quantiles.
    """
    if h < 1:
        raise InputError("forecast horizon must be >= 1")
    kept = chain.retained
    if kept.shape[0] == 0:
        raise InputError("dlm_forecast: chain has no retained draws")
    idx = thin_indices(kept.shape[0], max_draws)
    y_arr = _as_array(y)
    means = np.empty((idx.size, h))
    vars_ = np.empty((idx.size, h))
    for j, i in enumerate(idx):
        v, wm, wb, wg = kept[i]
        spec = template.with_variances(v, [wm, wb, wg, 0.0, 0.0])
        filt = kalman_filter(spec, y_arr)
        means[j], vars_[j] = predictive_moments(spec, filt, h)
    per = max(1, min(samples_per_draw, sample_budget // idx.size))
    rng = np.random.default_rng(chain.seed)
    z = rng.standard_normal((idx.size, per, h))
    draws = (means[:, None, :] + np.sqrt(vars_)[:, None, :] * z).reshape(-1, h)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [tail, 1.0 - tail], axis=0)
    point = means.mean(axis=0)
    lo = np.minimum(lo, point)
    hi = np.maximum(hi, point)
    return ForecastResult.from_arrays(point, lo, hi, y if isinstance(y, TimeSeries) else None,
                                      level, label)


def smoothed_fit(template: DlmSpec, variances, y) -> tuple[np.ndarray, SmootherResult]:
    """Smoothed observation means ``F s_t`` under fixed variances."""
    v = np.asarray(variances, dtype=float)
    spec = template.with_variances(v[0], [v[1], v[2], v[3], 0.0, 0.0])
    sm = kalman_smoother(spec, kalman_filter(spec, y))
    return sm.s[1:] @ spec.F, sm
