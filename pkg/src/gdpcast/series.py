"""Quarterly time-series container and the transformations shared by all models."""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError, InputError

_DATE_RE = re.compile(r"^(\d{4})-Q(\d+)$")


@dataclass(frozen=True)
class TimeSeries:
    """Regularly spaced series with an integer calendar.

    Element ``i`` falls in year ``year + (period - 1 + i) // m`` and period
    ``(period - 1 + i) % m + 1``.

    Parameters
    ----------
    values : array-like
        Finite observations, at least one.
    origin : tuple of int
        ``(year, period)`` of the first observation, ``1 <= period <= m``.
    m : int
        Number of periods per year (4 for quarterly data).
    """

    values: np.ndarray
    origin: tuple[int, int] = (2000, 1)
    m: int = 4

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size < 1:
            raise InputError("TimeSeries needs at least one value")
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise InputError(f"non-finite value at index {int(bad[0])}")
        if int(self.m) < 1:
            raise InputError("period length m must be positive")
        year, period = (int(v) for v in self.origin)
        if not 1 <= period <= int(self.m):
            raise InputError(f"origin period {period} outside 1..{self.m}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", (year, period))
        object.__setattr__(self, "m", int(self.m))

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def calendar(self, i: int) -> tuple[int, int]:
        """Return ``(year, period)`` of element ``i`` (may be negative or past the end)."""
        k = self.origin[1] - 1 + int(i)
        return self.origin[0] + k // self.m, k % self.m + 1

    def index_of(self, year: int, period: int) -> int:
        """Inverse of :meth:`calendar`."""
        return (year - self.origin[0]) * self.m + (period - self.origin[1])

    @property
    def end(self) -> tuple[int, int]:
        return self.calendar(len(self) - 1)

    def labels(self) -> list[str]:
        return [format_period(*self.calendar(i), self.m) for i in range(len(self))]

    def with_values(self, values, offset: int = 0) -> "TimeSeries":
        """New series on the same calendar, starting ``offset`` steps after this origin."""
        return TimeSeries(values, self.calendar(offset), self.m)

    def window(self, start: Optional[tuple[int, int]] = None,
               end: Optional[tuple[int, int]] = None) -> "TimeSeries":
        """Inclusive calendar slice."""
        i0 = 0 if start is None else self.index_of(*start)
        i1 = len(self) - 1 if end is None else self.index_of(*end)
        if i0 < 0 or i1 >= len(self) or i1 < i0:
            raise InputError(f"window {start}..{end} outside series range")
        return self.with_values(self.values[i0:i1 + 1], i0)


def format_period(year: int, period: int, m: int = 4) -> str:
    return f"{year}-Q{period}" if m == 4 else f"{year}-P{period}"


def parse_period(text: str, m: int = 4) -> tuple[int, int]:
    """Parse ``YYYY-Qn`` into ``(year, n)``."""
    match = _DATE_RE.match(text.strip())
    if not match:
        raise InputError(f"bad date {text!r}, expected YYYY-Qn")
    year, period = int(match.group(1)), int(match.group(2))
    if not 1 <= period <= m:
        raise InputError(f"bad date {text!r}: period outside 1..{m}")
    return year, period


def read_csv(source, m: int = 4) -> TimeSeries:
    """Read a ``date,value`` CSV with ``YYYY-Qn`` dates.

    Gaps, duplicates and out-of-order dates are rejected.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["date", "value"]:
        raise InputError("CSV header must be 'date,value'")
    if len(rows) < 2:
        raise InputError("CSV has no data rows")
    dates, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise InputError(f"line {lineno}: expected 2 fields, got {len(row)}")
        dates.append(parse_period(row[0], m))
        try:
            values.append(float(row[1]))
        except ValueError:
            raise InputError(f"line {lineno}: bad value {row[1]!r}") from None
    y0, p0 = dates[0]
    for i, d in enumerate(dates):
        k = p0 - 1 + i
        expected = (y0 + k // m, k % m + 1)
        if d != expected:
            what = "duplicate" if d in dates[:i] else "gap or out-of-order"
            raise InputError(f"{what} date {format_period(*d, m)}, expected "
                             f"{format_period(*expected, m)}")
    return TimeSeries(values, dates[0], m)


def write_csv(s: TimeSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("date,value\n")
        for label, v in zip(s.labels(), s.values):
            fh.write(f"{label},{float(v)!r}\n")


@dataclass(frozen=True)
class GdpComponents:
    """National-accounts aggregates; ``None`` marks a component that is not available."""

    C: Optional[float] = None
    I: Optional[float] = None
    G: Optional[float] = None
    NE: Optional[float] = None
    GVA: Optional[float] = None
    IC: Optional[float] = None
    T: Optional[float] = None
    Sub: Optional[float] = None
    W: Optional[float] = None
    GOS: Optional[float] = None

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if v is not None and not np.isfinite(v):
                raise InputError(f"component {name} is not finite")
        if self.T is not None and self.T < 0:
            raise InputError("taxes T must be non-negative")
        if self.Sub is not None and self.Sub < 0:
            raise InputError("subsidies Sub must be non-negative")


_APPROACH_FIELDS = {
    "production": ("GVA", "IC", "T", "Sub"),
    "income": ("W", "GOS", "T", "Sub"),
    "expenditure": ("C", "I", "G", "NE"),
}


def gdp_identity(components: GdpComponents, approach: str) -> float:
    """GDP under the production, income or expenditure accounting identity."""
    try:
        needed = _APPROACH_FIELDS[approach]
    except KeyError:
        raise InputError(f"unknown approach {approach!r}") from None
    missing = [f for f in needed if getattr(components, f) is None]
    if missing:
        raise InputError(f"{approach} approach requires {', '.join(missing)}")
    c = components
    if approach == "production":
        return c.GVA - c.IC + (c.T - c.Sub)
    if approach == "income":
        return c.W + c.GOS + (c.T - c.Sub)
    return c.C + c.G + c.I + c.NE


def log_transform(s: TimeSeries) -> TimeSeries:
    bad = np.flatnonzero(s.values <= 0)
    if bad.size:
        raise DomainError(f"log_transform: non-positive value at index {int(bad[0])}")
    return TimeSeries(np.log(s.values), s.origin, s.m)


def exp_transform(s: TimeSeries) -> TimeSeries:
    return TimeSeries(np.exp(s.values), s.origin, s.m)


def differencing_polynomial(d: int, D: int, lag: int) -> np.ndarray:
    """Coefficients of ``(1 - B)^d (1 - B^lag)^D``, constant term first."""
    poly = np.array([1.0])
    for _ in range(d):
        poly = np.convolve(poly, [1.0, -1.0])
    seasonal = np.zeros(lag + 1)
    seasonal[0], seasonal[lag] = 1.0, -1.0
    for _ in range(D):
        poly = np.convolve(poly, seasonal)
    return poly


def difference(s: TimeSeries, d: int = 1, D: int = 0, lag: int = 4) -> TimeSeries:
    """Apply ``d`` regular then ``D`` seasonal differences at ``lag``.

    The result is ``d + D * lag`` shorter and its origin moves forward by the
    same amount.
    """
    if d < 0 or D < 0 or lag < 1:
        raise InputError("difference needs d >= 0, D >= 0, lag >= 1")
    k = d + D * lag
    if len(s) <= k:
        raise InputError(f"series of length {len(s)} too short for d={d}, D={D}, lag={lag}")
    x = s.values.copy()
    for _ in range(d):
        x = x[1:] - x[:-1]
    for _ in range(D):
        x = x[lag:] - x[:-lag]
    return s.with_values(x, k)


def integrate(w: TimeSeries, initial: Sequence[float], d: int = 1, D: int = 0,
              lag: int = 4) -> TimeSeries:
    """Undo :func:`difference` given the first ``d + D * lag`` original values."""
    delta = differencing_polynomial(d, D, lag)
    k = delta.size - 1
    initial = np.asarray(initial, dtype=float)
    if initial.size != k:
        raise InputError(f"integrate needs {k} initial values, got {initial.size}")
    y = np.empty(k + len(w))
    y[:k] = initial
    for t in range(len(w)):
        acc = w.values[t]
        for j in range(1, k + 1):
            acc -= delta[j] * y[k + t - j]
        y[k + t] = acc
    return w.with_values(y, -k)


def acf(s, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags ``0..max_lag`` with the divisor-n estimator."""
    x = np.asarray(s, dtype=float)
    n = x.size
    if not 0 <= max_lag < n:
        raise InputError(f"max_lag must lie in [0, {n - 1}]")
    xc = x - x.mean()
    c0 = xc @ xc / n
    if c0 <= 1e-300 or c0 <= (1e-14 * np.max(np.abs(x))) ** 2:
        raise DomainError("series has zero variance; autocorrelation undefined")
    gamma = np.array([xc[k:] @ xc[:n - k] for k in range(max_lag + 1)]) / n
    return gamma / gamma[0]


def pacf_from_acf(rho: np.ndarray) -> np.ndarray:
    """Partial autocorrelations by the Durbin-Levinson recursion."""
    rho = np.asarray(rho, dtype=float)
    K = rho.size - 1
    out = np.empty(K + 1)
    out[0] = 1.0
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, K + 1):
        num = rho[k] - phi @ rho[k - 1:0:-1] if k > 1 else rho[1]
        a = num / v
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1.0 - a * a
        out[k] = a
    return out


def pacf(s, max_lag: int) -> np.ndarray:
    return pacf_from_acf(acf(s, max_lag))
