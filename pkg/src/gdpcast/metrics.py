"""Forecast accuracy metrics, growth rates and model score cards."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InputError
from .series import TimeSeries

log = logging.getLogger(__name__)

METRICS = ("rmse", "mae", "mape", "u1", "u2")


@dataclass(frozen=True)
class ForecastResult:
    """Point forecasts with an equal-tailed interval on a shared calendar."""

    points: TimeSeries
    lower: TimeSeries
    upper: TimeSeries
    level: float
    model_label: str

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise InputError("interval level must lie in (0, 1)")
        for other in (self.lower, self.upper):
            if (len(other), other.origin, other.m) != (len(self.points), self.points.origin,
                                                      self.points.m):
                raise InputError("forecast bounds must share the points' calendar")
        p, lo, hi = self.points.values, self.lower.values, self.upper.values
        tol = 1e-12 * np.maximum(1.0, np.abs(p))
        if np.any(lo > p + tol) or np.any(hi < p - tol):
            raise InputError("forecast interval does not contain the point forecast")

    @classmethod
    def from_arrays(cls, points, lower, upper, history: Optional[TimeSeries], level: float,
                    label: str) -> "ForecastResult":
        """Place arrays on the calendar immediately following ``history``."""
        if history is None:
            origin, m = (1, 1), 4
        else:
            origin, m = history.calendar(len(history)), history.m
        mk = lambda v: TimeSeries(v, origin, m)  # noqa: E731
        return cls(mk(points), mk(lower), mk(upper), float(level), label)

    def map(self, fn) -> "ForecastResult":
        """Apply a monotone increasing transform to points and bounds."""
        mk = lambda s: TimeSeries(fn(s.values), s.origin, s.m)  # noqa: E731
        return ForecastResult(mk(self.points), mk(self.lower), mk(self.upper), self.level,
                              self.model_label)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("date,point,lower,upper\n")
            for lab, p, lo, hi in zip(self.points.labels(), self.points.values,
                                      self.lower.values, self.upper.values):
                fh.write(f"{lab},{float(p)!r},{float(lo)!r},{float(hi)!r}\n")


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.size != p.size or a.size < 1:
        raise InputError(f"metric inputs need equal non-zero lengths, got {a.size} and {p.size}")
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, in percent."""
    a, p = _pair(actual, predicted)
    if np.any(a == 0):
        raise DomainError("mape undefined: actual series contains zero")
    return float(100.0 * np.mean(np.abs((a - p) / a)))


def u_theil(actual, predicted, variant: str = "U2") -> float:
    """Theil inequality coefficient.

    U1 is bounded in [0, 1]. U2 compares relative one-step errors with those
    of the naive last-value forecast, so the naive forecast scores exactly 1.
    """
    a, p = _pair(actual, predicted)
    if variant == "U1":
        den = np.sqrt(np.mean(a * a)) + np.sqrt(np.mean(p * p))
        if den == 0:
            raise DomainError("U1 undefined: both series are identically zero")
        return float(np.sqrt(np.mean((a - p) ** 2)) / den)
    if variant != "U2":
        raise InputError(f"unknown U-Theil variant {variant!r}")
    if a.size < 2:
        raise InputError("U2 needs at least two observations")
    prev = a[:-1]
    if np.any(prev == 0):
        raise DomainError("U2 undefined: zero actual value used as denominator")
    num = np.sum(((p[1:] - a[1:]) / prev) ** 2)
    den = np.sum(((a[1:] - prev) / prev) ** 2)
    if den == 0:
        raise DomainError("U2 undefined: actual series is constant")
    return float(np.sqrt(num) / np.sqrt(den))


def growth_rate(s: TimeSeries) -> TimeSeries:
    """Period-over-period relative change."""
    if len(s) < 2:
        raise InputError("growth_rate needs at least two values")
    y = s.values
    if np.any(y == 0):
        raise DomainError("growth_rate undefined for zero values")
    return s.with_values((y[1:] - y[:-1]) / y[:-1], 1)


def align(actual: TimeSeries, predicted: TimeSeries) -> tuple[TimeSeries, TimeSeries]:
    """Trim both series to their common calendar window."""
    if actual.m != predicted.m:
        raise InputError("cannot align series with different period lengths")
    start = max(0, actual.index_of(*predicted.origin))
    stop = min(len(actual), actual.index_of(*predicted.origin) + len(predicted))
    if stop <= start:
        raise InputError("actual and predicted series do not overlap")
    a = actual.window(actual.calendar(start), actual.calendar(stop - 1))
    p = predicted.window(actual.calendar(start), actual.calendar(stop - 1))
    if len(a) < max(len(actual), len(predicted)):
        log.warning("metrics computed on %s..%s (%d of %d/%d points)", a.labels()[0],
                    a.labels()[-1], len(a), len(actual), len(predicted))
    return a, p


@dataclass(frozen=True)
class ScoreRow:
    label: str
    rmse: float
    mae: float
    mape: float
    u1: float
    u2: float
    n: int
    start: str = ""
    end: str = ""

    def values(self) -> tuple:
        return tuple(getattr(self, k) for k in METRICS)


def score(actual: TimeSeries, predicted: TimeSeries, label: str) -> ScoreRow:
    a, p = align(actual, predicted)
    labels = a.labels()
    return ScoreRow(label, rmse(a, p), mae(a, p), mape(a, p), u_theil(a, p, "U1"),
                    u_theil(a, p, "U2"), len(a), labels[0], labels[-1])


@dataclass(frozen=True)
class ScoreCard:
    """Metric rows in input order plus, per metric, the labels attaining the minimum."""

    rows: tuple
    best: dict = field(default_factory=dict)

    def row(self, label: str) -> ScoreRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("model,rmse,mae,mape,u_theil_u1,u_theil_u2,n,start,end,best\n")
            for r in self.rows:
                flags = ";".join(k for k in METRICS if r.label in self.best[k])
                fh.write(f"{r.label},{r.rmse!r},{r.mae!r},{r.mape!r},{r.u1!r},{r.u2!r},"
                         f"{r.n},{r.start},{r.end},{flags}\n")

    def to_table(self, digits: int = 3) -> str:
        """Plain-text table; a trailing ``*`` marks the best value in each column."""
        head = ["Model", "RMSE", "MAE", "MAPE", "U-Theil (U1)", "U-Theil (U2)"]
        body = []
        for r in self.rows:
            cells = [r.label]
            for k in METRICS:
                mark = "*" if r.label in self.best[k] else " "
                cells.append(f"{getattr(r, k):.{digits}f}{mark}")
            body.append(cells)
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
        fmt = lambda row: "  ".join(  # noqa: E731
            c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
        rule = "-" * len(fmt(head))
        return "\n".join([fmt(head), rule] + [fmt(b) for b in body] + [rule])


def compare(rows: Sequence[ScoreRow]) -> ScoreCard:
    rows = tuple(rows)
    if not rows:
        raise InputError("compare needs at least one row")
    best = {}
    for k in METRICS:
        vals = np.array([getattr(r, k) for r in rows])
        best[k] = tuple(r.label for r, v in zip(rows, vals) if v == vals.min())
    return ScoreCard(rows, best)


def read_scorecard(path) -> ScoreCard:
    rows = []
    with open(path) as fh:
        next(fh)
        for line in fh:
            f = line.rstrip("\n").split(",")
            rows.append(ScoreRow(f[0], *(float(v) for v in f[1:6]), int(f[6]), f[7], f[8]))
    return compare(rows)
