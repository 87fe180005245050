"""End-to-end fit / forecast / plot / report stages behind the command line.

Each stage reads its inputs from, and writes its outputs to, the run's output
directory, so stages can be re-run independently. Every emitted CSV is a
deterministic function of (input, config, seed); wall-clock timestamps only
go to ``run_meta.txt``.
"""
from __future__ import annotations

import csv
import datetime
import hashlib
import io
import json
import logging
import math
import shutil
import urllib.error
import urllib.request
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import dlm, holtwinters as hw, sarima, svg
from .errors import GdpcastError, InputError, NetworkError
from .metrics import ForecastResult, compare, growth_rate, read_scorecard, score
from .series import (TimeSeries, acf, difference, exp_transform, format_period, log_transform,
                     pacf, parse_period, read_csv, write_csv)
from .stattests import LEVELS, ljung_box, phillips_perron

log = logging.getLogger(__name__)

MODELS = ("hw", "sarima", "dlm")
LABELS = {"hw": "Holt-Winters", "sarima": "SARIMA", "dlm": "DLM"}
FIXTURE = Path(__file__).parent / "data" / "gdp_fixture.csv"


@contextmanager
def stage(name: str):
    """Prefix library errors with the operation that raised them."""
    try:
        yield
    except GdpcastError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class RunConfig:
    input: str = ""
    output_dir: str = "gdpcast-out"
    transform: str = "log"
    train_end: str = "2016-Q4"
    horizon: int = 12
    level: float = 0.95
    models: tuple = MODELS
    seed: int = 0
    gibbs_iter: int = 5000
    gibbs_burn: int = 1000
    hw_method: str = "auto"
    acf_lags: int = 20
    ljung_box_lags: int = 8
    offline: bool = True
    endpoint: str = ""
    period_field: str = "period"
    value_field: str = "value"
    skip_records: int = 0
    timeout: float = 30.0

    def __post_init__(self):
        if self.transform not in ("none", "log"):
            raise InputError(f"transform must be 'none' or 'log', got {self.transform!r}")
        if self.hw_method not in ("auto",) + hw.METHODS:
            raise InputError(f"hw_method must be auto, additive or multiplicative")
        bad = [m for m in self.models if m not in MODELS]
        if bad or not self.models:
            raise InputError(f"models must be a non-empty subset of {','.join(MODELS)}")
        parse_period(self.train_end)
        if self.horizon < 1:
            raise InputError("horizon must be >= 1")
        if not 0 < self.level < 1:
            raise InputError("level must lie in (0, 1)")
        if not self.gibbs_iter > self.gibbs_burn >= 0:
            raise InputError("need gibbs_iter > gibbs_burn >= 0")

    @property
    def input_path(self) -> Path:
        return Path(self.input) if self.input else FIXTURE

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    @property
    def split(self) -> tuple:
        return parse_period(self.train_end)

    def as_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if name not in kinds:
        raise InputError(f"unknown config key {name!r}")
    kind = kinds[name]
    text = text.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise InputError(f"config key {name}: bad value {text!r}") from None
    if kind == "bool":
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise InputError(f"config key {name}: expected true/false, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    if kind == "tuple":
        return tuple(p.strip() for p in text.split(",") if p.strip())
    return text


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Read a config file and apply ``--key value`` overrides.

    Relative ``input`` and ``output_dir`` paths in the file are taken relative
    to the file; overrides are taken relative to the working directory.
    """
    values = {}
    if path is not None:
        path = Path(path)
        try:
            values = parse_config_text(path.read_text())
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc.strerror}") from None
        for key in ("input", "output_dir"):
            if values.get(key) and not Path(values[key]).is_absolute():
                values[key] = str(path.parent / values[key])
    for key, value in (overrides or {}).items():
        values[key] = _coerce(key, value) if isinstance(value, str) else value
    return RunConfig(**values)


# ---------------------------------------------------------------- data

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([_fmt(v) for v in row] for row in rows)


def read_rows(path: Path) -> list[dict]:
    if not path.exists():
        raise InputError(f"missing artifact {path.name}; run the earlier stages first")
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class Data:
    full: TimeSeries
    train: TimeSeries
    test: Optional[TimeSeries]
    work: TimeSeries  # training series on the modelling scale
    log: bool = True


def load_data(cfg: RunConfig) -> Data:
    with stage("series.read_csv"):
        try:
            full = read_csv(cfg.input_path)
        except OSError as exc:
            raise InputError(f"cannot read {cfg.input_path}: {exc.strerror}") from None
    end = cfg.split
    i = full.index_of(*end)
    if not 2 * full.m <= i < len(full) - 1:
        raise InputError(f"train_end {cfg.train_end} must lie strictly inside the data "
                         f"range {full.labels()[0]}..{full.labels()[-1]}")
    train = full.window(None, end)
    test = full.window(full.calendar(i + 1), None)
    with stage("series.log_transform"):
        work = log_transform(train) if cfg.transform == "log" else train
    return Data(full, train, test, work, cfg.transform == "log")


def back(cfg: RunConfig, s: TimeSeries) -> TimeSeries:
    return exp_transform(s) if cfg.transform == "log" else s


def decimal_time(s: TimeSeries) -> np.ndarray:
    year, period = s.origin
    return year + (period - 1 + np.arange(len(s))) / s.m


# ---------------------------------------------------------------- fetch

def _parse_any_period(text: str) -> tuple:
    t = str(text).strip()
    if len(t) == 6 and t.isdigit():
        return int(t[:4]), int(t[4:])
    if len(t) == 6 and t[4] in "Qq":
        return int(t[:4]), int(t[5])
    return parse_period(t)


def payload_to_series(payload: bytes, cfg: RunConfig) -> TimeSeries:
    """Validate a JSON array of ``{period, value}`` records into a series."""
    try:
        records = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise NetworkError(f"payload is not JSON: {exc}") from None
    if not isinstance(records, list):
        raise NetworkError("payload must be a JSON array of records")
    records = records[cfg.skip_records:]
    if not records:
        raise NetworkError("payload contains no records")
    lines = ["date,value"]
    for k, rec in enumerate(records):
        try:
            period = _parse_any_period(rec[cfg.period_field])
            value = float(rec[cfg.value_field])
        except (KeyError, TypeError, ValueError, InputError) as exc:
            raise NetworkError(f"record {k}: schema mismatch ({exc})") from None
        if not math.isfinite(value):
            raise NetworkError(f"record {k}: non-finite value")
        lines.append(f"{format_period(*period)},{value!r}")
    try:
        return read_csv(io.StringIO("\n".join(lines) + "\n"))
    except InputError as exc:
        raise NetworkError(f"payload fails series validation: {exc}") from None


def run_fetch(cfg: RunConfig) -> Path:
    """Write the canonical input CSV, from the endpoint or the bundled fixture."""
    if not cfg.input:
        raise InputError("fetch needs an 'input' path to write to")
    target = Path(cfg.input)
    target.parent.mkdir(parents=True, exist_ok=True)
    if cfg.offline:
        shutil.copyfile(FIXTURE, target)
        return target
    if not cfg.endpoint:
        raise InputError("fetch with offline = false needs an 'endpoint'")
    hint = "; set offline = true to use the bundled fixture"
    try:
        with urllib.request.urlopen(cfg.endpoint, timeout=cfg.timeout) as resp:
            payload = resp.read()
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise NetworkError(f"cannot download {cfg.endpoint}: {exc}{hint}") from None
    try:
        s = payload_to_series(payload, cfg)
    except NetworkError as exc:
        raise NetworkError(f"{exc}{hint}") from None
    write_csv(s, target)
    return target


# ---------------------------------------------------------------- fit

@dataclass
class FitBundle:
    """In-memory fit results on the modelling scale."""

    hw: Optional[hw.HWFit] = None
    hw_alternatives: tuple = ()
    sarima: Optional[sarima.SarimaModel] = None
    grid: Optional[sarima.SarimaGrid] = None
    chain: Optional[dlm.GibbsChain] = None
    dlm_template: Optional[dlm.DlmSpec] = None
    priors: Optional[dlm.VariancePriors] = None


def fit_hw(work: TimeSeries, method: str = "auto"):
    methods = hw.METHODS if method == "auto" else (method,)
    fits = []
    for m in methods:
        if m == "multiplicative" and np.any(work.values <= 0):
            log.warning("skipping multiplicative Holt-Winters: non-positive values")
            continue
        with stage(f"holtwinters.hw_optimize[{m}]"):
            fits.append(hw.hw_optimize(work, m))
    best = min(fits, key=lambda f: f.sse)
    return best, tuple(fits)


def fit_models(work: TimeSeries, cfg: RunConfig) -> FitBundle:
    """Fit the selected models in the fixed order hw, sarima, dlm."""
    out = FitBundle()
    if "hw" in cfg.models:
        out.hw, out.hw_alternatives = fit_hw(work, cfg.hw_method)
    if "sarima" in cfg.models:
        with stage("sarima.grid_search"):
            out.grid = sarima.grid_search(work, 1, 1, work.m)
        out.sarima = out.grid[0]
    if "dlm" in cfg.models:
        with stage("dlm.gibbs"):
            out.priors = dlm.default_priors(work.values)
            out.chain = dlm.gibbs(work.values, out.priors, cfg.gibbs_iter, cfg.gibbs_burn,
                                  cfg.seed)
        m0, C0 = dlm.default_initial(work.values)
        out.dlm_template = dlm.build_trend_seasonal(m0, C0, 1.0, np.zeros(5))
    return out


def fitted_series(bundle: FitBundle, work: TimeSeries) -> dict:
    """Fitted values per model on the modelling scale.

    Holt-Winters and SARIMA give one-step-ahead predictions; the DLM gives
    smoothed means at the posterior-mean variances.
    """
    out = {}
    if bundle.hw is not None:
        out["hw"] = bundle.hw.fitted
    if bundle.sarima is not None:
        with stage("sarima.fitted_values"):
            out["sarima"] = sarima.fitted_values(bundle.sarima, work)
    if bundle.chain is not None:
        with stage("dlm.smoothed_fit"):
            fv, _ = dlm.smoothed_fit(bundle.dlm_template, bundle.chain.posterior_mean(),
                                     work.values)
        out["dlm"] = work.with_values(fv)
    return out


def fitted_scorecard(data: Data, fitted: dict, cfg: RunConfig):
    rows = [score(data.train, back(cfg, fitted[k]), LABELS[k]) for k in MODELS if k in fitted]
    return compare(rows)


def _residual_checks(bundle: FitBundle, work: TimeSeries, lags: int):
    rows = []
    if bundle.hw is not None:
        e = bundle.hw.residuals
        rows.append(("hw", e, 0))
    if bundle.sarima is not None:
        o = bundle.sarima.order
        rows.append(("sarima", sarima.standardized_residuals(bundle.sarima, work),
                     o.p + o.q + o.P + o.Q))
    if bundle.chain is not None:
        v = bundle.chain.posterior_mean()
        spec = bundle.dlm_template.with_variances(v[0], [v[1], v[2], v[3], 0.0, 0.0])
        filt = dlm.kalman_filter(spec, work.values)
        # drop the first p innovations, which carry the diffuse initial state
        z = (filt.innovations / np.sqrt(filt.Q))[spec.p:]
        rows.append(("dlm", z, 0))
    out = []
    for name, e, k in rows:
        with stage(f"stattests.ljung_box[{name}]"):
            r = ljung_box(e, lags, k)
        out.append((name, lags, k, r.statistic, lags - k, r.p_value))
    return out


def _pp_rows(work: TimeSeries):
    rows = []
    for name, s in (("level", work), ("diff", difference(work, 1, 0, work.m)),
                    ("diff_seasonal_diff", difference(work, 1, 1, work.m))):
        with stage(f"stattests.phillips_perron[{name}]"):
            r = phillips_perron(s)
        rows.append((name, len(s), r.statistic, r.p_value, r.lags_used,
                     *(r.critical_values[a] for a in LEVELS)))
    return rows


def _write_meta(cfg: RunConfig, command: str, started: datetime.datetime) -> None:
    finished = datetime.datetime.now(datetime.timezone.utc)
    with open(cfg.out / "run_meta.txt", "a") as fh:
        fh.write(f"[{command}]\nstarted = {started.isoformat()}\n"
                 f"finished = {finished.isoformat()}\n"
                 f"seconds = {(finished - started).total_seconds():.3f}\n\n")


def run_fit(cfg: RunConfig) -> FitBundle:
    started = datetime.datetime.now(datetime.timezone.utc)
    out = cfg.out
    data = load_data(cfg)
    (out / "models").mkdir(parents=True, exist_ok=True)
    work = data.work
    (out / "config_used.txt").write_text(cfg.as_text())

    lags = min(cfg.acf_lags, len(work) - 1)
    wd = difference(work, 1, 1, work.m)
    lags_d = min(lags, len(wd) - 1)
    with stage("series.acf"):
        r, p = acf(work, lags), pacf(work, lags)
        rd, pd = acf(wd, lags_d), pacf(wd, lags_d)
    write_rows(out / "acf_pacf.csv", ["lag", "acf", "pacf", "acf_diff", "pacf_diff"],
               [(k, r[k], p[k], rd[k] if k <= lags_d else None,
                 pd[k] if k <= lags_d else None) for k in range(lags + 1)])
    write_rows(out / "stationarity.csv", ["series", "n", "statistic", "p_value", "lags",
                                          "crit_1pct", "crit_5pct", "crit_10pct"],
               _pp_rows(work))

    bundle = fit_models(work, cfg)
    fitted = fitted_series(bundle, work)

    meta = {"input_sha256": _file_digest(cfg.input_path), "transform": cfg.transform,
            "train_end": cfg.train_end, "train_start": data.train.labels()[0],
            "models": list(cfg.models), "seed": cfg.seed}
    if bundle.hw is not None:
        write_rows(out / "hw_selection.csv", ["method", "alpha", "beta", "gamma", "sse",
                                              "selected"],
                   [(f.params.method, f.params.alpha, f.params.beta, f.params.gamma, f.sse,
                     int(f is bundle.hw)) for f in bundle.hw_alternatives])
        meta["hw"] = {"params": asdict(bundle.hw.params),
                      "initial_state": asdict(bundle.hw.initial_state),
                      "final_state": asdict(bundle.hw.final_state), "sse": bundle.hw.sse}
    if bundle.grid is not None:
        grid_rows = []
        for rank, m in enumerate(bundle.grid, start=1):
            o = m.order
            grid_rows.append((rank, str(o), o.p, o.d, o.q, o.P, o.D, o.Q, o.s,
                              m.phi[0] if m.phi else None, m.theta[0] if m.theta else None,
                              m.Phi[0] if m.Phi else None, m.Theta[0] if m.Theta else None,
                              m.sigma2, m.loglik, m.aic, m.n_params, m.nobs))
        write_rows(out / "sarima_grid.csv",
                   ["rank", "order", "p", "d", "q", "P", "D", "Q", "s", "phi1", "theta1",
                    "Phi1", "Theta1", "sigma2", "loglik", "aic", "n_params", "nobs"],
                   grid_rows)
        m = bundle.sarima
        meta["sarima"] = {"order": asdict(m.order), "phi": m.phi, "theta": m.theta,
                          "Phi": m.Phi, "Theta": m.Theta, "sigma2": m.sigma2,
                          "loglik": m.loglik, "aic": m.aic, "nobs": m.nobs}
        if bundle.grid.failures:
            meta["sarima"]["failures"] = {str(k): v for k, v in bundle.grid.failures.items()}
    if bundle.chain is not None:
        bundle.chain.to_csv(out / "gibbs_chain.csv")
        kept = bundle.chain.retained
        tail = (1 - cfg.level) / 2
        lo, hi = np.quantile(kept, [tail, 1 - tail], axis=0)
        write_rows(out / "dlm_posterior.csv", ["parameter", "mean", "lower", "upper"],
                   [(name, kept[:, j].mean(), lo[j], hi[j])
                    for j, name in enumerate(dlm.PARAM_NAMES)])
        meta["dlm"] = {"posterior_mean": bundle.chain.posterior_mean().tolist(),
                       "prior_a": list(bundle.priors.a), "prior_b": list(bundle.priors.b),
                       "m0": bundle.dlm_template.m0.tolist(),
                       "C0_diag": np.diag(bundle.dlm_template.C0).tolist(),
                       "n_iter": cfg.gibbs_iter, "burn_in": cfg.gibbs_burn,
                       "seed": cfg.seed}
    (out / "models" / "fit.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    cols = [k for k in MODELS if k in fitted]
    orig = {k: back(cfg, fitted[k]) for k in cols}
    rows = []
    for i, lab in enumerate(data.train.labels()):
        row = [lab, data.train.values[i]]
        for k in cols:
            j = i - data.train.index_of(*orig[k].origin)
            row.append(orig[k].values[j] if 0 <= j < len(orig[k]) else None)
        rows.append(row)
    write_rows(out / "fitted_values.csv", ["date", "observed"] + cols, rows)
    fitted_scorecard(data, fitted, cfg).to_csv(out / "scorecard_fitted.csv")
    write_rows(out / "ljung_box.csv", ["model", "lags", "fitted_params", "statistic", "df",
                                       "p_value"],
               _residual_checks(bundle, work, cfg.ljung_box_lags))
    _write_meta(cfg, "fit", started)
    return bundle


# ---------------------------------------------------------------- forecast

def _load_fit(cfg: RunConfig, data: Data) -> dict:
    path = cfg.out / "models" / "fit.json"
    if not path.exists():
        raise InputError(f"missing {path}; run 'gdpcast fit' first")
    meta = json.loads(path.read_text())
    now = {"input_sha256": _file_digest(cfg.input_path), "transform": cfg.transform,
           "train_end": cfg.train_end}
    stale = [k for k, v in now.items() if meta.get(k) != v]
    if stale:
        raise InputError(f"fit artifacts do not match the current config ({', '.join(stale)}); "
                         "rerun 'gdpcast fit'")
    missing = [k for k in cfg.models if k not in meta]
    if missing:
        raise InputError(f"no fitted model for {', '.join(missing)}; rerun 'gdpcast fit'")
    return meta


def forecasts_from_artifacts(cfg: RunConfig, data: Data, meta: dict) -> dict:
    """Forecasts on the original scale, keyed by model."""
    work, h = data.work, cfg.horizon
    out = {}
    if "hw" in cfg.models:
        info = meta["hw"]
        params = hw.HWParams(**info["params"])
        init = hw.HWState(**info["initial_state"])
        with stage("holtwinters.hw_forecast"):
            fc = hw.hw_forecast(hw.hw_filter(work, params, init), h, cfg.level)
        out["hw"] = fc
    if "sarima" in cfg.models:
        info = meta["sarima"]
        model = sarima.SarimaModel(sarima.SarimaOrder(**info["order"]), info["phi"],
                                   info["theta"], info["Phi"], info["Theta"], info["sigma2"],
                                   info["loglik"], info["aic"], info["nobs"])
        with stage("sarima.forecast"):
            out["sarima"] = sarima.forecast(model, work, h, cfg.level)
    if "dlm" in cfg.models:
        with stage("dlm.dlm_forecast"):
            chain = dlm.GibbsChain.from_csv(cfg.out / "gibbs_chain.csv", cfg.seed)
            m0, C0 = dlm.default_initial(work.values)
            template = dlm.build_trend_seasonal(m0, C0, 1.0, np.zeros(5))
            out["dlm"] = dlm.dlm_forecast(template, chain, work, h, cfg.level)
    if cfg.transform == "log":
        out = {k: fc.map(np.exp) for k, fc in out.items()}
    return {k: ForecastResult(fc.points, fc.lower, fc.upper, fc.level, LABELS[k])
            for k, fc in out.items()}


def growth_rows(data: Data, forecasts: dict) -> list:
    """Quarter-on-quarter growth of each forecast path against the observed series.

    The first forecast quarter is measured from the last training value.
    """
    last = data.train.values[-1]
    observed = growth_rate(data.full)
    rows = []
    for k, fc in forecasts.items():
        path = TimeSeries(np.r_[last, fc.points.values], data.train.end)
        g = growth_rate(path)
        for lab, cal, v in zip(g.labels(), (g.calendar(i) for i in range(len(g))), g.values):
            j = observed.index_of(*cal)
            obs = observed.values[j] if 0 <= j < len(observed) else None
            rows.append((lab, k, v, obs))
    return rows


def run_forecast(cfg: RunConfig) -> dict:
    started = datetime.datetime.now(datetime.timezone.utc)
    data = load_data(cfg)
    meta = _load_fit(cfg, data)
    forecasts = forecasts_from_artifacts(cfg, data, meta)
    for k, fc in forecasts.items():
        fc.to_csv(cfg.out / f"forecast_{k}.csv")
    rows = [score(data.test, fc.points, LABELS[k]) for k, fc in forecasts.items()]
    compare(rows).to_csv(cfg.out / "scorecard_forecast.csv")
    write_rows(cfg.out / "growth_comparison.csv",
               ["quarter", "model", "model_growth", "observed_growth"],
               growth_rows(data, forecasts))
    _write_meta(cfg, "forecast", started)
    return forecasts


# ---------------------------------------------------------------- plot

def _read_forecast(path: Path) -> tuple:
    rows = read_rows(path)
    origin = parse_period(rows[0]["date"])
    cols = [np.array([float(r[c]) for r in rows]) for c in ("point", "lower", "upper")]
    return origin, cols


def plot_fit_forecast(cfg: RunConfig, data: Data, model: str) -> Path:
    origin, (point, lower, upper) = _read_forecast(cfg.out / f"forecast_{model}.csv")
    fitted_rows = read_rows(cfg.out / "fitted_values.csv")
    fit_t, fit_v = [], []
    for i, r in enumerate(fitted_rows):
        if r.get(model):
            fit_t.append(data.train.calendar(i))
            fit_v.append(float(r[model]))
    fc = TimeSeries(point, origin)
    t_obs, t_fc = decimal_time(data.full), decimal_time(fc)
    t_fit = np.array([y + (q - 1) / 4 for y, q in fit_t])
    lo = min(data.full.values.min(), lower.min())
    hi = max(data.full.values.max(), upper.max())
    panel = svg.Panel(70, 40, 560, 300, (t_obs[0], max(t_obs[-1], t_fc[-1])),
                      (lo - 0.03 * (hi - lo), hi + 0.03 * (hi - lo)),
                      f"{LABELS[model]}: fitted, forecast and {cfg.level:.0%} interval")
    panel.band(t_fc, lower, upper, svg.PALETTE["band"])
    panel.markers(t_obs, data.full.values, svg.PALETTE["observed"], "observed")
    panel.line(t_fit, fit_v, svg.PALETTE[model], "fitted")
    panel.line(t_fc, point, svg.PALETTE[model], "forecast", dash="5,3")
    panel.vline(decimal_time(data.train)[-1] + 0.125, "#999999")
    doc = svg.document({"main": panel}, 700, 380, f"{LABELS[model]} ({cfg.transform} scale "
                       "fit, original scale shown)",
                       (("observed", svg.PALETTE["observed"]),
                        (LABELS[model], svg.PALETTE[model])))
    path = cfg.out / f"fit_forecast_{model}.svg"
    path.write_text(doc)
    return path



def plot_acf(cfg: RunConfig, n_level: int, n_diff: int) -> Path:
    rows = read_rows(cfg.out / "acf_pacf.csv")
    panels = {}
    specs = (("acf", "ACF, level", n_level), ("pacf", "PACF, level", n_level),
             ("acf_diff", "ACF, (1-B)(1-B^4)", n_diff), ("pacf_diff", "PACF, (1-B)(1-B^4)",
                                                        n_diff))
    for i, (col, title, n) in enumerate(specs):
        lags = np.array([int(r["lag"]) for r in rows if r[col]])
        vals = np.array([float(r[col]) for r in rows if r[col]])
        lags, vals = lags[1:], vals[1:]
        p = svg.Panel(60 + 340 * (i % 2), 40 + 200 * (i // 2), 290, 150,
                      (0, lags.max() + 1), (-1.0, 1.0), title)
        p.stems(lags, vals, svg.PALETTE["hw"])
        p.hline(0.0, "#888888", "")
        band = 1.96 / np.sqrt(n)
        p.hline(band, svg.PALETTE["band"])
        p.hline(-band, svg.PALETTE["band"])
        panels[col] = p
    path = cfg.out / "acf_pacf.svg"
    path.write_text(svg.document(panels, 700, 440, "Autocorrelation diagnostics"))
    return path


def plot_gibbs(cfg: RunConfig) -> Path:
    chain = dlm.GibbsChain.from_csv(cfg.out / "gibbs_chain.csv", cfg.seed)
    it = np.loadtxt(cfg.out / "gibbs_chain.csv", delimiter=",", skiprows=1, ndmin=2)[:, 0]
    means = dlm.ergodic_means(chain)
    panels = {}
    for j, name in enumerate(dlm.PARAM_NAMES):
        d = chain.draws[:, j]
        p = svg.Panel(60 + 340 * (j % 2), 40 + 200 * (j // 2), 290, 150,
                      (it[0], it[-1]), (d.min(), d.max()), name)
        p.line(it, d, "#7f7f7f", f"trace_{name}", width=0.6)
        p.line(it, means[:, j], svg.PALETTE["mean"], f"mean_{name}", width=2)
        panels[name] = p
    path = cfg.out / "gibbs_trace.svg"
    path.write_text(svg.document(panels, 700, 440, "Gibbs draws and ergodic means",
                                 (("draw", "#7f7f7f"), ("ergodic mean", svg.PALETTE["mean"]))))
    return path


def plot_growth(cfg: RunConfig) -> Path:
    rows = read_rows(cfg.out / "growth_comparison.csv")
    models = list(dict.fromkeys(r["model"] for r in rows))
    series, observed = {}, {}
    for r in rows:
        t = (lambda y, q: y + (q - 1) / 4)(*parse_period(r["quarter"]))
        series.setdefault(r["model"], []).append((t, float(r["model_growth"])))
        if r["observed_growth"]:
            observed[t] = float(r["observed_growth"])
    vals = [v for s in series.values() for _, v in s] + list(observed.values())
    ts = [t for s in series.values() for t, _ in s]
    p = svg.Panel(70, 40, 560, 300, (min(ts), max(ts)), (min(vals), max(vals)),
                  "Quarter-on-quarter growth")
    p.hline(0.0, "#888888", "")
    for m in models:
        t, v = zip(*series[m])
        p.line(t, v, svg.PALETTE[m], f"growth_{m}")
    if observed:
        t = sorted(observed)
        p.line(t, [observed[k] for k in t], svg.PALETTE["observed"], "growth_observed", dash="2,2")
        p.markers(t, [observed[k] for k in t], svg.PALETTE["observed"])
    legend = tuple((LABELS[m], svg.PALETTE[m]) for m in models)
    legend += (("observed", svg.PALETTE["observed"]),) if observed else ()
    path = cfg.out / "growth.svg"
    path.write_text(svg.document({"main": p}, 700, 380, "Growth rate: forecast vs observed",
                                 legend))
    return path


def run_plot(cfg: RunConfig) -> list:
    started = datetime.datetime.now(datetime.timezone.utc)
    data = load_data(cfg)
    _load_fit(cfg, data)
    paths = [plot_fit_forecast(cfg, data, k) for k in cfg.models]
    paths.append(plot_acf(cfg, len(data.work), len(data.work) - 1 - data.work.m))
    if "dlm" in cfg.models:
        paths.append(plot_gibbs(cfg))
    paths.append(plot_growth(cfg))
    _write_meta(cfg, "plot", started)
    return paths


# ---------------------------------------------------------------- report

def _table(head, rows) -> str:
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    fmt = lambda r: "  ".join(  # noqa: E731
        c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    rule = "-" * len(fmt(head))
    return "\n".join([fmt(head), rule] + [fmt(r) for r in rows] + [rule])


def _g(text: str, digits: int = 4) -> str:
    return "" if text == "" else f"{float(text):.{digits}f}"


def build_report(cfg: RunConfig) -> str:
    out = cfg.out
    parts = []
    fitted = out / "scorecard_fitted.csv"
    if not fitted.exists():
        raise InputError("missing scorecard_fitted.csv; run 'gdpcast fit' first")
    parts.append("Fitted values against the training data\n" +
                 read_scorecard(fitted).to_table())
    fc = out / "scorecard_forecast.csv"
    if fc.exists():
        parts.append("Forecasts against the held-out data\n" + read_scorecard(fc).to_table())
    if (out / "growth_comparison.csv").exists():
        rows = read_rows(out / "growth_comparison.csv")
        parts.append("Quarter-on-quarter growth\n" + _table(
            ["Quarter", "Model", "Forecast", "Observed"],
            [(r["quarter"], LABELS[r["model"]], _g(r["model_growth"]),
              _g(r["observed_growth"])) for r in rows]))
    if (out / "hw_selection.csv").exists():
        rows = read_rows(out / "hw_selection.csv")
        parts.append("Holt-Winters method selection (lower SSE wins)\n" + _table(
            ["Method", "alpha", "beta", "gamma", "SSE", "selected"],
            [(r["method"], _g(r["alpha"]), _g(r["beta"]), _g(r["gamma"]), _g(r["sse"], 6),
              "yes" if r["selected"] == "1" else "") for r in rows]))
    if (out / "sarima_grid.csv").exists():
        rows = read_rows(out / "sarima_grid.csv")
        parts.append("SARIMA grid ranked by AIC\n" + _table(
            ["Rank", "Order", "phi1", "theta1", "Phi1", "Theta1", "sigma2", "AIC"],
            [(r["rank"], r["order"], _g(r["phi1"]), _g(r["theta1"]), _g(r["Phi1"]),
              _g(r["Theta1"]), f"{float(r['sigma2']):.3e}", _g(r["aic"], 2)) for r in rows]))
    if (out / "dlm_posterior.csv").exists():
        rows = read_rows(out / "dlm_posterior.csv")
        parts.append("DLM variance posterior\n" + _table(
            ["Parameter", "mean", "lower", "upper"],
            [(r["parameter"], f"{float(r['mean']):.3e}", f"{float(r['lower']):.3e}",
              f"{float(r['upper']):.3e}") for r in rows]))
    if (out / "stationarity.csv").exists():
        rows = read_rows(out / "stationarity.csv")
        parts.append("Phillips-Perron unit-root test (p-values clamped to [0.01, 0.10])\n" +
                     _table(["Series", "n", "Z_alpha", "p-value", "lags"],
                            [(r["series"], r["n"], _g(r["statistic"], 3), _g(r["p_value"], 3),
                              r["lags"]) for r in rows]))
    if (out / "ljung_box.csv").exists():
        rows = read_rows(out / "ljung_box.csv")
        parts.append("Ljung-Box test on residuals\n" + _table(
            ["Model", "lags", "df", "Q", "p-value"],
            [(LABELS[r["model"]], r["lags"], r["df"], _g(r["statistic"], 3),
              _g(r["p_value"], 3)) for r in rows]))
    return "\n\n".join(parts) + "\n"


def run_report(cfg: RunConfig) -> str:
    text = build_report(cfg)
    (cfg.out / "report.txt").write_text(text)
    return text
