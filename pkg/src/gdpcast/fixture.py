"""Synthetic GDP-like quarterly series bundled for tests and demos.

The series runs 1996-Q1..2019-Q4 and is built on the log scale as

    log y_t = level_t + seasonal_t + noise_t

* ``level_t`` accumulates a slowly drifting quarterly growth rate (about 2.8%
  a year on average), a random-walk component, and two shocks: a permanent
  drop in 2008-Q4/2009-Q1 and a two-year contraction through 2015-2016.
* ``seasonal_t`` is a sum-to-zero quarterly pattern whose four factors
  drift as independent random walks, re-centred every period.
* ``noise_t`` is small white noise.

Values are rounded to one decimal and start near 190,000, the magnitude of a
national accounts series in millions of constant currency.

Running ``python -m gdpcast.fixture --check`` regenerates the series and
verifies the orderings the bundled data is meant to exhibit: additive
Holt-Winters has a lower SSE than multiplicative on the log scale, and the
DLM has the lowest fitted RMSE, MAE and MAPE of the three models.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .series import TimeSeries, write_csv

SEED = 0
ORIGIN = (1996, 1)
N = 96
SEASONAL = np.array([-0.045, 0.02, 0.04, -0.015])


def generate(seed: int = SEED) -> TimeSeries:
    rng = np.random.default_rng(seed)
    t = np.arange(N)
    slope = 0.007 + np.cumsum(rng.normal(0.0, 0.0008, N))
    shock = np.zeros(N)
    shock[51:] -= 0.035  # 2008-Q4
    shock[52:] -= 0.015  # 2009-Q1
    shock += np.cumsum(np.where((t >= 76) & (t < 84), -0.011, 0.0))  # 2015-2016
    level = np.log(190_000.0) + np.cumsum(slope) + np.cumsum(rng.normal(0.0, 0.004, N)) + shock
    seasonal = np.empty(N)
    g = SEASONAL.copy()
    for i in range(N):
        g = g + rng.normal(0.0, 0.002, 4)
        g -= g.mean()
        seasonal[i] = g[i % 4]
    y = np.exp(level + seasonal + rng.normal(0.0, 0.003, N))
    return TimeSeries(np.round(y, 1), ORIGIN)


def check(s: TimeSeries, n_iter: int = 5000, burn_in: int = 1000) -> dict:
    """Fit the default pipeline models and report the orderings the fixture must show."""
    from .pipeline import Data, RunConfig, fitted_scorecard, fitted_series, fit_models
    from .series import log_transform

    cfg = RunConfig(gibbs_iter=n_iter, gibbs_burn=burn_in)
    train = s.window(None, cfg.split)
    work = log_transform(train)
    bundle = fit_models(work, cfg)
    sse = {f.params.method: f.sse for f in bundle.hw_alternatives}
    card = fitted_scorecard(Data(s, train, None, work), fitted_series(bundle, work), cfg)
    return {
        "hw_sse": sse,
        "additive_wins": sse["additive"] < sse["multiplicative"],
        "dlm_best": all(card.best[k] == ("DLM",) for k in ("rmse", "mae", "mape")),
        "grid_rows": len(bundle.grid),
        "scorecard": card,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m gdpcast.fixture", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--write", metavar="PATH", help="write the CSV to PATH")
    ap.add_argument("--check", action="store_true", help="verify the model orderings")
    args = ap.parse_args(argv)
    s = generate()
    if args.write:
        write_csv(s, args.write)
    if args.check:
        res = check(s)
        print(res["scorecard"].to_table())
        print(f"HW SSE: {res['hw_sse']}")
        ok = res["additive_wins"] and res["dlm_best"] and res["grid_rows"] == 16
        print("fixture orderings hold" if ok else "fixture orderings FAIL")
        return 0 if ok else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
