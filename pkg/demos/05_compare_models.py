"""
Comparing the three models
==========================

The same comparison the command-line pipeline writes to
``scorecard_fitted.csv`` and ``scorecard_forecast.csv``, built in memory.
Every model is fitted on the log scale up to 2016-Q4, and its fitted values
and forecasts are mapped back with ``exp`` before scoring.
"""

import numpy as np

from gdpcast import dlm, pipeline, sarima
from gdpcast.holtwinters import hw_forecast
from gdpcast.metrics import compare, score

cfg = pipeline.RunConfig(gibbs_iter=2000, gibbs_burn=500)
data = pipeline.load_data(cfg)
bundle = pipeline.fit_models(data.work, cfg)

card = pipeline.fitted_scorecard(data, pipeline.fitted_series(bundle, data.work), cfg)
print("In-sample (a * marks the best value per column)")
print(card.to_table())

# %%
# SARIMA is scored from 1997-Q2 because differencing consumes its first
# five periods. The DLM's fitted values are smoothed state means, which
# use the whole sample, so an in-sample win for it is expected.
#
# Out of sample the picture can differ.
work, h = data.work, cfg.horizon
forecasts = {
    "hw": hw_forecast(bundle.hw, h, cfg.level),
    "sarima": sarima.forecast(bundle.sarima, work, h, cfg.level),
    "dlm": dlm.dlm_forecast(bundle.dlm_template, bundle.chain, work, h, cfg.level),
}
forecasts = {k: fc.map(np.exp) for k, fc in forecasts.items()}
print("\nHeld-out 2017-Q1 to 2019-Q4")
print(compare([score(data.test, fc.points, pipeline.LABELS[k])
               for k, fc in forecasts.items()]).to_table())

# %%
# Quarter-on-quarter growth, the figure a reader of GDP releases cares
# about. The first forecast quarter is measured from the last observed
# value.
print("\nquarter   observed  " + "  ".join(f"{pipeline.LABELS[k]:>12s}" for k in forecasts))
rows = pipeline.growth_rows(data, forecasts)
for i in range(h):
    quarter, _, _, obs = rows[i]
    model_g = [rows[j * h + i][2] for j in range(len(forecasts))]
    print(f"{quarter}  {obs:8.4f}  " + "  ".join(f"{g:12.4f}" for g in model_g))
