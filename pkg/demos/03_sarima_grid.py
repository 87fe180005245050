"""
Choosing a SARIMA model from sixteen candidates
===============================================

With one regular and one seasonal difference fixed, every combination of
p, q, P, Q in {0, 1} is fitted by exact Gaussian maximum likelihood and
ranked by AIC. The best model's residuals are then checked with a
Ljung-Box test.
"""

import numpy as np

from gdpcast import sarima
from gdpcast.pipeline import FIXTURE
from gdpcast.series import log_transform, read_csv
from gdpcast.stattests import ljung_box

gdp = read_csv(FIXTURE)
train = log_transform(gdp.window(None, (2016, 4)))

grid = sarima.grid_search(train, d=1, D=1, s_period=4)
print("rank  order                 AIC")
for rank, model in enumerate(grid, start=1):
    print(f"{rank:4d}  {str(model.order):20s} {model.aic:8.2f}")

# %%
# Residual check: degrees of freedom are reduced by the number of ARMA
# coefficients.
best = grid[0]
o = best.order
lb = ljung_box(sarima.standardized_residuals(best, train), lags=8,
               fitted_params=o.p + o.q + o.P + o.Q)
print(f"\n{o}: Ljung-Box Q(8) = {lb.statistic:.2f}, p = {lb.p_value:.3f}")

# %%
# Forecasting integrates the differenced model back to the level.
fc = sarima.forecast(best, train, 4).map(np.exp)
for lab, lo, pt, hi in zip(fc.points.labels(), fc.lower.values, fc.points.values,
                           fc.upper.values):
    print(f"{lab}  {pt:10.0f}  [{lo:10.0f}, {hi:10.0f}]")
