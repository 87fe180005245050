"""
Holt-Winters: additive or multiplicative?
=========================================

Both seasonal forms are fitted to the log series by minimising the
one-step sum of squared errors; the smaller SSE wins. The winner then
forecasts three years ahead with normal prediction intervals.
"""

import numpy as np

from gdpcast.holtwinters import hw_forecast, hw_optimize
from gdpcast.pipeline import FIXTURE
from gdpcast.series import log_transform, read_csv

gdp = read_csv(FIXTURE)
train = log_transform(gdp.window(None, (2016, 4)))

fits = {m: hw_optimize(train, m) for m in ("additive", "multiplicative")}
for method, fit in fits.items():
    p = fit.params
    print(f"{method:15s} alpha={p.alpha:.3f} beta={p.beta:.3f} gamma={p.gamma:.3f} "
          f"SSE={fit.sse:.6f}")
best = min(fits.values(), key=lambda f: f.sse)
print(f"selected: {best.params.method}")

# %%
# The forecast is made on the log scale and mapped back with ``exp``,
# which keeps the interval bounds ordered.
fc = hw_forecast(best, 12, level=0.95).map(np.exp)
held_out = gdp.window((2017, 1), None)
for lab, lo, pt, hi, obs in zip(fc.points.labels(), fc.lower.values, fc.points.values,
                                fc.upper.values, held_out.values):
    inside = "yes" if lo <= obs <= hi else "no"
    print(f"{lab}  {lo:10.0f} {pt:10.0f} {hi:10.0f}   observed {obs:10.0f}  inside: {inside}")
