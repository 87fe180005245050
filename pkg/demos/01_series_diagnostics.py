"""
Loading a quarterly series and looking at its correlation structure
===================================================================

The bundled fixture is a GDP-like quarterly series from 1996-Q1 to
2019-Q4. We log it, difference it regularly and seasonally, and check
what a unit-root test and the correlograms say at each step.
"""

import numpy as np

from gdpcast.pipeline import FIXTURE
from gdpcast.series import acf, difference, log_transform, pacf, read_csv
from gdpcast.stattests import phillips_perron

gdp = read_csv(FIXTURE)
print(f"{len(gdp)} quarters, {gdp.labels()[0]} to {gdp.labels()[-1]}")

# %%
# The level has a trend and a strong quarterly pattern. On the log scale
# the Phillips-Perron test cannot reject a unit root; after differencing it
# rejects at 1%.
logged = log_transform(gdp)
for name, s in [("log level", logged),
                ("(1-B) log", difference(logged, d=1)),
                ("(1-B)(1-B^4) log", difference(logged, d=1, D=1, lag=4))]:
    res = phillips_perron(s)
    print(f"{name:18s} Z_alpha = {res.statistic:8.2f}  p = {res.p_value:.2f}  "
          f"reject at 5%: {res.reject_at[0.05]}")

# %%
# Correlograms of the doubly differenced series. The spike at lag 4 is the
# signature of a seasonal moving-average term.
w = difference(logged, d=1, D=1, lag=4)
band = 1.96 / np.sqrt(len(w))
r, p = acf(w, 12), pacf(w, 12)
print(f"\nlag   acf    pacf   (white-noise band +/- {band:.2f})")
for k in range(1, 13):
    flag = "*" if abs(r[k]) > band else " "
    print(f"{k:3d} {r[k]:6.2f}{flag} {p[k]:6.2f}")
