"""Calibrating a GBM from an hourly series with daily and weekly cycles.

A synthetic demand series is written to CSV, read back, deseasonalised with
the demand frequency preset and fitted.  The fitted tables can be pasted
into a scenario file.
"""
import tempfile
from pathlib import Path

import numpy as np

from recgame import GbmSpec
from recgame.calibration import FREQUENCIES, HourlySeries, calibrate, fragment, read_csv, write_csv
from recgame.simulation import simulate_gbm

true = GbmSpec(0.25, -0.5 * 0.01**2, 0.01)
n = 24 * 365
t = np.arange(n)
daily, weekly = FREQUENCIES["demand"][:2]
season = 0.2 * np.sin(2 * np.pi * daily * t) + 0.05 * np.cos(2 * np.pi * weekly * t)
x = simulate_gbm(true, n, seed=7) * np.exp(season)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demand.csv"
    write_csv(HourlySeries(x, name="demand"), path)
    series = read_csv(path)

res = calibrate(series, FREQUENCIES["demand"])
print(f"true sigma {true.volatility}, fitted {res.sigma_hat:.5f}")
print(f"true mu {true.drift:.2e}, 95% CI [{res.mu_ci[0]:.2e}, {res.mu_ci[1]:.2e}]")
print()
print(fragment({"demand": res}))
