"""Battery regressions on panels built with known answers.

Run: python3 demos/battery_on_planted_data.py
"""
import numpy as np

from curvelab import TREASURY_GRID, YieldPanel
from curvelab.battery import pca, r2_by_maturity, spread_regression

rng = np.random.default_rng(0)
n = 200
level = 3 + np.cumsum(rng.normal(0, 0.1, n))
slope = np.cumsum(rng.normal(0, 0.05, n))
taus = TREASURY_GRID.array
curves = level[:, None] + slope[:, None] * (1 - np.exp(-taus / 5))

# two factors drive the curves, so the third component carries nothing
res = pca(curves)
print("PCA shares:", np.round(res.variance_proportions[:3], 6))

# a fitted curve equal to the data scores 100% everywhere
print("R2 by maturity:", np.round(100 * r2_by_maturity(curves, curves), 1))

# plant a slope of -0.5 for the 30y-3y spread against the 1y rate
i1, i3, i30 = (TREASURY_GRID.index(t) for t in (1, 3, 30))
planted = curves.copy()
planted[:, i30] = planted[:, i3] - 0.5 * planted[:, i1] + 1.0
dates = np.datetime64("2010-01-01") + 7 * np.arange(n)
fit = spread_regression(YieldPanel(dates, TREASURY_GRID, planted))
print(f"spread slope {fit.slope:.4f} (planted -0.5), residual se {fit.residual_se:.1e}")
