"""
Knockout importance of the top-ranked features
==============================================

Rank features by the magnitude of their standardized OLS coefficient, then
refit with each one left out and see how much the held-out MSE rises.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from solarcast import (SplitSpec, SynthSpec, fit_ols, generate, knockout, rank_by_abs_coef,
                       split, to_matrix)
from solarcast.dataio import WEATHER_KINDS

data, truth = generate(SynthSpec(n=3000, informative={"input1A": 0.004, "day1tempMaxF": 0.3},
                                 nuisance=("precipMM", "visibility", "windspeedMiles",
                                           "windspeedKmph", "humidity"),
                                 noise_std=0.5, seed=1))
features = data.names_of_kind(*WEATHER_KINDS)
whole = to_matrix(data, features, data.target)
train_d, test_d = split(data, SplitSpec(0.6, seed=1))
train = to_matrix(train_d, features, data.target)
test = to_matrix(test_d, features, data.target)

ranking = rank_by_abs_coef(fit_ols(whole), 25)
report = knockout(train, test, ranking)

print(f"baseline test MSE with all {len(ranking)} features: {report.baseline_mse:.4f}")
for row in report.rows:
    flag = "*" if row.important else " "
    print(f"{row.rank:3d} {flag} {row.feature:20s} {row.mse_without:.4f}")

########################################################################
# MSE without feature k, against the baseline

fig, ax = plt.subplots()
ax.plot([r.rank for r in report.rows], [r.mse_without for r in report.rows], "o-")
ax.axhline(report.baseline_mse, ls="--", color="gray")
ax.set_xlabel("k")
ax.set_ylabel("test MSE without feature k")
fig.savefig("knockout.png", dpi=120)
