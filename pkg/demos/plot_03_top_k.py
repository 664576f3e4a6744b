"""
How many features are enough?
=============================

With six informative columns among thirty, the held-out MSE of OLS on the
top-k ranked features falls until k = 6 and is flat afterwards.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from solarcast import (SplitSpec, SynthSpec, fit_ols, generate, rank_by_abs_coef, split,
                       sweep_top_k, to_matrix)
from solarcast.dataio import WEATHER_KINDS

six = {"humidity": 3.0, "visibility": 2.5, "day1tempMaxF": 2.0, "precipMM": 1.5,
       "day3windspeedMiles": 1.2, "pressure": 1.0}
curves = []
for seed in range(10):
    data, _ = generate(SynthSpec(n=2000, informative=six,
                                 nuisance=("windspeedMiles", "windspeedKmph", "cloudcover",
                                           "tempF", "uvIndex"), noise_std=1.0, seed=seed))
    features = data.names_of_kind(*WEATHER_KINDS)
    train_d, test_d = split(data, SplitSpec(0.6, seed))
    ranking = rank_by_abs_coef(fit_ols(to_matrix(data, features, data.target)), 30)
    result = sweep_top_k(to_matrix(train_d, features, data.target),
                         to_matrix(test_d, features, data.target), ranking, 30)
    curves.append(result.mse_mean)

median = np.median(curves, axis=0)
print(np.round(median / median[-1], 3))

fig, ax = plt.subplots()
ax.plot(np.arange(1, 31), median, "o-")
ax.set_xlabel("number of top-ranked features k")
ax.set_ylabel("median test MSE")
fig.savefig("top_k.png", dpi=120)
