"""
How much data is needed?
========================

Draw repeated random samples of increasing size, fit OLS on a 60/40 split
of each, and watch the spread of the test MSE shrink.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from solarcast import SplitSpec, SynthSpec, generate, sweep_sample_size
from solarcast.dataio import WEATHER_KINDS

data, _ = generate(SynthSpec(n=5784, informative={"input1A": 0.004, "windspeedKmph": 0.5},
                             noise_std=0.5, seed=2))
features = data.names_of_kind(*WEATHER_KINDS)
sizes = [100, 250, 500, 1000, 2000, 3500, 5000]
result = sweep_sample_size(data, sizes, reps=20, seed=0, eval_spec=SplitSpec(0.6, 0),
                           features=features)
print(result.to_csv())

fig, ax = plt.subplots()
ax.errorbar(result.x, result.mse_mean, yerr=result.mse_std, fmt="o-", capsize=3)
ax.set_xscale("log")
ax.set_xlabel("sample size (rows)")
ax.set_ylabel("test MSE (mean ± std over 20 draws)")
fig.savefig("sample_size.png", dpi=120)
