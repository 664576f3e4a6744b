"""
LASSO with a cross-validated regularization constant
====================================================

Generate an hourly synthetic PV dataset, pick alpha by 10-fold CV on the
training split, and compare LASSO against plain least squares.
"""

import numpy as np

from solarcast import (SplitSpec, SynthSpec, alpha_grid, fit_lasso, fit_ols, generate,
                       kfold_indices, mse, predict, select_alpha, split, to_matrix)
from solarcast.dataio import WEATHER_KINDS

# irradiance plus two weather drivers; the 20 forecast-day columns are noise
spec = SynthSpec(n=4000, informative={"input1A": 0.004, "day1tempMaxF": 0.3, "windspeedKmph": -0.2},
                 noise_std=0.5, seed=0)
data, truth = generate(spec)
features = data.names_of_kind(*WEATHER_KINDS)

train_d, test_d = split(data, SplitSpec(0.6, seed=0))
train = to_matrix(train_d, features, data.target)
test = to_matrix(test_d, features, data.target)

########################################################################
# Cross-validation over a geometric alpha grid

folds = kfold_indices(train.n, 10, seed=0)
alpha_star, table = select_alpha(train, folds, alpha_grid(train, 100, 1e-3))
print(f"alpha* = {alpha_star:.4g}")

# a few rows of the CV table, largest alpha first
for row in table.rows[::20]:
    print(f"  alpha={row.alpha:10.4g}  cv_mse={row.cv_mse:.4f}")

########################################################################
# Test error of both estimators, and the refit on the selected support

lasso = fit_lasso(train, alpha_star)
ols = fit_ols(train)
print("LASSO test MSE:", mse(predict(lasso, test), test.y))
print("OLS   test MSE:", mse(predict(ols, test), test.y))

support = lasso.support
refit = fit_lasso(train.select(support), alpha_star)
print(f"{len(support)} selected features:", support)
print("refit test MSE:", mse(predict(refit, test.select(support)), test.y))
print("true support:  ", truth.support)
