import numpy as np
import pytest

from solarcast.dataio import FeatureMatrix, to_matrix
from solarcast.errors import FeatureMismatch, TooManyFeatures
from solarcast.modelsel import alpha_max
from solarcast.regression import (FitOptions, fit_lasso, fit_ols, lasso_objective,
                                  standardize)
from solarcast.synthgen import (IRRADIANCE, SynthSpec, forecast_columns, generate,
                                kkt_residual, oracle_lasso, random_matrix)


def test_noise_free_recovery():
    d, truth = generate(SynthSpec(n=200, informative={"f1": 2.0}, nuisance=("f2",),
                                  noise_std=0.0, include_forecast_block=False, seed=1))
    m = fit_ols(to_matrix(d, ["f1", "f2", IRRADIANCE], d.target))
    assert m.coef_raw[0] == pytest.approx(2.0, abs=1e-6)
    assert truth.coefficients == {"f1": 2.0} and truth.noise_std == 0.0


def test_irradiance_zero_at_night_and_positive_by_day():
    d, _ = generate(SynthSpec(n=24 * 10, seed=2))
    hours = (d.timestamps % 86400) / 3600
    irr = d.column(IRRADIANCE)
    night = (hours <= 6) | (hours >= 18)
    assert np.all(irr[night] == 0.0)
    assert np.all(irr[~night] > 0.0)
    assert irr.max() <= 1000.0


def test_generate_is_deterministic():
    spec = SynthSpec(n=150, feature_correlation=0.4, seed=7)
    a, _ = generate(spec)
    b, _ = generate(spec)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.timestamps.tobytes() == b.timestamps.tobytes()
    assert not np.array_equal(generate(SynthSpec(n=150, seed=8))[0].values, a.values)


def test_schema_layout():
    d, _ = generate(SynthSpec(n=5))
    kinds = {c.name: c.kind for c in d.schema}
    assert kinds["timestamp"] == "timestamp" and kinds["pvPower"] == "target"
    assert kinds[IRRADIANCE] == "irradiance"
    for name in forecast_columns():
        assert kinds[name] == "weather_forecast"
    assert kinds["humidity"] == "weather_current"
    units = {c.name: c.unit for c in d.schema}
    assert units["day3precipMM"] == "mm" and units["day1tempMaxF"] == "°F"
    assert units["windspeedMiles"] == "mph"
    assert np.all(np.diff(d.timestamps) == 3600.0)


def test_feature_correlation():
    d, _ = generate(SynthSpec(n=20000, informative={"a": 1.0}, nuisance=("b", "c"),
                              feature_correlation=0.5, include_forecast_block=False, seed=0))
    C = np.corrcoef(np.column_stack([d.column(n) for n in "abc"]).T)
    np.testing.assert_allclose(C[np.triu_indices(3, 1)], 0.5, atol=0.03)


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(informative={"a": 1.0}, nuisance=("a",))
    with pytest.raises(ValueError):
        SynthSpec(noise_std=-1)
    with pytest.raises(ValueError):
        SynthSpec(feature_correlation=1.0)


@pytest.mark.parametrize("seed", range(30))
def test_lasso_support_on_orthogonalized_noise_free_data(seed):
    truth = {"humidity": 2.0, "visibility": -1.0, "day2tempMinF": 0.7}
    d, gt = generate(SynthSpec(n=300, informative=truth, nuisance=("pressure", "precipMM"),
                               noise_std=0.0, seed=seed))
    feats = list(gt.support) + [c for c in d.columns if c not in truth and c != d.target]
    M = to_matrix(d, feats, d.target)
    # Gram-Schmidt with informative columns first keeps y in their span
    Xc = M.X - M.X.mean(axis=0)
    Q, _ = np.linalg.qr(Xc)
    y = M.y - M.y.mean()
    O = FeatureMatrix(Q * np.sqrt(M.n), y, feats)
    m = fit_lasso(O, 1e-3 * alpha_max(O))
    assert set(m.support) == set(truth)


# -- oracle --------------------------------------------------------------------

def test_oracle_alpha_zero_is_ols():
    M = random_matrix(3, 30, 3)
    np.testing.assert_allclose(oracle_lasso(M, 0.0).coefficients, fit_ols(M).coefficients,
                               atol=1e-5)


def test_oracle_zero_above_alpha_max():
    M = random_matrix(4, 25, 2)
    assert np.all(oracle_lasso(M, alpha_max(M) * 1.0001).coefficients == 0)


@pytest.mark.parametrize("seed", range(10))
def test_oracle_and_coordinate_descent_agree(seed):
    M = random_matrix(seed, 20, 2)
    ref = oracle_lasso(M, 0.1)
    fit = fit_lasso(M, 0.1, FitOptions(tol=1e-9))
    Z, _ = standardize(M)
    f_ref = lasso_objective(Z.X, Z.y, ref.coefficients, 0.1)
    f_fit = lasso_objective(Z.X, Z.y, fit.coefficients, 0.1)
    assert f_ref <= f_fit + 1e-8
    assert f_fit <= f_ref + 1e-8
    np.testing.assert_allclose(fit.coefficients, ref.coefficients, atol=1e-5)
    assert kkt_residual(ref, M, 0.1) <= 1e-5


def test_oracle_feature_limit():
    with pytest.raises(TooManyFeatures):
        oracle_lasso(random_matrix(0, 20, 4), 0.1)


# -- KKT residual ---------------------------------------------------------------

def test_kkt_of_ols_solution():
    M = random_matrix(6, 40, 3)
    assert kkt_residual(fit_ols(M), M, 0.0) <= 1e-10


def test_kkt_of_zero_model():
    M = random_matrix(6, 40, 3)
    a = alpha_max(M)
    assert kkt_residual(fit_lasso(M, a), M, a) == 0.0


def test_kkt_detects_suboptimal_model():
    M = random_matrix(6, 40, 3)
    m = fit_lasso(M, 0.0, FitOptions(tol=1e-10))
    a = 0.5 * alpha_max(M)
    assert kkt_residual(m, M, a) > 0.1 * a


def test_kkt_feature_mismatch():
    M = random_matrix(6, 40, 2)
    with pytest.raises(FeatureMismatch):
        kkt_residual(fit_ols(M), M.select(["f2", "f1"]), 0.1)
