import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solarcast.analysis import (KnockoutReport, KnockoutRow, SweepPoint, SweepResult,
                                derived_seed, knockout, rank_by_abs_coef, selected_features,
                                sweep_sample_size, sweep_top_k)
from solarcast.dataio import FeatureMatrix, SplitSpec, split, to_matrix
from solarcast.errors import SampleTooLarge
from solarcast.modelsel import alpha_max
from solarcast.regression import LinearModel, ScalingParams, fit_lasso, fit_ols, mse, predict
from solarcast.synthgen import SynthSpec, generate, random_matrix


def model_with(coefs, names=None):
    p = len(coefs)
    names = names or [f"f{j + 1}" for j in range(p)]
    return LinearModel(0.0, coefs, 0.0, names, ScalingParams(np.zeros(p), np.ones(p), 0.0))


def split_matrices(d, features, seed=0, fraction=0.6):
    train, test = split(d, SplitSpec(fraction, seed))
    return to_matrix(train, features, d.target), to_matrix(test, features, d.target)


def test_selected_features():
    assert selected_features(model_with([0.0, 0.0])) == []
    assert selected_features(model_with([0.0, 0.3, 0.0])) == ["f2"]
    assert selected_features(model_with([0.05, -0.3, 0.0]), tol=0.1) == ["f2"]
    M = random_matrix(0, 20, 3)
    assert selected_features(fit_lasso(M, alpha_max(M))) == []


def test_rank_by_abs_coef():
    assert rank_by_abs_coef(model_with([3.0, -5.0, 1.0]), 2) == ["f2", "f1"]
    assert rank_by_abs_coef(model_with([3.0, -5.0, 1.0]), 10) == ["f2", "f1", "f3"]
    assert rank_by_abs_coef(model_with([1.0, -1.0], ["zeta", "alpha"]), 2) == ["alpha", "zeta"]
    with pytest.raises(ValueError):
        rank_by_abs_coef(model_with([1.0]), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.floats(1e-3, 1e3))
def test_ranking_invariant_to_target_units(seed, c):
    M = random_matrix(seed, 40, 6)
    scaled = FeatureMatrix(M.X, c * M.y, M.feature_names)
    base, other = fit_ols(M), fit_ols(scaled)
    np.testing.assert_allclose(other.coefficients, c * base.coefficients,
                               rtol=1e-8, atol=1e-10 * c)
    gaps = np.diff(np.sort(np.abs(base.coefficients)))
    if gaps.min() > 1e-6 * np.abs(base.coefficients).max():
        assert rank_by_abs_coef(base, 6) == rank_by_abs_coef(other, 6)


def single_driver_data(seed, n=200):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    y = 3.0 * X[:, 0] + rng.standard_normal(n)
    M = FeatureMatrix(X, y, ["f1", "noise1", "noise2"])
    idx = rng.permutation(n)
    return M.rows(idx[:120]), M.rows(idx[120:])


def test_knockout_rows_and_baseline():
    train, test = single_driver_data(0)
    report = knockout(train, test, ["noise2", "f1", "noise1"])
    assert [r.rank for r in report.rows] == [1, 2, 3]
    assert report.ranking == ["noise2", "f1", "noise1"]
    ols = fit_ols(train)
    assert report.baseline_mse == mse(predict(ols, test), test.y)
    for r in report.rows:
        assert r.important == (r.delta > 0)
        assert r.delta == r.mse_without - report.baseline_mse


@pytest.mark.parametrize("seed", range(30))
def test_knockout_finds_single_driver(seed):
    train, test = single_driver_data(seed)
    report = knockout(train, test, ["f1", "noise1", "noise2"])
    deltas = {r.feature: r.delta for r in report.rows}
    assert deltas["f1"] > 0
    assert deltas["f1"] > max(deltas["noise1"], deltas["noise2"])


def test_knockout_zero_coefficient_on_orthogonal_design():
    # Hadamard columns: centred, mutually orthogonal, unit population std
    H = np.array([[1, 1, 1, 1, 1, 1, 1, 1], [1, -1, 1, -1, 1, -1, 1, -1],
                  [1, 1, -1, -1, 1, 1, -1, -1], [1, -1, -1, 1, 1, -1, -1, 1]], float).T
    X = H[:, 1:]
    M = FeatureMatrix(X, 2 * X[:, 0] - X[:, 1] + 5.0, ["a", "b", "c"])
    assert fit_ols(M).coefficients[2] == pytest.approx(0.0, abs=1e-12)
    report = knockout(M, M, ["a", "b", "c"])
    assert report.rows[2].delta == pytest.approx(0.0, abs=1e-10)


def test_knockout_single_feature_falls_back_to_mean():
    train, test = single_driver_data(1)
    report = knockout(train, test, ["f1"])
    assert report.rows[0].mse_without == pytest.approx(np.mean((test.y - train.y.mean()) ** 2))


def test_knockout_serialization():
    report = KnockoutReport(1.0, (KnockoutRow(1, "a", 2.0, 1.0), KnockoutRow(2, "b", 0.5, -0.5)))
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == ["rank", "feature", "mse_without", "delta", "important"]
    assert rows[1] == ["1", "a", "2.0", "1.0", "true"]
    assert rows[2][-1] == "false"
    data = json.loads(report.to_json())
    assert data["baseline_mse"] == 1.0 and data["important"] == ["a"]


def test_sweep_top_k_prefixes_and_baseline():
    train, test = single_driver_data(2)
    ranking = ["f1", "noise2", "noise1"]
    result = sweep_top_k(train, test, ranking, 3)
    assert result.x.tolist() == [1, 2, 3]
    assert [p.features for p in result.points] == [("f1",), ("f1", "noise2"), tuple(ranking)]
    assert all(p.reps == 1 and p.mse_std == 0 for p in result.points)
    assert result.points[-1].mse_mean == pytest.approx(
        knockout(train, test, ranking).baseline_mse, abs=1e-12)
    with pytest.raises(ValueError):
        sweep_top_k(train, test, ranking, 4)


def test_training_mse_non_increasing_in_k():
    M = random_matrix(3, 80, 8)
    ranking = rank_by_abs_coef(fit_ols(M), 8)
    # scoring on the training rows gives the in-sample curve
    curve = sweep_top_k(M, M, ranking, 8).mse_mean
    assert np.all(np.diff(curve) <= 1e-12)


def test_top_k_single_informative_feature():
    ratios = []
    for seed in range(30):
        d, _ = generate(SynthSpec(n=600, informative={"humidity": 2.0},
                                  nuisance=("visibility", "pressure", "precipMM"),
                                  noise_std=1.0, include_forecast_block=False, seed=seed))
        feats = [c for c in d.columns if c != d.target]
        train, test = split_matrices(d, feats, seed)
        ranking = rank_by_abs_coef(fit_ols(to_matrix(d, feats, d.target)), len(feats))
        assert ranking[0] == "humidity"
        curve = sweep_top_k(train, test, ranking, len(ranking)).mse_mean
        ratios.append(curve[0] / curve[-1])
    assert np.median(ratios) <= 1.05


def test_top_k_saturates_after_six():
    truth = {"humidity": 3.0, "visibility": 2.5, "day1tempMaxF": 2.0, "precipMM": 1.5,
             "day3windspeedMiles": 1.2, "pressure": 1.0}
    curves = []
    for seed in range(30):
        d, _ = generate(SynthSpec(n=800, informative=truth, nuisance=("cloudcover",),
                                  noise_std=1.0, seed=seed))
        feats = [c for c in d.columns if c != d.target]
        train, test = split_matrices(d, feats, seed)
        ranking = rank_by_abs_coef(fit_ols(to_matrix(d, feats, d.target)), len(feats))
        curves.append(sweep_top_k(train, test, ranking, len(ranking)).mse_mean)
    med = np.median(curves, axis=0)
    assert np.all(med[5:] <= 1.05 * med[-1])


def sweep_data(n=3000, seed=0):
    d, _ = generate(SynthSpec(n=n, informative={"humidity": 2.0, "visibility": 1.0},
                              nuisance=("pressure",), noise_std=1.0,
                              include_forecast_block=False, seed=seed))
    return d, [c for c in d.columns if c != d.target]


def test_sweep_sample_size_full_data_point():
    d, feats = sweep_data(500)
    spec = SplitSpec(0.6, 4)
    result = sweep_sample_size(d, [d.n], 1, seed=11, eval_spec=spec, features=feats)
    train, test = split_matrices(d, feats, seed=4)
    plain = mse(predict(fit_ols(train), test), test.y)
    assert len(result.points) == 1
    assert result.points[0].mse_mean == plain and result.points[0].mse_std == 0.0


def test_sweep_sample_size_dispersion_and_determinism():
    d, feats = sweep_data()
    args = dict(sizes=[60, 300, 2500], reps=20, seed=5, eval_spec=SplitSpec(0.6, 0),
                features=feats)
    a = sweep_sample_size(d, **args)
    assert a.mse_std[-1] < a.mse_std[0]
    assert all(p.reps == 20 for p in a.points)
    b = sweep_sample_size(d, **args)
    assert a.to_csv() == b.to_csv()
    with pytest.raises(SampleTooLarge):
        sweep_sample_size(d, [d.n + 1], 1, 0, SplitSpec(), features=feats)


def test_derived_seeds_distinct():
    seeds = {derived_seed(0, m, r) for m in (10, 20, 30) for r in range(5)}
    assert len(seeds) == 15
    assert derived_seed(1, 2, 3) == derived_seed(1, 2, 3)


def test_sweep_result_validation_and_csv():
    with pytest.raises(ValueError):
        SweepResult((SweepPoint(2, 1.0, 0.0, 1), SweepPoint(2, 1.0, 0.0, 1)))
    r = SweepResult((SweepPoint(1, 0.5, 0.1, 3), SweepPoint(4, 0.25, 0.0, 3)))
    assert r.to_csv() == "x,mse_mean,mse_std,reps\n1,0.5,0.1,3\n4,0.25,0.0,3\n"
