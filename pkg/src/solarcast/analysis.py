"""Feature-selection and importance experiments built on the estimators.

All refits here are OLS; rankings come from standardized coefficient
magnitudes.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataio import Dataset, FeatureMatrix, SplitSpec, sample, split, to_matrix
from .errors import SampleTooLarge, SolarcastError
from .regression import FitOptions, LinearModel, fit_ols, mse, predict


def selected_features(m: LinearModel, tol: float = 0.0) -> list[str]:
    """Features whose standardized coefficient exceeds ``tol`` in magnitude."""
    return [name for name, w in zip(m.feature_names, m.coefficients) if abs(w) > tol]


def rank_by_abs_coef(m: LinearModel, k: int) -> list[str]:
    """Top ``min(k, p)`` features by ``|coef|``, ties broken by name."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    order = sorted(zip(m.feature_names, np.abs(m.coefficients)),
                   key=lambda item: (-item[1], item[0]))
    return [name for name, _ in order[:k]]


def _test_mse(train: FeatureMatrix, test: FeatureMatrix, names: Sequence[str],
              opts: Optional[FitOptions]) -> float:
    sub_train, sub_test = train.select(names), test.select(names)
    model = fit_ols(sub_train, opts)
    return mse(predict(model, sub_test), sub_test.y)


@dataclass(frozen=True)
class KnockoutRow:
    rank: int
    feature: str
    mse_without: float
    delta: float

    @property
    def important(self) -> bool:
        return self.delta > 0


@dataclass(frozen=True)
class KnockoutReport:
    baseline_mse: float
    rows: tuple[KnockoutRow, ...]

    @property
    def ranking(self) -> list[str]:
        return [r.feature for r in self.rows]

    @property
    def important_features(self) -> list[str]:
        return [r.feature for r in self.rows if r.important]

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "feature", "mse_without", "delta", "important"])
        for r in self.rows:
            writer.writerow([r.rank, r.feature, repr(r.mse_without), repr(r.delta),
                             "true" if r.important else "false"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "baseline_mse": self.baseline_mse,
            "ranking": self.ranking,
            "important": self.important_features,
            "rows": [{"rank": r.rank, "feature": r.feature, "mse_without": r.mse_without,
                      "delta": r.delta, "important": r.important} for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def knockout(train: FeatureMatrix, test: FeatureMatrix, ranking: Sequence[str],
             opts: Optional[FitOptions] = None) -> KnockoutReport:
    """Leave-one-feature-out OLS refits scored on ``test``.

    ``baseline_mse`` uses every feature in ``ranking``; row ``i`` drops the
    ``i``-th ranked feature. A positive ``delta`` marks the feature important.
    """
    ranking = list(ranking)
    baseline = _test_mse(train, test, ranking, opts)
    rows = []
    for i, name in enumerate(ranking):
        rest = ranking[:i] + ranking[i + 1:]
        if not rest:
            # nothing left to regress on: predict the training mean
            without = mse(np.full(test.n, train.y.mean()), test.y)
        else:
            try:
                without = _test_mse(train, test, rest, opts)
            except SolarcastError as err:
                raise err.tag(knocked_out=name)
        rows.append(KnockoutRow(i + 1, name, without, without - baseline))
    return KnockoutReport(baseline, tuple(rows))


@dataclass(frozen=True)
class SweepPoint:
    x: int
    mse_mean: float
    mse_std: float
    reps: int
    features: tuple[str, ...] = ()


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]

    def __post_init__(self):
        xs = [p.x for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("sweep x values must be strictly increasing")

    @property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def mse_mean(self) -> np.ndarray:
        return np.array([p.mse_mean for p in self.points])

    @property
    def mse_std(self) -> np.ndarray:
        return np.array([p.mse_std for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "mse_mean", "mse_std", "reps"])
        for p in self.points:
            writer.writerow([p.x, repr(p.mse_mean), repr(p.mse_std), p.reps])
        return buf.getvalue()


def sweep_top_k(train: FeatureMatrix, test: FeatureMatrix, ranking: Sequence[str],
                k_max: int, opts: Optional[FitOptions] = None) -> SweepResult:
    """Test MSE of OLS on the top-``k`` prefix of ``ranking`` for ``k = 1..k_max``."""
    ranking = list(ranking)
    if not 1 <= k_max <= len(ranking):
        raise ValueError(f"k_max must lie in [1, {len(ranking)}], got {k_max}")
    points = []
    for k in range(1, k_max + 1):
        names = tuple(ranking[:k])
        try:
            value = _test_mse(train, test, names, opts)
        except SolarcastError as err:
            raise err.tag(k=k)
        points.append(SweepPoint(k, value, 0.0, 1, names))
    return SweepResult(tuple(points))


def derived_seed(seed: int, *keys: int) -> int:
    """Independent, reproducible child seed for one sweep cell."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def sweep_sample_size(d: Dataset, sizes: Sequence[int], reps: int, seed: int,
                      eval_spec: SplitSpec, opts: Optional[FitOptions] = None, *,
                      features: Sequence[str], target: Optional[str] = None) -> SweepResult:
    """Test-MSE mean and spread versus random sample size.

    For every size ``m`` and repetition ``r`` a sample of ``m`` rows is drawn
    with seed ``derived_seed(seed, m, r)``, split by ``eval_spec`` and scored
    with an OLS fit. ``mse_std`` is the population standard deviation over
    repetitions.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    sizes = sorted(int(m) for m in sizes)
    if sizes and sizes[-1] > d.n:
        raise SampleTooLarge(f"sample size {sizes[-1]} exceeds {d.n} rows")
    target = target or d.target
    points = []
    for m in sizes:
        scores = np.empty(reps)
        for r in range(reps):
            sub = sample(d, m, derived_seed(seed, m, r))
            train, test = split(sub, eval_spec)
            try:
                scores[r] = _test_mse(to_matrix(train, features, target),
                                      to_matrix(test, features, target), features, opts)
            except SolarcastError as err:
                raise err.tag(size=m, rep=r)
        points.append(SweepPoint(m, float(scores.mean()), float(scores.std()), reps))
    return SweepResult(tuple(points))
