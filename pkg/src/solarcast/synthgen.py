"""Synthetic weather/meter datasets with a known linear ground truth, and
brute-force oracles for checking the estimators.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .dataio import ColumnSchema, Dataset, FeatureMatrix
from .errors import FeatureMismatch, TooManyFeatures
from .regression import LinearModel, ScalingParams

TIMESTAMP = "timestamp"
IRRADIANCE = "input1A"
TARGET = "pvPower"

# 2016-06-29T00:00:00Z
START_EPOCH = 1467158400.0

FORECAST_DAYS = range(1, 6)
FORECAST_FIELDS = ("precipMM", "tempMaxF", "tempMinF", "windspeedMiles")

DAYLIGHT = (6.0, 18.0)
PEAK_IRRADIANCE = 1000.0

_UNITS = [
    (r"precipMM$", "mm"), (r"temp\w*F$", "°F"), (r"windspeedMiles$", "mph"),
    (r"windspeedKmph$", "km/h"), (r"humidity$", "%"), (r"pressure$", "mb"),
    (r"visibility$", "km"), (r"cloudcover$", "%"),
]


def forecast_columns() -> list[str]:
    return [f"day{d}{f}" for d in FORECAST_DAYS for f in FORECAST_FIELDS]


def _unit(name: str) -> str:
    for pattern, unit in _UNITS:
        if re.search(pattern, name):
            return unit
    return ""


def _kind(name: str) -> str:
    return "weather_forecast" if re.match(r"day\d", name) else "weather_current"


@dataclass(frozen=True)
class SynthSpec:
    n: int = 2000
    informative: Mapping[str, float] = field(
        default_factory=lambda: {IRRADIANCE: 0.005, "day1tempMaxF": 0.3})
    nuisance: Sequence[str] = ("precipMM", "visibility", "humidity", "windspeedMiles")
    noise_std: float = 0.5
    feature_correlation: float = 0.0
    include_forecast_block: bool = True
    seed: int = 0
    intercept: float = 1.0

    def __post_init__(self):
        overlap = set(self.informative) & set(self.nuisance)
        if overlap:
            raise ValueError(f"informative and nuisance overlap: {sorted(overlap)}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if not 0 <= self.feature_correlation < 1:
            raise ValueError("feature_correlation must lie in [0, 1)")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        reserved = {TIMESTAMP, TARGET} & (set(self.informative) | set(self.nuisance))
        if reserved:
            raise ValueError(f"reserved column names used: {sorted(reserved)}")

    def weather_columns(self) -> list[str]:
        names = [n for n in list(self.informative) + list(self.nuisance) if n != IRRADIANCE]
        if self.include_forecast_block:
            names += [n for n in forecast_columns() if n not in names]
        return names


@dataclass(frozen=True)
class GroundTruth:
    coefficients: dict
    intercept: float
    noise_std: float

    @property
    def support(self) -> list[str]:
        return list(self.coefficients)


def irradiance_profile(hours: np.ndarray, attenuation: np.ndarray) -> np.ndarray:
    """Half-sine over the daylight window scaled by ``1 - attenuation``; zero at night."""
    start, end = DAYLIGHT
    phase = (hours - start) / (end - start)
    out = PEAK_IRRADIANCE * np.sin(np.pi * phase) * (1.0 - attenuation)
    out[(hours <= start) | (hours >= end)] = 0.0
    return np.maximum(out, 0.0)


def generate(spec: SynthSpec) -> tuple[Dataset, GroundTruth]:
    """Hourly synthetic dataset plus the linear model that produced the target."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    timestamps = START_EPOCH + 3600.0 * np.arange(n)
    hours = (timestamps % 86400.0) / 3600.0

    weather = spec.weather_columns()
    rho = spec.feature_correlation
    common = rng.standard_normal(n)
    own = rng.standard_normal((n, len(weather)))
    W = np.sqrt(rho) * common[:, None] + np.sqrt(1 - rho) * own

    cloud = 1.0 / (1.0 + np.exp(-rng.standard_normal(n)))
    irr = irradiance_profile(hours, 0.75 * cloud)

    columns = {IRRADIANCE: irr}
    columns.update({name: W[:, j] for j, name in enumerate(weather)})
    y = spec.intercept + rng.normal(0.0, spec.noise_std, n) if spec.noise_std > 0 \
        else np.full(n, float(spec.intercept))
    for name, coef in spec.informative.items():
        y = y + coef * columns[name]

    schema = [ColumnSchema(TIMESTAMP, "timestamp", "s"),
              ColumnSchema(IRRADIANCE, "irradiance", "W/m²")]
    schema += [ColumnSchema(name, _kind(name), _unit(name)) for name in weather]
    schema.append(ColumnSchema(TARGET, "target", "kW"))
    values = np.column_stack([columns[c.name] for c in schema[1:-1]] + [y])
    truth = GroundTruth({k: float(v) for k, v in spec.informative.items()},
                        float(spec.intercept), float(spec.noise_std))
    return Dataset(tuple(schema), timestamps, values), truth


def random_matrix(seed: int, n: int, p: int, correlation: float = 0.0,
                  noise_std: float = 1.0) -> FeatureMatrix:
    """Small Gaussian regression problem with random coefficients and offsets."""
    rng = np.random.default_rng(seed)
    common = rng.standard_normal(n)
    X = np.sqrt(correlation) * common[:, None] + np.sqrt(1 - correlation) * rng.standard_normal((n, p))
    X = X * rng.uniform(0.5, 3.0, p) + rng.uniform(-5, 5, p)
    w = rng.normal(0.0, 2.0, p)
    y = X @ w + rng.normal() + noise_std * rng.standard_normal(n)
    return FeatureMatrix(X, y, tuple(f"f{j + 1}" for j in range(p)))


# -- oracles ---------------------------------------------------------------

def _standardized(M: FeatureMatrix):
    mean = M.X.mean(axis=0)
    scale = np.sqrt(((M.X - mean) ** 2).mean(axis=0))
    y_mean = M.y.mean()
    return (M.X - mean) / scale, M.y - y_mean, ScalingParams(mean, scale, float(y_mean))


def oracle_lasso(M: FeatureMatrix, alpha: float, resolution: float = 1e-8,
                 points: int = 21) -> LinearModel:
    """LASSO minimizer by iteratively refined grid search (``p <= 3``).

    The first box is centred on the least-squares solution with a half-width
    large enough to contain the LASSO minimizer (from ``f(w*) <= f(0)`` and
    the smallest eigenvalue of the Gram matrix). Each round evaluates the
    objective on a ``points**p`` lattice, recentres on the best lattice
    point and halves the box, until the lattice spacing is below
    ``resolution``. Coordinates whose zeroing does not raise the objective
    are then set exactly to zero.
    """
    p = M.p
    if p > 3:
        raise TooManyFeatures(f"oracle_lasso handles at most 3 features, got {p}")
    Z, yc, scaling = _standardized(M)
    n = M.n
    G = Z.T @ Z / n
    c = Z.T @ yc / n
    q0 = yc @ yc / (2 * n)

    def objective(W):
        # W has shape (m, p); quadratic form avoids an n-length pass per point
        return q0 - W @ c + 0.5 * np.einsum("ij,jk,ik->i", W, G, W) + alpha * np.abs(W).sum(axis=1)

    eig_min = float(np.linalg.eigvalsh(G)[0])
    if eig_min <= 1e-12:
        raise ValueError("oracle_lasso needs a full-rank design")
    w_ls = np.linalg.solve(G, c)
    gap = q0 - (q0 - c @ w_ls + 0.5 * w_ls @ G @ w_ls)
    half = np.sqrt(2 * max(gap, 0.0) / eig_min) * 1.01 + 1e-12
    centre = w_ls.copy()

    offsets = np.linspace(-1.0, 1.0, points)
    lattice = np.array(list(itertools.product(offsets, repeat=p)))
    while True:
        candidates = centre + half * lattice
        candidates = np.vstack([candidates, centre, np.zeros(p)])
        best = candidates[np.argmin(objective(candidates))]
        centre = best
        if 2 * half / (points - 1) < resolution:
            break
        half *= 0.5

    w = centre.copy()
    for j in range(p):
        trial = w.copy()
        trial[j] = 0.0
        if objective(trial[None])[0] <= objective(w[None])[0]:
            w = trial
    return LinearModel(scaling.y_mean, w, float(alpha), M.feature_names, scaling,
                       tol=resolution, iters=0, converged=True)


def kkt_residual(m: LinearModel, M: FeatureMatrix, alpha: float) -> float:
    """Largest violation of the LASSO optimality conditions for ``m`` on ``M``.

    Uses the model's own scaling, so ``M`` should be its training matrix.
    """
    if tuple(m.feature_names) != tuple(M.feature_names):
        raise FeatureMismatch(set(m.feature_names) ^ set(M.feature_names))
    Z = (M.X - m.scaling.mean) / m.scaling.scale
    r = M.y - m.intercept - Z @ m.coefficients
    g = Z.T @ r / M.n
    w = m.coefficients
    viol = np.where(w != 0, np.abs(g - alpha * np.sign(w)), np.maximum(np.abs(g) - alpha, 0.0))
    return float(viol.max())
