"""Linear estimators on standardized features.

Every fit z-scores the feature columns (population standard deviation) and
centres the target, so the intercept is unpenalized and coefficient
magnitudes are comparable across features measured in different units.
Coefficients are stored in that standardized space; ``coef_raw`` and
``intercept_raw`` give the original-unit form.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .dataio import FeatureMatrix
from .errors import (ConstantColumn, DidNotConverge, EmptyInput, FeatureMismatch,
                     LengthMismatch, NumericalFailure)


@dataclass(frozen=True)
class FitOptions:
    tol: float = 1e-6
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True, eq=False)
class ScalingParams:
    mean: np.ndarray
    scale: np.ndarray
    y_mean: float

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.mean


@dataclass(frozen=True, eq=False)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    alpha: float
    feature_names: tuple[str, ...]
    scaling: ScalingParams
    tol: Optional[float] = None
    iters: int = 0
    converged: bool = True
    objective_trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float).reshape(-1)
        if len(coef) != len(self.feature_names):
            raise ValueError("coefficients and feature_names differ in length")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        coef.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def coef_raw(self) -> np.ndarray:
        """Coefficients per original feature unit."""
        return self.coefficients / self.scaling.scale

    @property
    def intercept_raw(self) -> float:
        return float(self.intercept - self.coef_raw @ self.scaling.mean)

    @property
    def support(self) -> list[str]:
        return [n for n, w in zip(self.feature_names, self.coefficients) if w != 0]

    def to_dict(self) -> dict:
        return {
            "alpha": float(self.alpha),
            "intercept": float(self.intercept),
            "features": [
                {"name": name, "coef_std": float(w), "coef_raw": float(r)}
                for name, w, r in zip(self.feature_names, self.coefficients, self.coef_raw)
            ],
            "scaling": {
                "mean": [float(v) for v in self.scaling.mean],
                "scale": [float(v) for v in self.scaling.scale],
                "y_mean": float(self.scaling.y_mean),
            },
            "meta": {"tol": self.tol, "iters": int(self.iters),
                     "converged": bool(self.converged)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        scaling = ScalingParams(np.array(data["scaling"]["mean"], dtype=float),
                                np.array(data["scaling"]["scale"], dtype=float),
                                float(data["scaling"]["y_mean"]))
        meta = data.get("meta", {})
        return cls(intercept=float(data["intercept"]),
                   coefficients=[f["coef_std"] for f in data["features"]],
                   alpha=float(data["alpha"]),
                   feature_names=[f["name"] for f in data["features"]],
                   scaling=scaling,
                   tol=meta.get("tol"), iters=int(meta.get("iters", 0)),
                   converged=bool(meta.get("converged", True)))


def standardize(M: FeatureMatrix) -> tuple[FeatureMatrix, ScalingParams]:
    """Z-score every column of ``X`` and centre ``y``.

    Raises
    ------
    ConstantColumn
        If a feature has zero population standard deviation (relative to
        its magnitude), naming the first offending feature.
    """
    X = M.X
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    degenerate = scale <= 1e-13 * np.maximum(np.abs(mean), 1.0)
    if M.n == 0 or degenerate.any():
        j = int(np.flatnonzero(degenerate)[0]) if degenerate.any() else 0
        raise ConstantColumn(M.feature_names[j])
    y_mean = float(M.y.mean())
    Z = (X - mean) / scale
    return (FeatureMatrix(Z, M.y - y_mean, M.feature_names),
            ScalingParams(mean, scale, y_mean))


def lstsq_min_norm(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm least-squares solution via a complete orthogonal decomposition.

    Pivoted QR gives ``A P = Q R``; when the numerical rank ``r`` is below
    the column count, the leading ``r`` rows of ``R`` are factored once more
    (``R[:r]^T = Z T``) so that the solution lies in the row space of ``A``.
    Returns the solution and the numerical rank.
    """
    n, p = A.shape
    try:
        Q, R, perm = scipy.linalg.qr(A, mode="economic", pivoting=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"QR decomposition failed: {exc}") from None
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return np.zeros(p), 0
    rank = int(np.sum(diag > max(n, p) * np.finfo(float).eps * diag[0]))
    qtb = Q[:, :rank].T @ b
    if rank == p:
        u = scipy.linalg.solve_triangular(R[:p, :p], qtb)
    else:
        Z, T = np.linalg.qr(R[:rank, :].T)
        v = scipy.linalg.solve_triangular(T.T, qtb, lower=True)
        u = Z @ v
    x = np.empty(p)
    x[perm] = u
    if not np.all(np.isfinite(x)):
        raise NumericalFailure("least-squares solution is not finite")
    return x, rank


def fit_ols(M: FeatureMatrix, opts: Optional[FitOptions] = None) -> LinearModel:
    """Ordinary least squares on standardized features (minimum norm if rank deficient)."""
    if M.n < 1 or M.p < 1:
        raise EmptyInput("OLS needs at least one row and one feature")
    Z, scaling = standardize(M)
    w, _ = lstsq_min_norm(Z.X, Z.y)
    return LinearModel(scaling.y_mean, w, 0.0, M.feature_names, scaling,
                       tol=None, iters=1, converged=True)


def soft_threshold(z, gamma):
    """``sign(z) * max(|z| - gamma, 0)``; accepts scalars or arrays."""
    if np.any(np.asarray(gamma) < 0):
        raise ValueError("gamma must be non-negative")
    if np.ndim(z) == 0 and np.ndim(gamma) == 0:
        z = float(z)
        if z > gamma:
            return z - gamma
        if z < -gamma:
            return z + gamma
        return 0.0
    return np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)


def _kkt(grad: np.ndarray, w: np.ndarray, alpha: float) -> float:
    active = w != 0
    viol = np.where(active,
                    np.abs(grad - alpha * np.sign(w)),
                    np.maximum(np.abs(grad) - alpha, 0.0))
    return float(viol.max()) if viol.size else 0.0


def lasso_objective(Z: np.ndarray, yc: np.ndarray, w: np.ndarray, alpha: float) -> float:
    """``(1/2n)||yc - Z w||^2 + alpha ||w||_1`` in standardized space."""
    r = yc - Z @ w
    return float(r @ r / (2 * len(yc)) + alpha * np.abs(w).sum())


def fit_lasso(M: FeatureMatrix, alpha: float, opts: Optional[FitOptions] = None, *,
              warm_start: Optional[Sequence[float]] = None,
              record_objective: bool = False) -> LinearModel:
    """LASSO by cyclic coordinate descent with an unpenalized intercept.

    Minimizes ``(1/(2n))||y - b - Zw||^2 + alpha*||w||_1`` where ``Z`` is the
    standardized design. Coordinates are visited in ascending index order
    every sweep. The loop stops once the largest coefficient change in a
    sweep is below ``opts.tol`` and the KKT residual is at most
    ``10 * opts.tol``.

    Parameters
    ----------
    warm_start : array-like, optional
        Initial standardized coefficients (e.g. the previous point on a path).
    record_objective : bool
        Keep the objective value after every sweep in ``objective_trace``.

    Raises
    ------
    DidNotConverge
        After ``opts.max_iter`` sweeps; ``.model`` holds the last iterate.
    """
    opts = opts or FitOptions()
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if M.n < 1 or M.p < 1:
        raise EmptyInput("LASSO needs at least one row and one feature")
    Zm, scaling = standardize(M)
    Z, yc = Zm.X, Zm.y
    n, p = Z.shape

    # covariance updates: O(p) per coordinate step, independent of n
    G = Z.T @ Z / n
    c = Z.T @ yc / n
    w = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=float)
    if w.shape != (p,):
        raise ValueError(f"warm_start must have length {p}")
    grad = c - G @ w
    diag = np.diag(G).tolist()
    trace = [lasso_objective(Z, yc, w, alpha)] if record_objective else []

    kkt = np.inf
    converged = False
    sweeps = 0
    for sweeps in range(1, opts.max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            old = w[j]
            # soft-threshold update, inlined for speed
            z = grad[j] + diag[j] * old
            new = (z - alpha if z > alpha else z + alpha if z < -alpha else 0.0) / diag[j]
            delta = new - old
            if delta != 0.0:
                grad -= G[j] * delta
                w[j] = new
                max_delta = max(max_delta, abs(delta))
        if record_objective:
            trace.append(lasso_objective(Z, yc, w, alpha))
        if max_delta < opts.tol:
            grad = c - G @ w
            kkt = _kkt(grad, w, alpha)
            if kkt <= 10 * opts.tol:
                converged = True
                break

    model = LinearModel(scaling.y_mean, w, float(alpha), M.feature_names, scaling,
                        tol=opts.tol, iters=sweeps, converged=converged,
                        objective_trace=tuple(trace))
    if not converged:
        kkt = _kkt(c - G @ w, w, alpha)
        raise DidNotConverge(f"coordinate descent did not converge in {sweeps} sweeps "
                             f"(KKT residual {kkt:.3g})", model=model, kkt=kkt)
    return model


def _check_features(m: LinearModel, M: FeatureMatrix) -> None:
    if tuple(m.feature_names) != tuple(M.feature_names):
        diff = set(m.feature_names) ^ set(M.feature_names)
        raise FeatureMismatch(diff)


def predict(m: LinearModel, M: FeatureMatrix) -> np.ndarray:
    """Predictions in original target units."""
    _check_features(m, M)
    return m.intercept + m.scaling.transform(M.X) @ m.coefficients


def mse(pred, actual) -> float:
    pred = np.asarray(pred, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if len(pred) != len(actual):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(actual)} targets")
    if len(pred) == 0:
        raise EmptyInput("mse of empty vectors")
    err = pred - actual
    return float(err @ err / len(err))
