"""K-fold cross-validation and selection of the LASSO regularization constant."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataio import FeatureMatrix
from .errors import BadFoldCount, ConstantTarget, SolarcastError
from .regression import FitOptions, fit_lasso, mse, predict, standardize


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    n: int
    k: int
    assignment: np.ndarray

    def __post_init__(self):
        a = np.array(self.assignment, dtype=np.intp)
        if a.shape != (self.n,):
            raise ValueError("assignment length must equal n")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise ValueError("fold ids must lie in [0, k)")
        a.flags.writeable = False
        object.__setattr__(self, "assignment", a)

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)


@dataclass(frozen=True)
class CvRow:
    alpha: float
    cv_mse: float
    fold_mses: tuple[float, ...]


@dataclass(frozen=True)
class CvTable:
    rows: tuple[CvRow, ...]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([r.alpha for r in self.rows])

    @property
    def cv_mses(self) -> np.ndarray:
        return np.array([r.cv_mse for r in self.rows])

    def to_csv(self) -> str:
        k = len(self.rows[0].fold_mses) if self.rows else 0
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["alpha", "cv_mse"] + [f"fold_{i}" for i in range(k)])
        for r in self.rows:
            writer.writerow([repr(r.alpha), repr(r.cv_mse)] + [repr(v) for v in r.fold_mses])
        return buf.getvalue()


def kfold_indices(n: int, k: int, seed: int = 0) -> FoldAssignment:
    """Seeded shuffle dealt round-robin into ``k`` folds of near-equal size."""
    if k < 2 or k > n:
        raise BadFoldCount(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.intp)
    assignment[perm] = np.arange(n) % k
    return FoldAssignment(n, k, assignment)


def alpha_max(M: FeatureMatrix) -> float:
    """Smallest alpha with an all-zero LASSO solution: ``max_j |z_j^T (y - ybar)| / n``."""
    Z, _ = standardize(M)
    return float(np.max(np.abs(Z.X.T @ Z.y)) / M.n)


def alpha_grid(M: FeatureMatrix, m: int = 100, eps: float = 1e-3) -> np.ndarray:
    """Geometric grid of ``m`` values from ``alpha_max`` down to ``eps * alpha_max``."""
    if m < 2:
        raise ValueError(f"grid needs m >= 2 points, got {m}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if np.ptp(M.y) == 0:
        raise ConstantTarget("target has zero variance")
    top = alpha_max(M)
    return top * eps ** (np.arange(m) / (m - 1))


def _fold_error(fold: int, err: SolarcastError) -> SolarcastError:
    return err.tag(fold=fold)


def cv_mse(M: FeatureMatrix, alpha: float, folds: FoldAssignment,
           opts: Optional[FitOptions] = None) -> tuple[float, np.ndarray]:
    """Mean held-out MSE of LASSO at ``alpha`` over the folds.

    Each fold's model standardizes on that fold's training rows only.
    """
    if folds.n != M.n:
        raise ValueError(f"fold assignment covers {folds.n} rows, matrix has {M.n}")
    scores = np.empty(folds.k)
    for f in range(folds.k):
        train, test = M.rows(folds.train_rows(f)), M.rows(folds.test_rows(f))
        try:
            model = fit_lasso(train, alpha, opts)
        except SolarcastError as err:
            raise _fold_error(f, err)
        scores[f] = mse(predict(model, test), test.y)
    return float(scores.mean()), scores


def select_alpha(M: FeatureMatrix, folds: FoldAssignment, grid: Sequence[float],
                 opts: Optional[FitOptions] = None) -> tuple[float, CvTable]:
    """Pick the grid alpha with the lowest CV error.

    Each fold walks the (strictly decreasing) grid with warm starts from the
    previous alpha's solution. Ties within 1e-15 go to the larger alpha.
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("alpha grid is empty")
    if np.any(np.diff(grid) >= 0):
        raise ValueError("alpha grid must be strictly decreasing")
    if folds.n != M.n:
        raise ValueError(f"fold assignment covers {folds.n} rows, matrix has {M.n}")

    scores = np.empty((grid.size, folds.k))
    for f in range(folds.k):
        train, test = M.rows(folds.train_rows(f)), M.rows(folds.test_rows(f))
        w = None
        for i, a in enumerate(grid):
            try:
                model = fit_lasso(train, a, opts, warm_start=w)
            except SolarcastError as err:
                raise _fold_error(f, err).tag(alpha=float(a))
            w = model.coefficients
            scores[i, f] = mse(predict(model, test), test.y)

    means = scores.mean(axis=1)
    best = int(np.flatnonzero(means <= means.min() + 1e-15)[0])
    table = CvTable(tuple(CvRow(float(a), float(means[i]), tuple(float(v) for v in scores[i]))
                          for i, a in enumerate(grid)))
    return float(grid[best]), table
