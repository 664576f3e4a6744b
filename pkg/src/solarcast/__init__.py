"""Regression and feature-importance toolkit for photovoltaic power prediction."""

from .analysis import (KnockoutReport, SweepResult, knockout, rank_by_abs_coef,
                       selected_features, sweep_sample_size, sweep_top_k)
from .dataio import (ColumnSchema, Dataset, FeatureMatrix, SplitSpec, clean, load_schema,
                     parse_csv, sample, split, to_matrix, write_csv)
from .modelsel import (CvTable, FoldAssignment, alpha_grid, alpha_max, cv_mse,
                       kfold_indices, select_alpha)
from .regression import (FitOptions, LinearModel, ScalingParams, fit_lasso, fit_ols, mse,
                         predict, soft_threshold, standardize)
from .synthgen import GroundTruth, SynthSpec, generate, kkt_residual, oracle_lasso

__version__ = "0.1.0"
