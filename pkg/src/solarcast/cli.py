"""``solarcast`` command line.

Every subcommand reads a JSON run configuration, applies command-line
overrides, and writes CSV/JSON tables (plus SVG charts) into the output
directory. Exit codes: 2 configuration error, 3 data error, 4 numerical error.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import _svg
from .analysis import (knockout, rank_by_abs_coef, selected_features, sweep_sample_size,
                       sweep_top_k)
from .dataio import (WEATHER_KINDS, Dataset, FeatureMatrix, SplitSpec, clean, load_schema,
                     parse_csv, schema_to_json, split, to_matrix, write_csv)
from .errors import ConfigError, DataError, SolarcastError
from .modelsel import alpha_grid, alpha_max, kfold_indices, select_alpha
from .regression import FitOptions, LinearModel, fit_lasso, fit_ols, mse, predict
from .synthgen import SynthSpec, generate

log = logging.getLogger("solarcast")


@dataclass
class RunConfig:
    data_path: Optional[str] = None
    schema_path: Optional[str] = None
    target: Optional[str] = None
    features: Union[str, list] = "all_weather"
    train_fraction: float = 0.6
    folds: int = 10
    alpha: Union[str, float] = "cv"
    alphas: Optional[list] = None
    grid_size: int = 100
    grid_eps: float = 1e-3
    top_k: int = 25
    k_max: int = 30
    sizes: Optional[list] = None
    reps: int = 10
    seed: int = 0
    tol: float = 1e-6
    max_iter: int = 10_000
    smooth_window: int = 3
    bins: int = 20
    output_dir: str = "out"

    def validate(self) -> "RunConfig":
        for name in ("folds", "top_k", "k_max", "reps", "max_iter", "smooth_window",
                     "bins", "grid_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if not 0 < self.grid_eps < 1:
            raise ConfigError(f"grid_eps must lie in (0, 1), got {self.grid_eps}")
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError(f"tol must be positive, got {self.tol!r}")
        if self.alpha != "cv" and not (isinstance(self.alpha, (int, float)) and self.alpha >= 0):
            raise ConfigError(f'alpha must be "cv" or a non-negative number, got {self.alpha!r}')
        if self.features != "all_weather" and not (
                isinstance(self.features, list) and self.features
                and all(isinstance(f, str) for f in self.features)):
            raise ConfigError('features must be "all_weather" or a non-empty list of names')
        if self.sizes is not None and not (
                self.sizes and all(isinstance(m, int) and m >= 1 for m in self.sizes)):
            raise ConfigError("sizes must be a non-empty list of positive integers")
        if self.alphas is not None:
            grid = np.asarray(self.alphas, dtype=float)
            if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) >= 0):
                raise ConfigError("alphas must be a non-empty, strictly decreasing list")
        if self.data_path is None or self.schema_path is None:
            raise ConfigError("data_path and schema_path are required")
        return self

    @property
    def fit_options(self) -> FitOptions:
        return FitOptions(tol=float(self.tol), max_iter=int(self.max_iter))

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(float(self.train_fraction), int(self.seed))


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    base = Path(path).resolve().parent
    for key in ("data_path", "schema_path", "output_dir"):
        if isinstance(raw.get(key), str):
            raw[key] = str(base / raw[key])
    return RunConfig(**raw)


# -- output ----------------------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# -- shared pipeline steps -------------------------------------------------

@dataclass
class Prepared:
    data: Dataset
    dropped: int
    features: list
    target: str
    whole: FeatureMatrix
    train: FeatureMatrix
    test: FeatureMatrix


def _read_dataset(cfg: RunConfig) -> Dataset:
    try:
        schema = load_schema(cfg.schema_path)
    except OSError as exc:
        raise DataError(f"cannot read schema: {exc}") from None
    try:
        with open(cfg.data_path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read data: {exc}") from None
    return parse_csv(raw, schema)


def _resolve_features(cfg: RunConfig, d: Dataset, target: str) -> list:
    if cfg.features != "all_weather":
        return list(cfg.features)
    names = [n for n in d.names_of_kind(*WEATHER_KINDS) if n != target]
    keep = []
    for name in names:
        col = d.column(name)
        if np.ptp(col) == 0:
            log.warning("dropping constant feature %s", name)
        else:
            keep.append(name)
    if not keep:
        raise DataError("no usable weather features in dataset")
    return keep


def prepare(cfg: RunConfig) -> Prepared:
    raw = _read_dataset(cfg)
    data, dropped = clean(raw)
    if dropped:
        log.warning("dropped %d of %d rows with missing values", dropped, raw.n)
    target = cfg.target or data.target
    features = _resolve_features(cfg, data, target)
    train_d, test_d = split(data, cfg.split_spec)
    return Prepared(data, dropped, features, target,
                    to_matrix(data, features, target),
                    to_matrix(train_d, features, target),
                    to_matrix(test_d, features, target))


def _alpha_grid(cfg: RunConfig, M: FeatureMatrix) -> np.ndarray:
    if cfg.alphas is not None:
        return np.asarray(cfg.alphas, dtype=float)
    if cfg.grid_size == 1:
        return np.array([alpha_max(M)])
    return alpha_grid(M, cfg.grid_size, cfg.grid_eps)


def _run_cv(cfg: RunConfig, M: FeatureMatrix):
    folds = kfold_indices(M.n, min(cfg.folds, M.n), cfg.seed)
    return select_alpha(M, folds, _alpha_grid(cfg, M), cfg.fit_options)


def _scores(model: LinearModel, prep: Prepared, whole_model: LinearModel) -> dict:
    return {
        "train_mse": mse(predict(model, prep.train), prep.train.y),
        "test_mse": mse(predict(model, prep.test), prep.test.y),
        "whole_mse": mse(predict(whole_model, prep.whole), prep.whole.y),
    }


def _ranking(cfg: RunConfig, prep: Prepared, k: int) -> list:
    full = fit_ols(prep.whole, cfg.fit_options)
    if k > prep.whole.p:
        log.warning("requested %d features but only %d available; clamping", k, prep.whole.p)
    return rank_by_abs_coef(full, k)


def _base_meta(cfg: RunConfig, prep: Prepared) -> dict:
    return {"n_rows": prep.data.n, "dropped_rows": prep.dropped,
            "n_train": prep.train.n, "n_test": prep.test.n,
            "train_fraction": cfg.train_fraction, "seed": cfg.seed,
            "target": prep.target, "features": prep.features}


# -- commands --------------------------------------------------------------

def cmd_fit(cfg: RunConfig) -> dict:
    prep = prepare(cfg)
    out = Path(cfg.output_dir)
    opts = cfg.fit_options
    metrics = _base_meta(cfg, prep)

    ols = fit_ols(prep.train, opts)
    metrics["ols"] = _scores(ols, prep, fit_ols(prep.whole, opts))

    if cfg.alpha == "cv":
        alpha, table = _run_cv(cfg, prep.train)
        write_atomic(out / "cv_table.csv", table.to_csv())
        metrics["alpha_star"] = alpha
        metrics["cv_table"] = "cv_table.csv"
    else:
        alpha = float(cfg.alpha)
    lasso = fit_lasso(prep.train, alpha, opts)
    lasso_scores = _scores(lasso, prep, fit_lasso(prep.whole, alpha, opts))
    chosen = selected_features(lasso)
    lasso_scores.update(alpha=alpha, selected=chosen)
    if chosen:
        refit = fit_lasso(prep.train.select(chosen), alpha, opts)
        lasso_scores["refit_test_mse"] = mse(predict(refit, prep.test.select(chosen)), prep.test.y)
    metrics["lasso"] = lasso_scores

    write_atomic(out / "model_ols.json", ols.to_json())
    write_atomic(out / "model_lasso.json", lasso.to_json())
    write_atomic(out / "metrics.json", _dump(metrics))
    return metrics


def cmd_cv(cfg: RunConfig) -> dict:
    prep = prepare(cfg)
    out = Path(cfg.output_dir)
    alpha, table = _run_cv(cfg, prep.train)
    write_atomic(out / "cv_table.csv", table.to_csv())
    summary = {"alpha_star": alpha, "folds": min(cfg.folds, prep.train.n),
               "grid": [r.alpha for r in table.rows], "cv_table": "cv_table.csv"}
    write_atomic(out / "cv.json", _dump(summary))
    return summary


def cmd_knockout(cfg: RunConfig) -> dict:
    prep = prepare(cfg)
    out = Path(cfg.output_dir)
    ranking = _ranking(cfg, prep, cfg.top_k)
    report = knockout(prep.train, prep.test, ranking, cfg.fit_options)
    write_atomic(out / "knockout.csv", report.to_csv())
    write_atomic(out / "knockout.json", report.to_json())
    svg = _svg.chart("Importance analysis: MSE vs k", "k (rank of knocked-out feature)",
                     "test MSE", [{"x": [r.rank for r in report.rows],
                                   "y": [r.mse_without for r in report.rows],
                                   "label": "MSE without feature k"}],
                     hline=(report.baseline_mse, f"baseline {report.baseline_mse:.4g}"))
    write_atomic(out / "knockout.svg", svg)
    return report.to_dict()


def _sweep_svg(result, title, xlabel, window) -> str:
    series = [{"x": list(result.x), "y": list(result.mse_mean), "label": "test MSE",
               "style": "both"}]
    note = None
    if window > 1:
        series.append({"x": list(result.x), "y": list(_svg.moving_average(result.mse_mean, window)),
                       "label": f"moving average (w={window})", "style": "line"})
        note = f"smoothing: centred moving average, window {window}"
    ribbons = []
    if np.any(result.mse_std > 0):
        ribbons.append({"x": list(result.x), "lo": list(result.mse_mean - result.mse_std),
                        "hi": list(result.mse_mean + result.mse_std)})
    return _svg.chart(title, xlabel, "test MSE", series, note=note, ribbons=ribbons)


def cmd_sweep_k(cfg: RunConfig) -> dict:
    prep = prepare(cfg)
    out = Path(cfg.output_dir)
    ranking = _ranking(cfg, prep, cfg.k_max)
    result = sweep_top_k(prep.train, prep.test, ranking, len(ranking), cfg.fit_options)
    write_atomic(out / "sweep_k.csv", result.to_csv())
    write_atomic(out / "sweep_k.json", _dump({
        "ranking": ranking,
        "points": [{"k": p.x, "mse": p.mse_mean, "features": list(p.features)}
                   for p in result.points]}))
    write_atomic(out / "sweep_k.svg", _sweep_svg(
        result, "MSE versus number of weather features", "k (top-ranked features)",
        cfg.smooth_window))
    return {"ranking": ranking, "mse": list(result.mse_mean)}


def default_sizes(n: int) -> list:
    top = n
    bottom = min(100, top)
    return sorted({int(round(v)) for v in np.geomspace(bottom, top, 8)})


def cmd_sweep_n(cfg: RunConfig) -> dict:
    prep = prepare(cfg)
    out = Path(cfg.output_dir)
    sizes = cfg.sizes or default_sizes(prep.data.n)
    result = sweep_sample_size(prep.data, sizes, cfg.reps, cfg.seed, cfg.split_spec,
                               cfg.fit_options, features=prep.features, target=prep.target)
    write_atomic(out / "sweep_n.csv", result.to_csv())
    write_atomic(out / "sweep_n.svg", _sweep_svg(
        result, "MSE versus random sample size", "sample size (rows)", cfg.smooth_window))
    return {"sizes": sizes, "mse_mean": list(result.mse_mean), "mse_std": list(result.mse_std)}


def bin_predictions(pred_kw, measured_kw, bins: int = 20) -> list:
    """Group measured values (in W) into equal-width bins; summarize predictions per bin.

    Returns one dict per non-empty bin with ``bin_lo``, ``bin_hi``,
    ``bin_center``, ``count``, ``pred_mean`` and ``pred_std`` (all in W).
    """
    pred = np.asarray(pred_kw, dtype=float) * 1000.0
    meas = np.asarray(measured_kw, dtype=float) * 1000.0
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo, hi = float(meas.min()), float(meas.max())
    if hi == lo:
        edges = np.array([lo - 0.5, hi + 0.5])
    else:
        edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, meas, side="right") - 1, 0, len(edges) - 2)
    rows = []
    for b in range(len(edges) - 1):
        members = pred[idx == b]
        if members.size == 0:
            continue
        rows.append({"bin_lo": float(edges[b]), "bin_hi": float(edges[b + 1]),
                     "bin_center": float((edges[b] + edges[b + 1]) / 2),
                     "count": int(members.size), "pred_mean": float(members.mean()),
                     "pred_std": float(members.std())})
    return rows


def cmd_report(cfg: RunConfig) -> dict:
    prep = prepare(cfg)
    out = Path(cfg.output_dir)
    model = fit_ols(prep.train, cfg.fit_options)
    pred = predict(model, prep.test)
    rows = bin_predictions(pred, prep.test.y, cfg.bins)
    header = "bin_lo_w,bin_hi_w,bin_center_w,count,pred_mean_w,pred_std_w\n"
    body = "".join(f"{r['bin_lo']!r},{r['bin_hi']!r},{r['bin_center']!r},{r['count']},"
                   f"{r['pred_mean']!r},{r['pred_std']!r}\n" for r in rows)
    write_atomic(out / "pred_vs_measured.csv", header + body)
    centers = [r["bin_center"] for r in rows]
    means = np.array([r["pred_mean"] for r in rows])
    stds = np.array([r["pred_std"] for r in rows])
    svg = _svg.chart("Predicted vs measured PV power", "measured (W, bin centre)", "predicted (W)",
                     [{"x": centers, "y": list(means), "label": "bin mean prediction"},
                      {"x": centers, "y": centers, "label": "ideal", "style": "line"}],
                     ribbons=[{"x": centers, "lo": list(means - stds), "hi": list(means + stds)}])
    write_atomic(out / "pred_vs_measured.svg", svg)
    return {"bins": rows, "test_mse": mse(pred, prep.test.y)}


def cmd_synth(args: argparse.Namespace) -> dict:
    informative = {}
    if args.informative:
        for item in args.informative.split(","):
            name, sep, coef = item.partition("=")
            if not sep:
                raise ConfigError(f"--informative entries must be name=coef, got {item!r}")
            try:
                informative[name.strip()] = float(coef)
            except ValueError:
                raise ConfigError(f"bad coefficient in {item!r}") from None
    defaults = SynthSpec()
    nuisance = tuple(s.strip() for s in args.nuisance.split(",") if s.strip()) \
        if args.nuisance is not None else defaults.nuisance
    try:
        spec = SynthSpec(n=args.n, informative=informative or defaults.informative,
                         nuisance=nuisance, noise_std=args.noise_std,
                         feature_correlation=args.correlation,
                         include_forecast_block=args.forecast_block,
                         seed=args.seed if args.seed is not None else 0,
                         intercept=args.intercept)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    data, truth = generate(spec)
    out = Path(args.out or "synth")
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO(newline="")
    write_csv(data, buf)
    write_atomic(out / "data.csv", buf.getvalue())
    write_atomic(out / "schema.json", schema_to_json(data.schema))
    write_atomic(out / "truth.json", _dump({"coefficients": truth.coefficients,
                                            "intercept": truth.intercept,
                                            "noise_std": truth.noise_std}))
    write_atomic(out / "config.json", _dump({"data_path": "data.csv",
                                             "schema_path": "schema.json",
                                             "seed": spec.seed, "output_dir": "results"}))
    return {"rows": data.n, "columns": data.columns}


COMMANDS = {
    "fit": cmd_fit, "cv": cmd_cv, "knockout": cmd_knockout,
    "sweep-k": cmd_sweep_k, "sweep-n": cmd_sweep_n, "report": cmd_report,
}


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _alpha_arg(text: str):
    if text == "cv":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'alpha must be "cv" or a number, got {text!r}')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solarcast",
                                     description="PV power regression and feature-importance runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", dest="output_dir")
        p.add_argument("--data", dest="data_path")
        p.add_argument("--schema", dest="schema_path")
        p.add_argument("--target")
        p.add_argument("--features", type=lambda s: [v.strip() for v in s.split(",") if v.strip()])
        p.add_argument("--train-fraction", dest="train_fraction", type=float)
        p.add_argument("--folds", type=int)
        p.add_argument("--alpha", type=_alpha_arg)
        p.add_argument("--grid-size", dest="grid_size", type=int)
        p.add_argument("--top-k", dest="top_k", type=int)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--sizes", type=_int_list)
        p.add_argument("--reps", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--smooth-window", dest="smooth_window", type=int)
        p.add_argument("--bins", type=int)

    s = sub.add_parser("synth")
    s.add_argument("--config", help="ignored; accepted for a uniform invocation")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--n", type=int, default=SynthSpec.n)
    s.add_argument("--informative", help="comma-separated name=coef pairs")
    s.add_argument("--nuisance", help="comma-separated feature names")
    s.add_argument("--noise-std", dest="noise_std", type=float, default=SynthSpec.noise_std)
    s.add_argument("--correlation", type=float, default=SynthSpec.feature_correlation)
    s.add_argument("--intercept", type=float, default=SynthSpec.intercept)
    s.add_argument("--forecast-block", dest="forecast_block",
                   action=argparse.BooleanOptionalAction, default=True)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> dict:
    """Parse ``argv`` and execute; raises :class:`SolarcastError` on failure."""
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        return cmd_synth(args)
    cfg = load_config(args.config)
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    cfg = replace(cfg, **overrides).validate()
    return COMMANDS[args.command](cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="solarcast: %(levelname)s: %(message)s",
                        stream=sys.stderr)
    try:
        run(argv)
    except SolarcastError as err:
        print(f"solarcast: error: {err}", file=sys.stderr)
        return err.exit_code
    except TypeError as err:
        # malformed config values that slipped past validation
        print(f"solarcast: error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
