"""Tabular ingestion: schema, CSV parsing, cleaning, splitting and sampling.

A :class:`Dataset` holds one timestamp vector plus a dense float array with
one column per non-timestamp schema entry. Missing cells are ``NaN``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .errors import (BadTimestamp, DataError, EmptyAfterClean, MissingColumn,
                     NonMonotonicTimestamps, SampleTooLarge, SchemaError,
                     TargetInFeatures, TooFewRows, UnknownFeature)

KINDS = ("weather_current", "weather_forecast", "meter", "irradiance",
         "target", "timestamp")

# Feature kinds used when the caller asks for "all weather" inputs.
WEATHER_KINDS = ("weather_current", "weather_forecast", "irradiance")


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    unit: str = ""

    def __post_init__(self):
        if not self.name:
            raise SchemaError("column name must be non-empty")
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")


def validate_schema(schema: Iterable[ColumnSchema]) -> tuple[ColumnSchema, ...]:
    schema = tuple(schema)
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate column names: {dupes}")
    for kind in ("target", "timestamp"):
        count = sum(c.kind == kind for c in schema)
        if count != 1:
            raise SchemaError(f"schema needs exactly one {kind} column, found {count}")
    return schema


def load_schema(path: Union[str, os.PathLike]) -> tuple[ColumnSchema, ...]:
    """Read a JSON list of ``{name, kind, unit}`` objects."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: expected a JSON list")
    try:
        cols = [ColumnSchema(str(c["name"]), str(c["kind"]), str(c.get("unit", "")))
                for c in raw]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: malformed column entry ({exc})") from None
    return validate_schema(cols)


def schema_to_json(schema: Sequence[ColumnSchema]) -> str:
    items = [{"name": c.name, "kind": c.kind, "unit": c.unit} for c in schema]
    return json.dumps(items, indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of timestamped records.

    ``values[:, j]`` holds the ``j``-th non-timestamp column of ``schema``.
    ``timestamps`` are seconds since the Unix epoch (UTC).
    """

    schema: tuple[ColumnSchema, ...]
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        schema = validate_schema(self.schema)
        ts = np.array(self.timestamps, dtype=float).reshape(-1)
        vals = np.array(self.values, dtype=float)
        ncol = len(schema) - 1
        if vals.size == 0:
            vals = vals.reshape(len(ts), ncol)
        if vals.shape != (len(ts), ncol):
            raise SchemaError(f"values shape {vals.shape} does not match "
                              f"{len(ts)} rows x {ncol} columns")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            row = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 1
            raise NonMonotonicTimestamps(row)
        ts.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.timestamps)

    def __len__(self):
        return self.n

    @property
    def columns(self) -> list[str]:
        """Names of the value columns, in ``values`` order."""
        return [c.name for c in self.schema if c.kind != "timestamp"]

    @property
    def target(self) -> str:
        return next(c.name for c in self.schema if c.kind == "target")

    @property
    def timestamp_name(self) -> str:
        return next(c.name for c in self.schema if c.kind == "timestamp")

    def names_of_kind(self, *kinds: str) -> list[str]:
        return [c.name for c in self.schema if c.kind in kinds]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise UnknownFeature(name) from None
        return self.values[:, j]

    def take(self, rows) -> "Dataset":
        """Subset by row indices; indices are sorted so time order is kept."""
        rows = np.sort(np.asarray(rows, dtype=np.intp))
        return Dataset(self.schema, self.timestamps[rows], self.values[rows])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.schema == other.schema
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.values, other.values, equal_nan=True))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        names = tuple(self.feature_names)
        if X.shape != (len(y), len(names)):
            raise ValueError(f"X shape {X.shape} inconsistent with {len(y)} targets "
                             f"and {len(names)} names")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("FeatureMatrix entries must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        """Column subset in the order given."""
        index = {name: j for j, name in enumerate(self.feature_names)}
        missing = [name for name in names if name not in index]
        if missing:
            raise UnknownFeature(missing[0])
        cols = [index[name] for name in names]
        return FeatureMatrix(self.X[:, cols], self.y, tuple(names))

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureMatrix(self.X[idx], self.y[idx], self.feature_names)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


# -- parsing ---------------------------------------------------------------

def _parse_iso(text: str) -> float:
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    stamp = datetime.fromisoformat(text)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def _parse_timestamps(cells: list[str]) -> np.ndarray:
    # epoch seconds if the first cell is numeric, ISO-8601 otherwise;
    # the chosen format must hold for every row
    if not cells:
        return np.empty(0)
    try:
        float(cells[0])
        parse = float
    except ValueError:
        parse = _parse_iso
    out = np.empty(len(cells))
    for i, cell in enumerate(cells):
        try:
            value = parse(cell.strip())
        except (ValueError, TypeError):
            raise BadTimestamp(i + 1, cell) from None
        if not math.isfinite(value):
            raise BadTimestamp(i + 1, cell)
        out[i] = value
    return out


def _to_float(cell: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


def parse_csv(source: Union[bytes, str, os.PathLike, IO], schema: Sequence[ColumnSchema]) -> Dataset:
    """Parse a CSV with a header row into a :class:`Dataset`.

    ``source`` may be raw bytes, a path, or an open (binary or text) file.
    Unparseable or empty numeric cells become missing values; extra header
    columns not named in ``schema`` are ignored.
    """
    schema = validate_schema(schema)
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8-sig")
    elif isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8-sig", newline="") as fh:
            text = fh.read()
    else:
        raw = source.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumn(schema[0].name) from None
    position = {name: i for i, name in enumerate(header)}
    for col in schema:
        if col.name not in position:
            raise MissingColumn(col.name)

    records = [row for row in reader if row]
    for i, row in enumerate(records):
        if len(row) < len(header):
            row.extend([""] * (len(header) - len(row)))

    ts_name = next(c.name for c in schema if c.kind == "timestamp")
    ts_pos = position[ts_name]
    timestamps = _parse_timestamps([row[ts_pos] for row in records])
    bad = np.flatnonzero(np.diff(timestamps) <= 0)
    if bad.size:
        raise NonMonotonicTimestamps(int(bad[0]) + 2)

    value_cols = [position[c.name] for c in schema if c.kind != "timestamp"]
    values = np.array([[_to_float(row[j]) for j in value_cols] for row in records],
                      dtype=float).reshape(len(records), len(value_cols))
    return Dataset(schema, timestamps, values)


def _format_float(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def format_timestamp(ts: float) -> str:
    stamp = datetime.fromtimestamp(ts, tz=timezone.utc)
    text = stamp.replace(tzinfo=None).isoformat()
    return text + "Z"


def write_csv(d: Dataset, dest: Union[str, os.PathLike, IO]) -> None:
    """Write ``d`` in the format :func:`parse_csv` reads (ISO timestamps)."""
    names = [c.name for c in d.schema]
    value_index = {name: j for j, name in enumerate(d.columns)}
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for i in range(d.n):
        row = []
        for col in d.schema:
            if col.kind == "timestamp":
                row.append(format_timestamp(d.timestamps[i]))
            else:
                row.append(_format_float(d.values[i, value_index[col.name]]))
        writer.writerow(row)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        dest.write(buf.getvalue())


# -- transformations -------------------------------------------------------

def clean(d: Dataset, policy: str = "drop_rows") -> tuple[Dataset, int]:
    """Drop incomplete rows. Returns the cleaned dataset and the drop count."""
    if policy != "drop_rows":
        raise ValueError(f"unsupported missing-data policy {policy!r}")
    keep = ~np.any(np.isnan(d.values), axis=1)
    dropped = int(d.n - keep.sum())
    if d.n and not keep.any():
        raise EmptyAfterClean(f"all {d.n} rows contain missing values")
    if dropped == 0:
        return d, 0
    return d.take(np.flatnonzero(keep)), dropped


def train_size(n: int, train_fraction: float) -> int:
    # half-up rounding, kept inside [1, n-1] so neither side is empty
    size = int(math.floor(train_fraction * n + 0.5))
    return min(max(size, 1), n - 1)


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sorted train/test row indices from a seeded shuffle."""
    if n < 2:
        raise TooFewRows(f"split needs at least 2 rows, got {n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    m = train_size(n, spec.train_fraction)
    return np.sort(perm[:m]), np.sort(perm[m:])


def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    train, test = split_indices(d.n, spec)
    return d.take(train), d.take(test)


def sample(d: Dataset, m: int, seed: int) -> Dataset:
    """``m`` distinct rows drawn uniformly without replacement, in time order."""
    if m > d.n:
        raise SampleTooLarge(f"sample of {m} rows requested from {d.n}")
    if m < 1:
        raise ValueError(f"sample size must be >= 1, got {m}")
    rows = np.random.default_rng(seed).choice(d.n, size=m, replace=False)
    return d.take(rows)


def to_matrix(d: Dataset, features: Sequence[str], target: str) -> FeatureMatrix:
    features = list(features)
    if not features:
        raise ValueError("at least one feature is required")
    if target in features:
        raise TargetInFeatures(f"target {target!r} listed among features")
    cols = d.columns
    for name in features + [target]:
        if name not in cols:
            raise UnknownFeature(name)
    index = [cols.index(name) for name in features]
    block = d.values[:, index + [cols.index(target)]]
    if not np.all(np.isfinite(block)):
        raise DataError("missing values in selected columns; clean the dataset first")
    return FeatureMatrix(d.values[:, index], d.column(target), tuple(features))
