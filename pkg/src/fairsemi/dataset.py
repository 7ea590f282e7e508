"""Core data container, CSV ingestion, splitting and (A, Y) group partitioning."""
from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DataValueError,
    EmptyDataError,
    MissingLabelError,
    SchemaError,
    SplitError,
)

__all__ = [
    "Dataset",
    "GroupKey",
    "GPP",
    "GUP",
    "GPN",
    "GUN",
    "GROUP_ORDER",
    "SplitSpec",
    "IngestionSchema",
    "load_csv",
    "read_dataset_csv",
    "write_dataset_csv",
    "concat",
    "split_train_test",
    "partition_groups",
    "group_counts",
]


class GroupKey(NamedTuple):
    protected: int
    label: int

    @property
    def name(self) -> str:
        return _GROUP_NAMES[self]


GPP = GroupKey(1, 1)
GUP = GroupKey(0, 1)
GPN = GroupKey(1, 0)
GUN = GroupKey(0, 0)
GROUP_ORDER = (GPP, GUP, GPN, GUN)
_GROUP_NAMES = {GPP: "G_PP", GUP: "G_UP", GPN: "G_PN", GUN: "G_UN"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _binary(values, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DataValueError(f"{what} must be a 1-d vector, got shape {arr.shape}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise DataValueError(f"{what} values must be exactly 0 or 1")
    return _frozen(arr.astype(np.int64, copy=True))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus protected attribute and (optionally) labels.

    The protected attribute is kept apart from ``features``; learners only see
    it when explicitly asked to. ``row_ids`` track provenance so that leakage
    between train/test/unlabeled partitions can be audited.
    """

    features: np.ndarray
    protected: np.ndarray
    labels: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, max(len(self.feature_names), 1))
        if X.ndim != 2:
            raise DataValueError(f"features must be 2-d, got shape {X.shape}")
        n, d = X.shape
        if d < 1:
            raise DataValueError("need at least one feature column")
        if not np.all(np.isfinite(X)):
            raise DataValueError("features contain NaN or infinite values")
        object.__setattr__(self, "features", _frozen(X))

        a = _binary(self.protected, "protected")
        if a.shape[0] != n:
            raise DataValueError(f"protected has {a.shape[0]} rows, features have {n}")
        object.__setattr__(self, "protected", a)

        if self.labels is not None:
            y = _binary(self.labels, "labels")
            if y.shape[0] != n:
                raise DataValueError(f"labels have {y.shape[0]} rows, features have {n}")
            object.__setattr__(self, "labels", y)

        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(d))
        if len(names) != d:
            raise DataValueError(f"{len(names)} feature names for {d} columns")
        object.__setattr__(self, "feature_names", names)

        ids = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids)
        if ids.shape != (n,):
            raise DataValueError("row_ids must have one entry per row")
        object.__setattr__(self, "row_ids", _frozen(ids.astype(np.int64, copy=True)))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def __len__(self) -> int:
        return self.n_rows

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise MissingLabelError("operation requires a labeled dataset")
        return self.labels

    def subset(self, index) -> "Dataset":
        """Rows selected by an integer index array (duplicates allowed)."""
        idx = np.asarray(index, dtype=np.int64)
        return Dataset(
            self.features[idx],
            self.protected[idx],
            None if self.labels is None else self.labels[idx],
            self.feature_names,
            self.row_ids[idx],
        )

    def without_labels(self) -> "Dataset":
        return Dataset(self.features, self.protected, None, self.feature_names, self.row_ids)

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, self.protected, labels, self.feature_names, self.row_ids)

    def design_matrix(self, include_protected: bool = False) -> np.ndarray:
        """Features as seen by a learner, optionally with A appended as a column."""
        if include_protected:
            return np.column_stack([self.features, self.protected.astype(np.float64)])
        return self.features


def concat(datasets: Sequence[Dataset]) -> Dataset:
    """Stack datasets row-wise, in order. All must share the feature schema."""
    if not datasets:
        raise EmptyDataError("nothing to concatenate")
    names = datasets[0].feature_names
    for ds in datasets[1:]:
        if ds.feature_names != names:
            raise SchemaError(f"feature schema mismatch: {ds.feature_names} vs {names}")
    labeled = [ds.is_labeled for ds in datasets]
    if any(labeled) and not all(labeled):
        raise MissingLabelError("cannot concatenate labeled and unlabeled datasets")
    return Dataset(
        np.concatenate([ds.features for ds in datasets], axis=0),
        np.concatenate([ds.protected for ds in datasets]),
        np.concatenate([ds.labels for ds in datasets]) if all(labeled) else None,
        names,
        np.concatenate([ds.row_ids for ds in datasets]),
    )


@dataclass(frozen=True)
class SplitSpec:
    split_rate: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.split_rate < 1.0:
            raise SplitError(f"split_rate must lie in (0, 1), got {self.split_rate}")


def split_train_test(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Shuffle by seed and cut after ``floor(s * N)`` rows."""
    data.require_labels()
    n = data.n_rows
    n_train = math.floor(spec.split_rate * n)
    if n_train == 0 or n_train == n:
        raise SplitError(f"split of {n} rows at rate {spec.split_rate} leaves one side empty")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return data.subset(perm[:n_train]), data.subset(perm[n_train:])


def partition_groups(data: Dataset) -> dict[GroupKey, np.ndarray]:
    y = data.require_labels()
    a = data.protected
    return {key: np.flatnonzero((a == key.protected) & (y == key.label)) for key in GROUP_ORDER}


def group_counts(data: Dataset) -> tuple[int, int, int, int]:
    """Sizes of (G_PP, G_UP, G_PN, G_UN)."""
    y = data.require_labels()
    a = data.protected
    return tuple(int(np.count_nonzero((a == k.protected) & (y == k.label))) for k in GROUP_ORDER)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

_MISSING = ("", "?", "NA", "N/A", "NaN", "nan", "null")


def _str_tuple(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return tuple(str(v).strip() for v in value)


@dataclass(frozen=True)
class IngestionSchema:
    """How to turn a raw CSV into a :class:`Dataset`.

    ``protected_positive_value`` marks the protected group by equality;
    alternatively ``protected_threshold`` marks rows whose numeric value is
    ``>=`` the threshold. Several positive (or negative) label spellings may be
    given comma-separated, e.g. ``>50K, >50K.`` for the Adult test file.
    """

    protected_column: str
    label_column: str | None = None
    protected_positive_value: str | None = None
    protected_threshold: float | None = None
    positive_label_value: tuple[str, ...] = ("1",)
    negative_label_value: tuple[str, ...] = ()
    categorical_columns: tuple[str, ...] = ()
    drop_columns: tuple[str, ...] = ()
    missing_values: tuple[str, ...] = field(default=_MISSING)
    delimiter: str = ","

    KEYS = (
        "label_column",
        "protected_column",
        "protected_positive_value",
        "protected_threshold",
        "positive_label_value",
        "negative_label_value",
        "categorical_columns",
        "drop_columns",
        "missing_values",
        "delimiter",
    )

    def __post_init__(self):
        if (self.protected_positive_value is None) == (self.protected_threshold is None):
            raise SchemaError("give exactly one of protected_positive_value / protected_threshold")
        object.__setattr__(self, "positive_label_value", _str_tuple(self.positive_label_value))
        object.__setattr__(self, "negative_label_value", _str_tuple(self.negative_label_value))
        object.__setattr__(self, "categorical_columns", _str_tuple(self.categorical_columns))
        object.__setattr__(self, "drop_columns", _str_tuple(self.drop_columns))
        if not self.positive_label_value:
            raise SchemaError("positive_label_value must not be empty")
        if len(self.delimiter) != 1:
            raise SchemaError(f"delimiter must be one character, got {self.delimiter!r}")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, str]) -> "IngestionSchema":
        unknown = set(raw) - set(cls.KEYS)
        if unknown:
            raise SchemaError(f"unknown ingestion keys: {sorted(unknown)}")
        if "protected_column" not in raw:
            raise SchemaError("ingestion config must name protected_column")
        kw: dict = {k: raw[k] for k in raw}
        label = kw.get("label_column")
        if label is not None and label.strip().lower() in ("", "none"):
            kw["label_column"] = None
        if "protected_threshold" in kw:
            kw["protected_threshold"] = float(kw["protected_threshold"])
        if "missing_values" in kw:
            kw["missing_values"] = tuple(v.strip() for v in kw["missing_values"].split(","))
        return cls(**kw)

    @classmethod
    def from_file(cls, path: str | Path, section: str = "ingestion") -> "IngestionSchema":
        parser = configparser.ConfigParser(interpolation=None)
        if not parser.read(path):
            raise FileNotFoundError(path)
        if section not in parser:
            raise SchemaError(f"{path}: missing [{section}] section")
        return cls.from_mapping(dict(parser[section]))


def _read_rows(path: str | Path, delimiter: str = ",") -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataError(f"{path}: no header row") from None
        rows = [[c.strip() for c in row] for row in reader if row]
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataValueError(f"{path}: row {i + 1} has {len(row)} fields, header has {len(header)}")
    return header, rows


def load_csv(path: str | Path, schema: IngestionSchema) -> Dataset:
    """Read a CSV, drop incomplete rows, one-hot categoricals, z-score numerics."""
    header, rows = _read_rows(path, schema.delimiter)
    col = {name: j for j, name in enumerate(header)}
    needed = [schema.protected_column, *schema.categorical_columns, *schema.drop_columns]
    if schema.label_column is not None:
        needed.append(schema.label_column)
    for name in needed:
        if name not in col:
            raise SchemaError(f"{path}: column {name!r} not found (have {header})")

    missing = set(schema.missing_values)
    kept = [i for i, row in enumerate(rows) if not any(c in missing for c in row)]
    if not kept:
        raise EmptyDataError(f"{path}: no complete rows")
    rows = [rows[i] for i in kept]

    def column(name):
        return [r[col[name]] for r in rows]

    prot_raw = column(schema.protected_column)
    if schema.protected_threshold is not None:
        try:
            protected = [int(float(v) >= schema.protected_threshold) for v in prot_raw]
        except ValueError as exc:
            raise DataValueError(f"protected column is not numeric: {exc}") from None
    else:
        protected = [int(v == schema.protected_positive_value) for v in prot_raw]

    labels = None
    if schema.label_column is not None:
        labels = _map_labels(column(schema.label_column), schema)

    special = {schema.protected_column, schema.label_column, *schema.drop_columns}
    blocks, names = [], []
    for name in header:
        if name in special:
            continue
        values = column(name)
        if name in schema.categorical_columns:
            cats = sorted(set(values))
            onehot = np.array([[v == c for c in cats] for v in values], dtype=np.float64)
            blocks.append(onehot.reshape(len(values), len(cats)))
            names.extend(f"{name}={c}" for c in cats)
        else:
            try:
                x = np.array([float(v) for v in values])
            except ValueError:
                raise DataValueError(
                    f"column {name!r} is not numeric; list it under categorical_columns"
                ) from None
            sd = x.std()
            blocks.append(((x - x.mean()) / (sd if sd > 0 else 1.0))[:, None])
            names.append(name)
    if not blocks:
        raise SchemaError(f"{path}: no feature columns left after removing label/protected")
    return Dataset(np.hstack(blocks), protected, labels, tuple(names), kept)


def _map_labels(values: list[str], schema: IngestionSchema) -> list[int]:
    pos = set(schema.positive_label_value)
    if schema.negative_label_value:
        neg = set(schema.negative_label_value)
        bad = sorted(set(values) - pos - neg)
        if bad:
            raise DataValueError(f"label values outside the declared classes: {bad}")
    else:
        others = sorted(set(values) - pos)
        if len(others) > 1:
            raise DataValueError(f"label column is not binary: negative values {others}")
    return [int(v in pos) for v in values]


def write_dataset_csv(data: Dataset, path: str | Path) -> None:
    """Write in the package's own layout: features..., protected, label."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*data.feature_names, "protected", "label"])
        for i in range(data.n_rows):
            label = "" if data.labels is None else int(data.labels[i])
            w.writerow([*(repr(float(v)) for v in data.features[i]), int(data.protected[i]), label])


def read_dataset_csv(path: str | Path) -> Dataset:
    """Inverse of :func:`write_dataset_csv`; no re-standardization."""
    header, rows = _read_rows(path)
    if header[-2:] != ["protected", "label"]:
        raise SchemaError(f"{path}: expected trailing columns protected,label")
    if not rows:
        return Dataset(np.empty((0, len(header) - 2)), [], None, tuple(header[:-2]))
    X = np.array([[float(v) for v in r[:-2]] for r in rows])
    a = [int(r[-2]) for r in rows]
    raw = [r[-1] for r in rows]
    labeled = [v != "" for v in raw]
    if any(labeled) and not all(labeled):
        raise DataValueError(f"{path}: some rows are labeled and some are not")
    y = [int(v) for v in raw] if all(labeled) else None
    return Dataset(X, a, y, tuple(header[:-2]))

