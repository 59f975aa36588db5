"""Labeled instance matrices, CSV ingestion and class bookkeeping."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._random import as_generator

SYNTHETIC_COLUMN = "synthetic"


class DataError(ValueError):
    """Base class for malformed or unusable input data."""


class MissingFileError(DataError, FileNotFoundError):
    pass


class RaggedRowError(DataError):
    pass


class NonNumericCellError(DataError):
    pass


class MissingValueError(DataError):
    pass


class TooFewRowsError(DataError):
    pass


class ClassCountError(DataError):
    """Raised when an operation needs exactly two non-empty classes."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix with dense integer labels.

    Parameters
    ----------
    X : array of shape (n_samples, n_features)
    y : integer array of shape (n_samples,)
        Dense ids ``0..C-1``; ``label_names[i]`` is the raw text of id ``i``.
    feature_names : column names for ``X``.
    label_names : raw label text indexed by label id.
    synthetic : boolean mask marking generated rows.
    label_column_name : header used for the label column on write.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()
    label_names: tuple[str, ...] = ()
    synthetic: np.ndarray | None = None
    label_column_name: str = "label"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {X.shape}")
        y = np.asarray(self.y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"y must be 1-D with {X.shape[0]} entries, got shape {y.shape}")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            raise DataError("labels must be integer ids")
        if X.shape[0] == 0:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        y = y.astype(np.int64)
        if y.min() < 0:
            raise DataError("label ids must be non-negative")
        n_labels = int(y.max()) + 1
        names = tuple(self.label_names) or tuple(str(i) for i in range(n_labels))
        if len(names) < n_labels:
            raise DataError(f"label_names has {len(names)} entries but ids reach {n_labels - 1}")
        features = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        if len(features) != X.shape[1]:
            raise DataError(f"{len(features)} feature names for {X.shape[1]} columns")
        synthetic = (
            np.zeros(X.shape[0], dtype=bool)
            if self.synthetic is None
            else np.asarray(self.synthetic, dtype=bool)
        )
        if synthetic.shape != y.shape:
            raise DataError("synthetic mask must match the number of rows")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "feature_names", features)
        object.__setattr__(self, "label_names", names)
        object.__setattr__(self, "synthetic", _frozen(synthetic))

    @property
    def size(self) -> int:
        return self.X.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def class_ids(self) -> frozenset[int]:
        return frozenset(int(c) for c in np.unique(self.y))

    def class_counts(self) -> dict[int, int]:
        ids, counts = np.unique(self.y, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            self.X[idx], self.y[idx], self.feature_names, self.label_names,
            self.synthetic[idx], self.label_column_name,
        )

    def with_features(self, X) -> "Dataset":
        return Dataset(
            X, self.y, self.feature_names, self.label_names, self.synthetic,
            self.label_column_name,
        )

    def append(self, X, label: int, synthetic: bool = True) -> "Dataset":
        """Return a copy with rows ``X`` labeled ``label`` appended."""
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.n_features)
        return Dataset(
            np.vstack([self.X, X]),
            np.concatenate([self.y, np.full(X.shape[0], label, dtype=np.int64)]),
            self.feature_names,
            self.label_names,
            np.concatenate([self.synthetic, np.full(X.shape[0], synthetic)]),
            self.label_column_name,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and self.feature_names == other.feature_names
            and self.label_names == other.label_names
            and np.array_equal(self.synthetic, other.synthetic)
        )

    __hash__ = None


@dataclass(frozen=True)
class ClassSplit:
    minority: Dataset
    majority: Dataset
    minority_label: int
    majority_label: int
    minority_indices: np.ndarray = field(repr=False)
    majority_indices: np.ndarray = field(repr=False)


def _resolve_column(header: list[str], label_column) -> int:
    if isinstance(label_column, str):
        if label_column not in header:
            raise DataError(f"label column {label_column!r} not in header {header}")
        return header.index(label_column)
    idx = int(label_column)
    if not -len(header) <= idx < len(header):
        raise DataError(f"label column index {idx} out of range for {len(header)} columns")
    return idx % len(header)


def _parse_bool(text: str, row: int) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise NonNumericCellError(f"row {row}: synthetic flag {text!r} is not a boolean")


def load_csv(path, label_column=None) -> Dataset:
    """Read a headed CSV into a :class:`Dataset`.

    ``label_column`` is a header name or an index; the default is the last
    column, ignoring a trailing ``synthetic`` flag column written by
    :func:`write_csv`. Labels are remapped to dense ids by first occurrence.
    Row numbers in error messages are 1-based file lines.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise TooFewRowsError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if len(body) < 2:
        raise TooFewRowsError(f"{path}: need at least 2 data rows, found {len(body)}")

    flag_col = len(header) - 1 if header[-1] == SYNTHETIC_COLUMN and len(header) > 2 else None
    if label_column is None:
        label_idx = len(header) - 2 if flag_col is not None else len(header) - 1
    else:
        label_idx = _resolve_column(header, label_column)
    if label_idx == flag_col:
        flag_col = None
    feat_cols = [i for i in range(len(header)) if i not in (label_idx, flag_col)]
    if not feat_cols:
        raise DataError(f"{path}: no feature columns")

    X = np.empty((len(body), len(feat_cols)))
    raw_labels: list[str] = []
    synthetic = np.zeros(len(body), dtype=bool)
    for r, row in enumerate(body):
        line = r + 2
        if len(row) != len(header):
            raise RaggedRowError(
                f"{path}: row {line} has {len(row)} cells, header has {len(header)}"
            )
        for j, c in enumerate(feat_cols):
            cell = row[c].strip()
            if cell == "":
                raise MissingValueError(f"{path}: row {line}, column {header[c]!r} is empty")
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCellError(
                    f"{path}: row {line}, column {header[c]!r}: {cell!r} is not numeric"
                ) from None
            if not math.isfinite(v):
                raise NonNumericCellError(
                    f"{path}: row {line}, column {header[c]!r}: {cell!r} is not finite"
                )
            X[r, j] = v
        label = row[label_idx].strip()
        if label == "":
            raise MissingValueError(f"{path}: row {line} has an empty label")
        raw_labels.append(label)
        if flag_col is not None:
            synthetic[r] = _parse_bool(row[flag_col], line)

    ids: dict[str, int] = {}
    y = np.array([ids.setdefault(lab, len(ids)) for lab in raw_labels], dtype=np.int64)
    return Dataset(
        X, y,
        feature_names=tuple(header[c] for c in feat_cols),
        label_names=tuple(ids),
        synthetic=synthetic,
        label_column_name=header[label_idx],
    )


def write_csv(dataset: Dataset, path, synthetic_column: bool = False, extra_columns=None) -> None:
    """Write ``dataset`` as CSV: features, label text, optional flag column.

    Floats are written with :func:`repr`, which round-trips exactly.
    ``extra_columns`` maps header names to per-row values appended at the end.
    """
    header = list(dataset.feature_names) + [dataset.label_column_name]
    extras = dict(extra_columns or {})
    if synthetic_column:
        header.append(SYNTHETIC_COLUMN)
    header.extend(extras)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(dataset.size):
            row = [repr(float(v)) for v in dataset.X[i]]
            row.append(dataset.label_names[dataset.y[i]])
            if synthetic_column:
                row.append("true" if dataset.synthetic[i] else "false")
            row.extend(str(col[i]) for col in extras.values())
            w.writerow(row)


def _binary_counts(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    ids, counts = np.unique(d.y, return_counts=True)
    if ids.size != 2:
        raise ClassCountError(f"expected exactly 2 classes, found {ids.size}")
    return ids, counts


def split_by_class(d: Dataset) -> ClassSplit:
    """Partition ``d`` into minority and majority classes.

    On equal counts the smaller label id is the minority.
    """
    ids, counts = _binary_counts(d)
    lo = 0 if counts[0] <= counts[1] else 1
    min_label, maj_label = int(ids[lo]), int(ids[1 - lo])
    min_idx = np.flatnonzero(d.y == min_label)
    maj_idx = np.flatnonzero(d.y == maj_label)
    return ClassSplit(
        d.subset(min_idx), d.subset(maj_idx), min_label, maj_label, min_idx, maj_idx
    )


def imbalance_degree(d: Dataset) -> float:
    """Ratio of majority to minority class size (>= 1)."""
    _, counts = _binary_counts(d)
    return float(counts.max() / counts.min())


def stratified_split(d: Dataset, test_fraction: float, random_state=None) -> tuple[Dataset, Dataset]:
    """Split per class so each class contributes ``round(count * test_fraction)``
    test rows, clamped so both sides keep at least one row of every class.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = as_generator(random_state)
    test_idx = []
    train_idx = []
    for label in sorted(d.class_ids):
        members = np.flatnonzero(d.y == label)
        if members.size < 2:
            raise ClassCountError(
                f"class {d.label_names[label]!r} has {members.size} instance(s); "
                "at least 2 are needed to stratify"
            )
        n_test = int(math.floor(members.size * test_fraction + 0.5))
        n_test = min(max(n_test, 1), members.size - 1)
        perm = rng.permutation(members)
        test_idx.append(perm[:n_test])
        train_idx.append(perm[n_test:])
    return d.subset(np.sort(np.concatenate(train_idx))), d.subset(np.sort(np.concatenate(test_idx)))
