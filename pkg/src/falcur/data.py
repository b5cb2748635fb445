"""Tabular loading, preprocessing and pool splitting.

Raw CSVs are parsed as strings against a declared column schema, then turned
into a dense [0, 1] feature matrix with binary labels and sensitive-group
codes. Rows containing any missing token are dropped, categorical columns are
one-hot encoded and numeric columns are min-max scaled.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

COLUMN_KINDS = ("numeric", "categorical", "label", "sensitive")
DEFAULT_MISSING = frozenset({"", "NA", "NaN", "Null", "?"})


class SchemaError(ValueError):
    """CSV contents do not match the declared column schema."""


class EmptyDatasetError(ValueError):
    pass


@dataclass(frozen=True)
class RawTable:
    """Rows of strings in schema column order."""

    columns: tuple[tuple[str, str], ...]
    rows: tuple[tuple[str, ...], ...]
    missing_tokens: frozenset[str] = DEFAULT_MISSING

    def __post_init__(self):
        kinds = [kind for _, kind in self.columns]
        for kind in kinds:
            if kind not in COLUMN_KINDS:
                raise SchemaError(f"unknown column kind {kind!r}")
        if kinds.count("label") != 1:
            raise SchemaError("schema needs exactly one label column")
        if "sensitive" not in kinds:
            raise SchemaError("schema needs at least one sensitive column")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise SchemaError(f"row {i} has {len(row)} fields, expected {width}")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def column(self, name: str) -> list[str]:
        j = self.names.index(name)
        return [row[j] for row in self.rows]


@dataclass(frozen=True)
class Dataset:
    """Preprocessed data.

    ``s`` is the binary group code of the first sensitive column (protected
    value -> 1). ``groups`` holds integer codes for every sensitive column,
    one column per attribute, and is what fair clustering balances over.
    """

    X: np.ndarray
    y: np.ndarray
    s: np.ndarray
    groups: np.ndarray
    feature_names: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        n = self.X.shape[0]
        if self.y.shape != (n,) or self.s.shape != (n,) or self.groups.shape[0] != n:
            raise ValueError("X, y, s and groups must have matching row counts")
        if len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names length does not match X")
        if n and (self.X.min() < 0.0 or self.X.max() > 1.0):
            raise ValueError("features must lie in [0, 1]")
        if len(np.unique(self.s)) < 2:
            raise ValueError("sensitive attribute must take at least two values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.10
    test_frac: float = 0.20
    unlabeled_frac: float = 0.70
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.test_frac, self.unlabeled_frac)
        if min(fracs) <= 0:
            raise ValueError("split fractions must be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {sum(fracs)}, not 1")


@dataclass
class PoolState:
    """Labeled / unlabeled / test index sets for one active-learning run."""

    labeled: np.ndarray
    unlabeled: np.ndarray
    test: np.ndarray
    iteration: int = 0
    _n: int = field(default=-1, repr=False)

    def __post_init__(self):
        self.labeled = np.asarray(self.labeled, dtype=np.int64)
        self.unlabeled = np.asarray(self.unlabeled, dtype=np.int64)
        self.test = np.asarray(self.test, dtype=np.int64)
        if self._n < 0:
            self._n = len(self.labeled) + len(self.unlabeled) + len(self.test)
        self.check()

    def check(self):
        """Raise AssertionError unless the three sets partition 0..n-1."""
        allidx = np.concatenate([self.labeled, self.unlabeled, self.test])
        assert len(allidx) == self._n, "pool sets lost or gained indices"
        assert np.array_equal(np.sort(allidx), np.arange(self._n)), \
            "pool sets are not a disjoint cover of 0..n-1"

    def acquire(self, indices: Sequence[int]):
        """Move ``indices`` from the unlabeled pool to the labeled set."""
        idx = np.asarray(indices, dtype=np.int64)
        if len(np.unique(idx)) != len(idx):
            raise ValueError("duplicate indices in acquisition")
        in_pool = np.isin(idx, self.unlabeled)
        if not in_pool.all():
            raise ValueError(f"indices not in unlabeled pool: {idx[~in_pool].tolist()}")
        self.unlabeled = self.unlabeled[~np.isin(self.unlabeled, idx)]
        self.labeled = np.concatenate([self.labeled, idx])
        self.iteration += 1
        self.check()


def load_csv(path, schema: Mapping[str, str],
             missing_tokens: Iterable[str] = DEFAULT_MISSING) -> RawTable:
    """Read a UTF-8 CSV, keeping only the declared columns, in schema order.

    Header columns that the schema does not declare are ignored.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        missing = [name for name in schema if name not in header]
        if missing:
            raise SchemaError(f"header of {path} lacks declared columns {missing}")
        pos = [header.index(name) for name in schema]
        rows = []
        for i, row in enumerate(reader):
            if len(row) != len(header):
                raise SchemaError(
                    f"row {i} has {len(row)} fields, header has {len(header)}")
            rows.append(tuple(row[j] for j in pos))
    return RawTable(columns=tuple(schema.items()), rows=tuple(rows),
                    missing_tokens=frozenset(missing_tokens))


def preprocess(raw: RawTable, positive_label: str, protected_value: str,
               include_sensitive: bool = False) -> Dataset:
    """Drop missing rows, one-hot categoricals, min-max numerics.

    The label and sensitive columns are kept out of X unless
    ``include_sensitive`` is set, in which case sensitive columns are one-hot
    encoded into X as well.
    """
    rows = [r for r in raw.rows if not any(v.strip() in raw.missing_tokens for v in r)]
    dropped = len(raw.rows) - len(rows)
    if dropped:
        logger.info("dropped %d rows with missing values", dropped)
    if not rows:
        raise EmptyDatasetError("no rows left after removing missing values")

    names = raw.names
    kinds = [kind for _, kind in raw.columns]
    cols = {name: [r[j].strip() for r in rows] for j, name in enumerate(names)}

    label_name = names[kinds.index("label")]
    labels = cols[label_name]
    if positive_label not in labels:
        raise ValueError(f"positive label {positive_label!r} not found in {label_name!r}")
    y = np.array([v == positive_label for v in labels], dtype=np.int64)

    sens_names = [n for n, k in zip(names, kinds) if k == "sensitive"]
    if protected_value not in cols[sens_names[0]]:
        raise ValueError(
            f"protected value {protected_value!r} not found in {sens_names[0]!r}")
    s = np.array([v == protected_value for v in cols[sens_names[0]]], dtype=np.int64)
    groups = np.column_stack(
        [np.unique(cols[n], return_inverse=True)[1] for n in sens_names]).astype(np.int64)

    blocks, feature_names, notes = [], [], []
    for name, kind in zip(names, kinds):
        if kind == "numeric":
            try:
                v = np.array([float(x) for x in cols[name]])
            except ValueError as exc:
                raise ValueError(f"non-numeric value in column {name!r}: {exc}") from None
            lo, hi = v.min(), v.max()
            if hi > lo:
                v = (v - lo) / (hi - lo)
            else:
                notes.append(f"constant numeric column {name!r} mapped to zeros")
                logger.warning(notes[-1])
                v = np.zeros_like(v)
            blocks.append(v[:, None])
            feature_names.append(name)
        elif kind == "categorical" or (kind == "sensitive" and include_sensitive):
            values, inv = np.unique(cols[name], return_inverse=True)
            blocks.append(np.eye(len(values))[inv])
            feature_names.extend(f"{name}={v}" for v in values)

    X = np.hstack(blocks) if blocks else np.zeros((len(rows), 0))
    return Dataset(X=X, y=y, s=s, groups=groups, feature_names=tuple(feature_names),
                   warnings=tuple(notes))


def _floor(x: float) -> int:
    # guard against 0.1 * 30 landing a hair under 3
    return int(math.floor(x + 1e-9))


def split(ds: Dataset, spec: SplitSpec) -> PoolState:
    """Seeded uniform split; fractional remainders go to the unlabeled pool."""
    n = ds.n
    if n < 10:
        raise ValueError(f"need at least 10 rows to split, got {n}")
    n_train = _floor(n * spec.train_frac)
    n_test = _floor(n * spec.test_frac)
    n_unl = n - n_train - n_test
    if min(n_train, n_test, n_unl) <= 0:
        raise ValueError(f"split of {n} rows leaves an empty set "
                         f"({n_train}, {n_test}, {n_unl})")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return PoolState(labeled=perm[:n_train],
                     test=perm[n_train:n_train + n_test],
                     unlabeled=perm[n_train + n_test:])
