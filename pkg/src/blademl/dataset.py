"""Labeled feature datasets and deterministic stratified k-fold splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix, read_features_csv
from .rng import SplitMix64, shuffled_indices


@dataclass
class LabeledDataset:
    """Feature matrix with labels plus the class-name order used everywhere
    downstream (first-appearance order unless given explicitly)."""

    matrix: FeatureMatrix
    class_names: list[str]

    def __post_init__(self):
        if self.matrix.labels is None:
            raise ValueError("labeled dataset requires a label column")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be unique")
        known = set(self.class_names)
        for i, label in enumerate(self.matrix.labels):
            if label not in known:
                raise ValueError(f"row {i} label {label!r} not in class names")
        index = {name: j for j, name in enumerate(self.class_names)}
        self._y = np.array([index[label] for label in self.matrix.labels])

    @classmethod
    def from_matrix(cls, m: FeatureMatrix) -> "LabeledDataset":
        if m.labels is None:
            raise ValueError("labeled dataset requires a label column")
        seen: list[str] = []
        for label in m.labels:
            if label == "":
                raise ValueError("labeled dataset requires nonempty labels")
            if label not in seen:
                seen.append(label)
        return cls(m, seen)

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def X(self) -> np.ndarray:
        return self.matrix.values

    @property
    def y(self) -> np.ndarray:
        """Integer class index per row, aligned with class_names."""
        return self._y

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        """Row subset preserving this dataset's class-name order."""
        indices = np.asarray(indices)
        m = self.matrix
        sub = FeatureMatrix(
            [m.ids[i] for i in indices],
            [m.labels[i] for i in indices],
            m.columns,
            m.values[indices],
        )
        return LabeledDataset(sub, self.class_names)


def load_labeled_csv(path) -> LabeledDataset:
    """Load a features CSV whose label column is fully populated.

    Rows keep file order; class names are recorded in first-appearance
    order.  Missing ids, duplicate ids, and empty labels are each rejected
    with a distinct message.
    """
    m = read_features_csv(path)
    seen_ids = set()
    for i, row_id in enumerate(m.ids):
        if row_id == "":
            raise ValueError(f"{path}: missing id on data row {i + 1}")
        if row_id in seen_ids:
            raise ValueError(f"{path}: duplicate id {row_id!r} on data row {i + 1}")
        seen_ids.add(row_id)
    if m.labels is None:
        raise ValueError(f"{path}: empty label column")
    for i, label in enumerate(m.labels):
        if label == "":
            raise ValueError(f"{path}: empty label on data row {i + 1}")
    return LabeledDataset.from_matrix(m)


@dataclass
class FoldAssignment:
    """Fold index per row for k-fold cross-validation."""

    k: int
    fold_of: np.ndarray
    seed: int

    def __post_init__(self):
        self.fold_of = np.asarray(self.fold_of, dtype=np.int64)
        if self.k < 2:
            raise ValueError("fold count must be at least 2")
        if self.fold_of.size and (
            self.fold_of.min() < 0 or self.fold_of.max() >= self.k
        ):
            raise ValueError("fold indices must lie in [0, k)")

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def stratified_kfold(ds: LabeledDataset, k: int, seed: int) -> FoldAssignment:
    """Deterministic stratified split: per class (in class-name order), row
    indices are Fisher-Yates shuffled with one shared SplitMix64 stream and
    dealt round-robin to folds 0..k-1, so per-fold class counts differ from
    class_total / k by at most 1."""
    counts = np.bincount(ds.y, minlength=len(ds.class_names))
    smallest = int(counts.min())
    if k < 2:
        raise ValueError("fold count must be at least 2")
    if k > smallest:
        raise ValueError(
            f"k={k} exceeds the smallest class count ({smallest})"
        )
    rng = SplitMix64(seed)
    fold_of = np.empty(ds.n, dtype=np.int64)
    for c in range(len(ds.class_names)):
        class_rows = np.flatnonzero(ds.y == c)
        perm = shuffled_indices(len(class_rows), rng)
        for position, p in enumerate(perm):
            fold_of[class_rows[p]] = position % k
    return FoldAssignment(k, fold_of, seed)


def write_folds_csv(
    assignment: FoldAssignment, ids: list[str], path, metadata: dict | None = None
) -> None:
    """Export `id,fold` rows for auditability."""
    if len(ids) != assignment.fold_of.size:
        raise ValueError("ids and fold assignment must have equal length")
    with open(path, "w", newline="") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}: {value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "fold"])
        for row_id, fold in zip(ids, assignment.fold_of):
            writer.writerow([row_id, int(fold)])
