"""Dataset container and batch preparation steps for model training.

All functions are pure: they take a Dataset and return a new one plus a
report of what changed, never mutating the input. Feature matrices are
float64 numpy arrays; labels are an optional 0/1 int vector.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, NoLabels, SingleClass


@dataclass
class Dataset:
    feature_names: list[str]
    rows: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {self.rows.shape}")
        if self.rows.shape[1] != len(self.feature_names):
            raise ValueError(
                f"{self.rows.shape[1]} columns vs {len(self.feature_names)} feature names"
            )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if len(self.labels) != len(self.rows):
                raise ValueError("labels length must match row count")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def take(self, indices: np.ndarray) -> "Dataset":
        labels = self.labels[indices] if self.labels is not None else None
        return Dataset(list(self.feature_names), self.rows[indices], labels)


@dataclass
class PreprocessReport:
    duplicates_removed: int = 0
    values_imputed: int = 0
    outlier_rows_removed: int = 0
    features_kept: list[str] = field(default_factory=list)
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "duplicates_removed": self.duplicates_removed,
            "values_imputed": self.values_imputed,
            "outlier_rows_removed": self.outlier_rows_removed,
            "features_kept": list(self.features_kept),
            "seed": self.seed,
        }


def clean(d: Dataset) -> tuple[Dataset, PreprocessReport]:
    """Drop exact-duplicate rows, then impute NaNs with per-column medians.

    Duplicate detection is bitwise (NaN-containing twins still match);
    a row's label is part of its identity when labels are present.
    """
    seen: set[bytes] = set()
    keep: list[int] = []
    for i in range(d.n_rows):
        key = d.rows[i].tobytes()
        if d.labels is not None:
            key += int(d.labels[i]).to_bytes(8, "little", signed=True)
        if key in seen:
            continue
        seen.add(key)
        keep.append(i)
    dedup = d.take(np.array(keep, dtype=int))
    if dedup.n_rows == 0:
        raise EmptyDataset("no rows left after cleaning")
    report = PreprocessReport(
        duplicates_removed=d.n_rows - dedup.n_rows,
        features_kept=list(d.feature_names),
    )
    rows = dedup.rows.copy()
    nan_mask = np.isnan(rows)
    report.values_imputed = int(nan_mask.sum())
    for j in range(rows.shape[1]):
        col_mask = nan_mask[:, j]
        if not col_mask.any():
            continue
        finite = rows[~col_mask, j]
        rows[col_mask, j] = float(np.median(finite)) if finite.size else 0.0
    return Dataset(dedup.feature_names, rows, dedup.labels), report


@dataclass
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray
    constant: list[bool]


def normalize(d: Dataset) -> tuple[Dataset, NormalizationStats]:
    """Z-score each feature (population std); constant columns pass through."""
    mean = d.rows.mean(axis=0)
    std = d.rows.std(axis=0)  # ddof=0
    constant = [s == 0.0 for s in std]
    rows = d.rows.copy()
    for j in range(d.n_features):
        if not constant[j]:
            rows[:, j] = (rows[:, j] - mean[j]) / std[j]
    return Dataset(list(d.feature_names), rows, d.labels), NormalizationStats(mean, std, constant)


def modified_zscores(column: np.ndarray) -> np.ndarray:
    """Robust per-value outlier score: 0.6745·(x−median)/MAD.

    When MAD is zero (over half the values identical) fall back to the
    mean absolute deviation, (x−median)/(1.253314·MeanAD); when that is
    zero too the column is constant and every score is 0.
    """
    med = float(np.median(column))
    dev = column - med
    mad = float(np.median(np.abs(dev)))
    if mad > 0.0:
        return 0.6745 * dev / mad
    meanad = float(np.mean(np.abs(dev)))
    if meanad > 0.0:
        return dev / (1.253314 * meanad)
    return np.zeros_like(column)


def remove_outliers(d: Dataset, z_max: float = 3.0) -> tuple[Dataset, list[int]]:
    """Drop rows where any feature's robust z-score exceeds z_max."""
    if not z_max > 0:
        raise ValueError(f"z_max must be positive, got {z_max}")
    if math.isinf(z_max):
        return Dataset(list(d.feature_names), d.rows.copy(), d.labels), []
    bad = np.zeros(d.n_rows, dtype=bool)
    for j in range(d.n_features):
        bad |= np.abs(modified_zscores(d.rows[:, j])) > z_max
    if bad.all() and d.n_rows > 0:
        raise EmptyDataset("every row flagged as outlier")
    keep = np.flatnonzero(~bad)
    return d.take(keep), [int(i) for i in np.flatnonzero(bad)]


def _mutual_information(feature: np.ndarray, labels: np.ndarray, bins: int = 10) -> float:
    """MI between a binned feature and the label, natural log."""
    lo, hi = float(feature.min()), float(feature.max())
    if hi == lo:
        binned = np.zeros(len(feature), dtype=int)
    else:
        edges = np.linspace(lo, hi, bins + 1)
        binned = np.clip(np.digitize(feature, edges[1:-1]), 0, bins - 1)
    n = len(feature)
    mi = 0.0
    for b in np.unique(binned):
        in_bin = binned == b
        p_x = in_bin.sum() / n
        for y in np.unique(labels):
            joint = (in_bin & (labels == y)).sum() / n
            if joint == 0.0:
                continue
            p_y = (labels == y).sum() / n
            mi += joint * math.log(joint / (p_x * p_y))
    return mi


def select_features(d: Dataset, k: int) -> tuple[Dataset, list[tuple[str, float]]]:
    """Keep the k features most informative about the label.

    Ranking is mutual information over 10 equal-width bins; ties keep the
    earlier column. Kept columns stay in their original order.
    """
    if d.labels is None:
        raise NoLabels("feature selection needs labels")
    if not 1 <= k <= d.n_features:
        raise ValueError(f"k must be in [1, {d.n_features}], got {k}")
    scores = [_mutual_information(d.rows[:, j], d.labels) for j in range(d.n_features)]
    order = sorted(range(d.n_features), key=lambda j: (-scores[j], j))
    ranking = [(d.feature_names[j], scores[j]) for j in order]
    kept = sorted(order[:k])
    names = [d.feature_names[j] for j in kept]
    return Dataset(names, d.rows[:, kept], d.labels), ranking


def undersample_majority(d: Dataset, seed: int) -> Dataset:
    """Subsample the majority class down to the minority count.

    Uniform without replacement, deterministic per seed; surviving rows
    keep their original relative order.
    """
    if d.labels is None:
        raise NoLabels("undersampling needs labels")
    classes, counts = np.unique(d.labels, return_counts=True)
    if len(classes) < 2:
        raise SingleClass(f"only class {classes.tolist()} present")
    minority_count = int(counts.min())
    rng = np.random.default_rng(seed)
    keep: list[np.ndarray] = []
    for cls, count in zip(classes, counts):
        idx = np.flatnonzero(d.labels == cls)
        if count > minority_count:
            idx = rng.choice(idx, size=minority_count, replace=False)
        keep.append(idx)
    selected = np.sort(np.concatenate(keep))
    return d.take(selected)


# -- CSV round-trip --------------------------------------------------------

def load_dataset_csv(path: str | Path, target: str | None = "label") -> Dataset:
    """Read a wide CSV into a Dataset; `target` names the label column.

    Empty cells become NaN (clean() imputes them). A missing target column
    simply yields an unlabeled dataset when target is None, else KeyError.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} is empty")
        data = [row for row in reader if row]
    label_idx = None
    if target is not None:
        if target not in header:
            raise KeyError(f"no column {target!r} in {path}")
        label_idx = header.index(target)
    names = [c for i, c in enumerate(header) if i != label_idx]
    rows = np.empty((len(data), len(names)), dtype=float)
    labels = np.empty(len(data), dtype=int) if label_idx is not None else None
    for i, row in enumerate(data):
        k = 0
        for j, cell in enumerate(row):
            if j == label_idx:
                labels[i] = int(cell)
                continue
            rows[i, k] = float(cell) if cell.strip() != "" else math.nan
            k += 1
    return Dataset(names, rows, labels)


def save_dataset_csv(d: Dataset, path: str | Path, target: str = "label") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(d.feature_names) + ([target] if d.labels is not None else [])
        writer.writerow(header)
        for i in range(d.n_rows):
            row = [repr(float(v)) for v in d.rows[i]]
            if d.labels is not None:
                row.append(str(int(d.labels[i])))
            writer.writerow(row)
