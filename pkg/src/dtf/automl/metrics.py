"""Binary-classification metric suite over a confusion matrix.

Zero-denominator cases never raise: the affected metric is reported as
0.0 and the record's ``degenerate`` flag is set, so comparison tables
survive pathological folds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, y_true: Iterable[int], y_pred: Iterable[int]) -> "ConfusionMatrix":
        y_true = np.asarray(list(y_true), dtype=int)
        y_pred = np.asarray(list(y_pred), dtype=int)
        return cls(
            tp=int(((y_true == 1) & (y_pred == 1)).sum()),
            fp=int(((y_true == 0) & (y_pred == 1)).sum()),
            tn=int(((y_true == 0) & (y_pred == 0)).sum()),
            fn=int(((y_true == 1) & (y_pred == 0)).sum()),
        )


@dataclass(frozen=True)
class MetricRecord:
    accuracy: float
    precision: float
    recall: float
    f1: float
    kappa: float
    mcc: float
    auc: float
    degenerate: bool = False


def auc_from_scores(scores: Sequence[tuple[float, int]]) -> tuple[float, bool]:
    """AUC as the Mann-Whitney rank statistic with tie-averaged ranks.

    ``scores`` holds (positive-class score, truth) pairs. Returns
    (auc, degenerate) where degenerate means one class is absent.
    """
    if not scores:
        return 0.0, True
    values = np.array([s for s, _ in scores], dtype=float)
    truth = np.array([t for _, t in scores], dtype=int)
    n_pos = int((truth == 1).sum())
    n_neg = int((truth == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return 0.0, True
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):  # average ranks over tied score runs
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[truth == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg), False


def metrics_from_confusion(
    cm: ConfusionMatrix, scores: Sequence[tuple[float, int]] | None = None
) -> MetricRecord:
    total = cm.total
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    tp, fp, tn, fn = float(cm.tp), float(cm.fp), float(cm.tn), float(cm.fn)
    degenerate = False

    def ratio(num: float, den: float) -> float:
        nonlocal degenerate
        if den == 0.0:
            degenerate = True
            return 0.0
        return num / den

    accuracy = (tp + tn) / total
    precision = ratio(tp, tp + fp)
    recall = ratio(tp, tp + fn)
    f1 = ratio(2.0 * precision * recall, precision + recall)

    p_yes = ((tp + fp) / total) * ((tp + fn) / total)
    p_no = ((fn + tn) / total) * ((fp + tn) / total)
    p_e = p_yes + p_no
    kappa = ratio(accuracy - p_e, 1.0 - p_e)

    mcc_den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = ratio(tp * tn - fp * fn, mcc_den)

    if scores is None:
        auc, auc_degenerate = 0.0, True
    else:
        auc, auc_degenerate = auc_from_scores(scores)
    return MetricRecord(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        kappa=kappa,
        mcc=mcc,
        auc=auc,
        degenerate=degenerate or auc_degenerate,
    )
