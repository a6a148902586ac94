"""Model selection workflow: train, cross-validate, compare, tune.

Reports aggregate per-fold metrics by mean. Everything is deterministic
for a fixed (dataset, zoo, k, seed) apart from wall-clock training times.
Folds are computed once per comparison and shared by every candidate so
rankings are fair.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import ConfigError, FeatureMismatch, NoLabels
from ..preprocess import Dataset
from .folds import kfold_split
from .metrics import ConfusionMatrix, metrics_from_confusion
from .models import MODEL_CLASSES, VALID_HYPERPARAMS

REPORT_COLUMNS = ("Model", "Accuracy", "AUC", "Recall", "Prec.", "F1", "Kappa", "MCC", "TT (Sec)")

DISPLAY_NAMES = {
    "decision_tree": "Decision Tree Classifier",
    "knn": "K Neighbors Classifier",
    "gaussian_nb": "Naive Bayes",
    "logistic_regression": "Logistic Regression",
    "mlp": "MLP Classifier",
}

TUNE_OBJECTIVES = ("accuracy", "f1", "recall", "precision")

DEFAULT_GRIDS: dict[str, list[dict]] = {
    "decision_tree": [
        {"max_depth": d, "min_samples_split": m} for d in (2, 4, 6, 8, None) for m in (2, 10)
    ],
    "knn": [{"k": k} for k in (3, 5, 9)],
    "gaussian_nb": [{}],
    "logistic_regression": [{"lr": lr} for lr in (0.01, 0.1)],
    "mlp": [{"hidden": h} for h in (8, 16)],
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in MODEL_CLASSES:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        bad = set(self.hyperparams) - VALID_HYPERPARAMS[self.kind]
        if bad:
            raise ConfigError(f"{self.kind} does not accept hyperparams {sorted(bad)}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "hyperparams": dict(self.hyperparams), "seed": self.seed}


def default_zoo(seed: int = 0) -> list[ModelSpec]:
    return [
        ModelSpec("decision_tree", seed=seed),
        ModelSpec("knn", seed=seed),
        ModelSpec("gaussian_nb", seed=seed),
        ModelSpec("logistic_regression", seed=seed),
        ModelSpec("mlp", seed=seed),
    ]


DEFAULT_ZOO = default_zoo()


@dataclass
class ModelReport:
    model: ModelSpec
    accuracy: float
    auc: float
    recall: float
    precision: float
    f1: float
    kappa: float
    mcc: float
    train_time_s: float
    fold_scores: list[float]
    degenerate_folds: int = 0

    def to_json(self) -> dict:
        return {
            "model": self.model.to_json(),
            "accuracy": self.accuracy,
            "auc": self.auc,
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "kappa": self.kappa,
            "mcc": self.mcc,
            "train_time_s": self.train_time_s,
            "fold_scores": list(self.fold_scores),
            "degenerate_folds": self.degenerate_folds,
        }


@dataclass
class FittedModel:
    spec: ModelSpec
    model: object
    feature_names: list[str]
    training_fingerprint: str
    train_time_s: float = 0.0


def make_model(spec: ModelSpec):
    cls = MODEL_CLASSES[spec.kind]
    if spec.kind == "mlp":
        return cls(seed=spec.seed, **spec.hyperparams)
    return cls(**spec.hyperparams)


def train(spec: ModelSpec, d: Dataset) -> FittedModel:
    """Fit one model on the full dataset and fingerprint its parameters."""
    from .artifact import parameters_fingerprint

    if d.labels is None:
        raise NoLabels("training needs labels")
    model = make_model(spec)
    started = time.perf_counter()
    model.fit(d.rows, d.labels)
    elapsed = time.perf_counter() - started
    fingerprint = parameters_fingerprint(spec, model.to_params(), d.feature_names)
    return FittedModel(spec, model, list(d.feature_names), fingerprint, elapsed)


def cross_validate(
    spec: ModelSpec,
    d: Dataset,
    k: int,
    seed: int,
    folds: Sequence[np.ndarray] | None = None,
) -> ModelReport:
    """k-fold evaluation: train on k−1 folds, score the held-out one."""
    if d.labels is None:
        raise NoLabels("cross-validation needs labels")
    if folds is None:
        folds = kfold_split(d.labels, k, seed)
    all_rows = np.arange(d.n_rows)
    per_fold = []
    train_time = 0.0
    for test_idx in folds:
        train_idx = np.setdiff1d(all_rows, test_idx)
        model = make_model(spec)
        started = time.perf_counter()
        model.fit(d.rows[train_idx], d.labels[train_idx])
        train_time += time.perf_counter() - started
        proba = model.predict_proba(d.rows[test_idx])
        y_pred = (proba[:, 1] > 0.5).astype(int)
        y_true = d.labels[test_idx]
        cm = ConfusionMatrix.from_predictions(y_true, y_pred)
        scores = list(zip(proba[:, 1].tolist(), y_true.tolist()))
        per_fold.append(metrics_from_confusion(cm, scores))
    mean = lambda attr: float(np.mean([getattr(m, attr) for m in per_fold]))
    return ModelReport(
        model=spec,
        accuracy=mean("accuracy"),
        auc=mean("auc"),
        recall=mean("recall"),
        precision=mean("precision"),
        f1=mean("f1"),
        kappa=mean("kappa"),
        mcc=mean("mcc"),
        train_time_s=train_time,
        fold_scores=[m.accuracy for m in per_fold],
        degenerate_folds=sum(1 for m in per_fold if m.degenerate),
    )


def compare_models(
    d: Dataset,
    zoo: Sequence[ModelSpec] | None = None,
    k: int = 5,
    seed: int = 0,
) -> list[ModelReport]:
    """Cross-validate every zoo member on shared folds and rank them.

    Ranking: accuracy desc, ties by f1 desc, then declaration order.
    """
    zoo = list(zoo) if zoo is not None else default_zoo(seed)
    if not zoo:
        raise ConfigError("zoo must be non-empty")
    if d.labels is None:
        raise NoLabels("comparison needs labels")
    folds = kfold_split(d.labels, k, seed)
    reports = [cross_validate(spec, d, k, seed, folds=folds) for spec in zoo]
    return sorted(reports, key=lambda r: (-r.accuracy, -r.f1))


def tune_model(
    best: ModelSpec,
    d: Dataset,
    k: int = 5,
    objective: str = "accuracy",
    grid: Sequence[dict] | None = None,
) -> tuple[FittedModel, ModelReport]:
    """Grid-search the winner's hyperparameters, refit on the full data.

    Every cell is scored by cross_validate on identical folds; ties keep
    the earliest cell. The returned report carries the winning cell's CV
    metrics (which may trail the untuned comparison row).
    """
    if objective not in TUNE_OBJECTIVES:
        raise ConfigError(f"objective must be one of {TUNE_OBJECTIVES}, got {objective!r}")
    cells = list(grid) if grid is not None else DEFAULT_GRIDS[best.kind]
    folds = kfold_split(d.labels, k, best.seed)
    best_report: ModelReport | None = None
    for cell in cells:
        candidate = replace(best, hyperparams={**best.hyperparams, **cell})
        report = cross_validate(candidate, d, k, best.seed, folds=folds)
        if best_report is None or getattr(report, objective) > getattr(best_report, objective):
            best_report = report
    fitted = train(best_report.model, d)
    return fitted, best_report


def predict_with_scores(m: FittedModel, rows: Dataset | np.ndarray) -> list[tuple[int, float]]:
    """Per-row (predicted label, probability of that label).

    The score is the model's probability for the label it chose, so it is
    always ≥ 0.5; exact 50/50 ties resolve to class 0.
    """
    if isinstance(rows, Dataset):
        if rows.feature_names != m.feature_names:
            raise FeatureMismatch(
                f"model expects {m.feature_names}, dataset has {rows.feature_names}"
            )
        X = rows.rows
    else:
        X = np.asarray(rows, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(m.feature_names):
            raise FeatureMismatch(f"expected {len(m.feature_names)} features")
    proba = m.model.predict_proba(X)
    out = []
    for p0, p1 in proba:
        label = 1 if p1 > 0.5 else 0
        out.append((label, float(p1 if label == 1 else p0)))
    return out


def render_report_table(reports: Sequence[ModelReport], fmt: str = "text") -> str:
    """Comparison table in the leaderboard column layout."""
    rows = []
    for r in reports:
        rows.append(
            [
                DISPLAY_NAMES.get(r.model.kind, r.model.kind),
                f"{r.accuracy:.4f}",
                f"{r.auc:.4f}",
                f"{r.recall:.4f}",
                f"{r.precision:.4f}",
                f"{r.f1:.4f}",
                f"{r.kappa:.4f}",
                f"{r.mcc:.4f}",
                f"{r.train_time_s:.3f}",
            ]
        )
    if fmt == "csv":
        lines = [",".join(REPORT_COLUMNS)]
        lines += [",".join(f'"{c}"' if "," in c else c for c in row) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        import json

        return json.dumps([r.to_json() for r in reports], indent=2) + "\n"
    widths = [
        max(len(REPORT_COLUMNS[i]), *(len(row[i]) for row in rows)) if rows else len(REPORT_COLUMNS[i])
        for i in range(len(REPORT_COLUMNS))
    ]
    out = ["  ".join(c.ljust(widths[i]) for i, c in enumerate(REPORT_COLUMNS)).rstrip()]
    for row in rows:
        out.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    return "\n".join(out) + "\n"
