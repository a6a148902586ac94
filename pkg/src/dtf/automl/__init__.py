"""Classifier zoo, metric suite, cross-validation, and model selection."""

from .artifact import model_from_json, model_to_json
from .folds import kfold_split
from .metrics import ConfusionMatrix, MetricRecord, metrics_from_confusion
from .workflow import (
    DEFAULT_GRIDS,
    DEFAULT_ZOO,
    FittedModel,
    ModelReport,
    ModelSpec,
    compare_models,
    cross_validate,
    predict_with_scores,
    render_report_table,
    train,
    tune_model,
)

__all__ = [
    "ConfusionMatrix",
    "MetricRecord",
    "metrics_from_confusion",
    "kfold_split",
    "ModelSpec",
    "ModelReport",
    "FittedModel",
    "train",
    "cross_validate",
    "compare_models",
    "tune_model",
    "predict_with_scores",
    "render_report_table",
    "model_to_json",
    "model_from_json",
    "DEFAULT_ZOO",
    "DEFAULT_GRIDS",
]
