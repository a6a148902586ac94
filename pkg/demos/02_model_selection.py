"""
Model comparison, tuning, and artifacts
=======================================

Failure datasets are heavily imbalanced: most cycles are healthy. The
workflow here is undersample, compare the five classifiers under
stratified cross-validation, grid-tune the winner, and save it as a
versioned artifact that reloads bit-exactly anywhere.
"""

import tempfile
from pathlib import Path

import numpy as np

from dtf.automl.workflow import (
    ModelSpec,
    compare_models,
    predict_with_scores,
    render_report_table,
    train,
    tune_model,
)
from dtf.eventlog import load_model, save_model
from dtf.preprocess import Dataset, undersample_majority

# A synthetic run-to-failure table: vibration-like features where only
# feature 0 carries signal, 10% failure rate.
rng = np.random.default_rng(3)
n = 1200
X = rng.uniform(0.0, 1.0, size=(n, 4))
y = (X[:, 0] > 0.9).astype(int)
d = Dataset([f"f{i}" for i in range(4)], X, y)
print(f"raw data: {d.n_rows} rows, {int(y.sum())} failures")

# Balance before fitting; majority rows are subsampled deterministically.
balanced = undersample_majority(d, seed=0)
counts = np.bincount(balanced.labels.astype(int))
print(f"after undersampling: {counts[0]} healthy / {counts[1]} failed\n")

# Five classifiers, shared folds, one leaderboard.
reports = compare_models(balanced, k=5, seed=0)
print(render_report_table(reports), end="")

# Grid-tune the leader on its default grid and refit on all rows.
best = reports[0].model
fitted, tuned = tune_model(best, balanced, k=5)
print(f"\ntuned {fitted.spec.kind}: {dict(tuned.model.hyperparams)}"
      f" (cv accuracy {tuned.accuracy:.4f})")

# Artifacts carry parameters as 17-digit decimals plus a sha256
# fingerprint, so a reloaded model predicts identically.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / f"{fitted.spec.kind}.json"
    save_model(fitted, path)
    loaded = load_model(path)
    probe = rng.uniform(0.0, 1.0, size=(5, 4))
    before = predict_with_scores(fitted, probe)
    after = predict_with_scores(loaded, probe)
    assert before == after
    print(f"artifact round-trip ok: {path.name}, fingerprint {loaded.training_fingerprint[:12]}...")
    for row, (label, score) in zip(probe, before):
        print(f"  f0={row[0]:.3f} -> {'fail' if label else 'healthy'} (p={score:.3f})")
