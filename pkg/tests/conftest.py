"""Shared fixtures: sensor specs, synthetic datasets, replay fixtures."""

from __future__ import annotations

import csv
import socket
from pathlib import Path

import numpy as np
import pytest

from dtf.labeler import SensorSpec
from dtf.preprocess import Dataset

# Normal operating ranges and failure weights for the seven-sensor plant.
SPEC_TABLE = [
    ("S1", 0.0, 2.5, 0.10),
    ("S2", 0.0, 5000.0, 0.03),
    ("S3", 0.0, 2.5, 0.10),
    ("S4", 0.0, 5.0, 0.02),
    ("S5", 0.0, 50.0, 0.25),
    ("S6", 0.0, 60.0, 0.30),
    ("S7", 0.0, 360.0, 0.20),
]

# steady in-range values, one per sensor
HEALTHY = {"S1": 1.2, "S2": 2400.0, "S3": 1.1, "S4": 2.4, "S5": 24.0, "S6": 29.0, "S7": 170.0}
# far out of range on the three heaviest sensors: E = 0.25 + 0.30 + 0.20 = 0.75
FAULTY = {"S5": 90.0, "S6": 120.0, "S7": 900.0}


@pytest.fixture
def specs7() -> list[SensorSpec]:
    return [SensorSpec(s, lo, hi, w) for s, lo, hi, w in SPEC_TABLE]


def make_separable(n: int = 2000, n_features: int = 5, seed: int = 0) -> Dataset:
    """Linearly separable dataset with a wide margin.

    The label depends only on feature 0; points near the 0.5 boundary are
    pushed outward so every reasonable learner can reach high accuracy.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, n_features))
    margin = 0.08
    x0 = X[:, 0]
    inside = np.abs(x0 - 0.5) < margin
    x0[inside] = np.where(x0[inside] >= 0.5, x0[inside] + margin, x0[inside] - margin)
    X[:, 0] = np.clip(x0, 0.0, 1.0)
    y = (X[:, 0] > 0.5).astype(int)
    names = [f"f{i}" for i in range(n_features)]
    return Dataset(names, X, y)


def write_seven_sensor_csv(
    path: Path,
    healthy_rows: int,
    faulty_rows: int,
    machine: str = "M1",
    jitter: float = 0.3,
    seed: int = 7,
) -> Path:
    """Wide CSV driving E from 0.0 to 0.75 after `healthy_rows` rows."""
    rng = np.random.default_rng(seed)
    sensors = list(HEALTHY)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"] + [f"{machine}_{s}" for s in sensors])
        for i in range(healthy_rows + faulty_rows):
            row = [i]
            for s in sensors:
                base = FAULTY.get(s, HEALTHY[s]) if i >= healthy_rows else HEALTHY[s]
                row.append(round(base + float(rng.uniform(-jitter, jitter)), 4))
            w.writerow(row)
    return path


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]
