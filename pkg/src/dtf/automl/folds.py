"""Stratified k-fold index splitting."""

from __future__ import annotations

import numpy as np

from ..errors import TooFewRows


def kfold_split(labels, k: int, seed: int) -> list[np.ndarray]:
    """Split row indices into k disjoint stratified test folds.

    Per class, indices are shuffled and dealt so every fold gets either
    ⌊count/k⌋ or ⌈count/k⌉ of that class; leftover items go to the folds
    currently smallest overall (ties by fold index), which keeps total
    fold sizes within 1 of each other as well.
    """
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    if k < 2 or k > n:
        raise TooFewRows(f"need 2 ≤ k ≤ {n}, got k={k}")
    rng = np.random.default_rng(seed)
    totals = [0] * k
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        base, rem = divmod(len(idx), k)
        by_size = sorted(range(k), key=lambda f: (totals[f], f))
        sizes = [base] * k
        for f in by_size[:rem]:
            sizes[f] += 1
        pos = 0
        for f in range(k):
            folds[f].extend(int(i) for i in idx[pos : pos + sizes[f]])
            totals[f] += sizes[f]
            pos += sizes[f]
    return [np.array(sorted(f), dtype=int) for f in folds]
