"""K-fold splitting used by the hyperparameter grid searches."""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np


def kfold_indices(n: int, k: int, seed: int = 0, labels=None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(train_idx, test_idx)`` for a seeded shuffled k-fold split.

    With ``labels`` the split is stratified: each class is dealt across folds separately.
    """
    if k < 2 or k > n:
        raise ValueError(f"need 2 <= folds <= n, got folds={k}, n={n}")
    rng = np.random.default_rng(seed)
    if labels is None:
        groups = [rng.permutation(n)]
    else:
        labels = np.asarray(labels)
        groups = [rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)]
    folds = [[] for _ in range(k)]
    for g in groups:
        for i, part in enumerate(np.array_split(g, k)):
            folds[i].append(part)
    for i in range(k):
        test = np.sort(np.concatenate(folds[i]))
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        yield np.flatnonzero(mask), test
