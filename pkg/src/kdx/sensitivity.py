"""Summaries of per-sample, per-feature derivative matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput


@dataclass(frozen=True)
class DerivField:
    """``values[i, j]`` holds the partial derivative of a model along feature ``j`` at sample ``i``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise DimensionMismatch(f"derivative field must be a non-empty n x d matrix, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput("derivative field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _field(field) -> DerivField:
    return field if isinstance(field, DerivField) else DerivField(field)


def feature_sensitivity(field) -> np.ndarray:
    """Mean squared derivative per feature (averaged over samples), length d.

    >>> feature_sensitivity([[1.0, 0.0], [-1.0, 0.0]])
    array([1., 0.])
    """
    return np.mean(_field(field).values ** 2, axis=0)


def point_sensitivity(field) -> np.ndarray:
    """Mean squared derivative per sample (averaged over features), length n."""
    return np.mean(_field(field).values ** 2, axis=1)
