"""Seeded generators for the small illustrative datasets.

Regression sets return ``X`` of shape (n, 1) or (n, 2) and a real target;
classification sets return labels in {-1, +1}; the dependence sets
(``noisy_ring``, ``sinusoid_pair``) return the first variable as ``X`` and
the second as ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownDataset

# x-range used by the 1-D regression sets
REGRESSION_RANGE = (-np.pi, np.pi)
PLANE_RANGE = (-20.0, 20.0)
SINUSOID_FREQ = 3.0
CLASSIFICATION = ("two_moons", "circles", "ellipsoids")


@dataclass(frozen=True)
class ToySpec:
    name: str
    n: int = 100
    noise: float = 0.1
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in GENERATORS:
            raise UnknownDataset(f"unknown dataset {self.name!r}; available: {sorted(GENERATORS)}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.noise >= 0:
            raise ValueError("noise must be >= 0")


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    meta: dict


def generate(spec: ToySpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    X, y = GENERATORS[spec.name](spec.n, spec.noise, rng, **spec.params)
    meta = {"name": spec.name, "n": spec.n, "noise": spec.noise, "seed": spec.seed, **spec.params}
    return Dataset(np.asarray(X, dtype=float), np.asarray(y), meta)


def _regression(f):
    def gen(n, noise, rng):
        x = rng.uniform(*REGRESSION_RANGE, n)
        return x[:, None], f(x) + noise * rng.standard_normal(n)

    return gen


def _labels(n: int) -> np.ndarray:
    n_pos = (n + 1) // 2
    return np.r_[np.ones(n_pos), -np.ones(n - n_pos)]


def two_moons(n, noise, rng):
    y = _labels(n)
    t = rng.uniform(0.0, np.pi, n)
    upper = np.c_[np.cos(t), np.sin(t)]
    lower = np.c_[1.0 - np.cos(t), 0.5 - np.sin(t)]
    X = np.where(y[:, None] > 0, upper, lower)
    return X + noise * rng.standard_normal((n, 2)), y


def circles(n, noise, rng, factor: float = 0.5):
    y = _labels(n)
    t = rng.uniform(0.0, 2 * np.pi, n)
    r = np.where(y > 0, factor, 1.0)
    X = r[:, None] * np.c_[np.cos(t), np.sin(t)]
    return X + noise * rng.standard_normal((n, 2)), y


def ellipsoids(n, noise, rng):
    # two elongated, partly overlapping Gaussian blobs tilted by 30 degrees
    y = _labels(n)
    angle = np.pi / 6
    R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    Z = rng.standard_normal((n, 2)) * np.array([1.0, 0.3])
    centers = np.where(y[:, None] > 0, np.array([0.0, 0.6]), np.array([0.0, -0.6]))
    X = Z @ R.T + centers
    return X + noise * rng.standard_normal((n, 2)), y


def noisy_ring(n, noise, rng):
    t = rng.uniform(0.0, 2 * np.pi, n)
    pts = np.c_[np.cos(t), np.sin(t)] + noise * rng.standard_normal((n, 2))
    return pts[:, :1], pts[:, 1]


def sinusoid_pair(n, noise, rng, freq: float = SINUSOID_FREQ):
    x = rng.uniform(-1.0, 1.0, n)
    return x[:, None], np.sin(freq * x) + noise * rng.standard_normal(n)


def piecewise_plane_value(x1, x2):
    """``y = a x1 + b x2`` with ``a = 5`` for ``x1 >= 0`` and ``a = 1`` otherwise; ``b = 1``."""
    x1 = np.asarray(x1, dtype=float)
    return np.where(x1 >= 0, 5.0, 1.0) * x1 + np.asarray(x2, dtype=float)


def piecewise_plane(n, noise, rng):
    X = rng.uniform(*PLANE_RANGE, (n, 2))
    return X, piecewise_plane_value(X[:, 0], X[:, 1]) + noise * rng.standard_normal(n)


GENERATORS = {
    "line": _regression(lambda x: x),
    "parabola": _regression(lambda x: x**2),
    "sine": _regression(np.sin),
    "x_sin_x": _regression(lambda x: x * np.sin(x)),
    "line_plus_sine": _regression(lambda x: x + np.sin(x)),
    "two_moons": two_moons,
    "circles": circles,
    "ellipsoids": ellipsoids,
    "noisy_ring": noisy_ring,
    "sinusoid_pair": sinusoid_pair,
    "piecewise_plane": piecewise_plane,
}
