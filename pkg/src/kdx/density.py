"""Kernel density estimation (Parzen and KECA-weighted) with analytic derivatives.

Both estimators are kernel expansions ``p(x) = sum_i w_i k(x, x_i)``:

* Parzen: ``w_i = 1/n``.
* KECA:   ``w = E_r E_r^T 1 / n`` where ``E_r`` holds ``r`` eigenvectors of
  the (uncentred) Gram matrix, chosen either by eigenvalue (``keca``) or by
  their information-potential contribution ``lambda_i (e_i^T 1)^2``
  (``entropy_keca``). With ``r = n`` both reduce to Parzen.

Densities are unnormalised kernel sums; :func:`normalizing_constant` gives
the factor that turns an RBF sum into a proper pdf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels as kern
from .errors import DimensionMismatch, InvalidRank, NonFiniteInput
from .kernels import KernelSpec
from .numerics import sym_eig

MODES = ("parzen", "keca", "entropy_keca")
SCORE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class DensityModel:
    X_train: np.ndarray
    kernel: KernelSpec
    weights: np.ndarray
    mode: str = "parzen"
    rank: int | None = None

    @property
    def d(self) -> int:
        return self.X_train.shape[1]

    def _points(self, x_star) -> tuple[np.ndarray, bool]:
        x = np.asarray(x_star, dtype=float)
        single = x.ndim <= 1
        if single:
            x = np.atleast_1d(x)[None, :]
        if x.ndim != 2 or x.shape[1] != self.d:
            raise DimensionMismatch(f"model expects d={self.d}, got shape {np.shape(x_star)}")
        if not np.all(np.isfinite(x)):
            raise NonFiniteInput("query point contains non-finite values")
        return x, single

    def density_at(self, x_star):
        x, single = self._points(x_star)
        p = kern.cross_kernel(self.kernel, x, self.X_train) @ self.weights
        return float(p[0]) if single else p

    def density_gradient(self, x_star):
        x, single = self._points(x_star)
        g = np.einsum("mnj,n->mj", kern.cross_grad(self.kernel, x, self.X_train), self.weights)
        return g[0] if single else g

    def density_hessian(self, x_star):
        x, single = self._points(x_star)
        H = np.einsum("mnjk,n->mjk", kern.cross_hess(self.kernel, x, self.X_train), self.weights)
        H = 0.5 * (H + np.swapaxes(H, -1, -2))
        return H[0] if single else H

    def to_dict(self) -> dict:
        return {
            "kind": "density",
            "kernel": self.kernel.to_dict(),
            "data": {"X": self.X_train.tolist()},
            "params": {"weights": self.weights.tolist(), "mode": self.mode, "rank": self.rank},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> DensityModel:
        if obj.get("kind") != "density":
            raise ValueError(f"not a density model: kind={obj.get('kind')!r}")
        X = kern._as_samples(obj["data"]["X"])
        p = obj["params"]
        w = np.asarray(p["weights"], dtype=float)
        if w.shape != (X.shape[0],):
            raise DimensionMismatch("weights length does not match training set")
        return cls(X, KernelSpec.from_dict(obj["kernel"]), w, p.get("mode", "parzen"), p.get("rank"))


def fit_density(X, kernel: KernelSpec | None = None, mode: str = "parzen", rank: int | None = None) -> DensityModel:
    """Build a density model; the kernel defaults to an RBF with the median-heuristic scale."""
    X = kern._as_samples(X)
    n = X.shape[0]
    if n < 1:
        raise DimensionMismatch("need at least one sample")
    if kernel is None:
        kernel = KernelSpec.rbf(kern.median_heuristic_gamma(X))
    mode = mode.lower()
    if mode not in MODES:
        raise ValueError(f"unknown density mode {mode!r}; expected one of {MODES}")
    if mode == "parzen":
        return DensityModel(X, kernel, np.full(n, 1.0 / n), mode, None)

    if rank is None or int(rank) != rank or not 1 <= rank <= n:
        raise InvalidRank(f"rank must be an integer in [1, {n}], got {rank}")
    rank = int(rank)
    lam, E = sym_eig(kern.gram(kernel, X))
    if mode == "keca":
        keep = np.arange(rank)
    else:
        keep = np.argsort(-entropy_scores(lam, E), kind="stable")[:rank]
    Er = E[:, keep]
    weights = Er @ (Er.T @ np.ones(n)) / n
    return DensityModel(X, kernel, weights, mode, rank)


def entropy_scores(eigenvalues, eigenvectors) -> np.ndarray:
    """Information-potential contribution ``lambda_i (e_i^T 1)^2`` of each eigenpair."""
    ones = eigenvectors.sum(axis=0)
    return np.asarray(eigenvalues) * ones**2


def normalizing_constant(kernel: KernelSpec, d: int) -> float:
    """Factor making an RBF kernel integrate to one over R^d: ``(gamma / pi)^(d/2)``."""
    if kernel.family != "rbf":
        raise ValueError("normalisation is only defined for the rbf family")
    return (kernel.gamma / math.pi) ** (d / 2)


@dataclass(frozen=True)
class RidgeResult:
    scores: np.ndarray
    selected: np.ndarray
    threshold: float
    quantile: float | None = None
    tol: float | None = None


def ridge_scores(model: DensityModel, eval_points, r_ridge: int = 1, quantile: float = 0.05,
                 tol: float | None = None, convention: str = "trailing") -> RidgeResult:
    """Score how far each point is from the density ridge.

    At each point the density gradient ``g`` is projected onto ``r_ridge``
    eigenvectors of the density Hessian and the score is
    ``|g^T E_r| / (|g| + 1e-12)``. With ``convention="trailing"`` (default)
    ``E_r`` holds the eigenvectors of the smallest (most negative)
    eigenvalues, i.e. the directions across the ridge; ``"leading"`` uses the
    largest ones instead.

    Points are selected when their score is at most ``tol`` if given,
    otherwise at most the ``quantile`` of all scores.
    """
    pts = np.asarray(eval_points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if model.d == 1 else pts[None, :]
    x, _ = model._points(pts)
    d = model.d
    if int(r_ridge) != r_ridge or not 1 <= r_ridge <= d:
        raise InvalidRank(f"r_ridge must be an integer in [1, {d}], got {r_ridge}")
    if convention not in ("trailing", "leading"):
        raise ValueError("convention must be 'trailing' or 'leading'")
    r_ridge = int(r_ridge)
    G = model.density_gradient(x)
    H = model.density_hessian(x)
    scores = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        _, V = sym_eig(H[i])
        Er = V[:, d - r_ridge:] if convention == "trailing" else V[:, :r_ridge]
        g = G[i]
        scores[i] = np.linalg.norm(g @ Er) / (np.linalg.norm(g) + SCORE_EPS)
    if tol is not None:
        threshold = float(tol)
    else:
        if not 0 < quantile <= 1:
            raise ValueError("quantile must be in (0, 1]")
        threshold = float(np.quantile(scores, quantile))
    selected = np.flatnonzero(scores <= threshold)
    return RidgeResult(scores, selected, threshold, None if tol is not None else quantile, tol)
