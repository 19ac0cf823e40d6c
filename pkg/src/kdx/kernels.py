"""Kernel functions and their analytic input derivatives.

Every family provides three vectorised building blocks over two sample
matrices ``A`` (n x d) and ``B`` (m x d):

* :func:`cross_kernel`  -> ``K[i, l]          = k(a_i, b_l)``
* :func:`cross_grad`    -> ``G[i, l, j]       = dk(a_i, b_l) / da_i^j``
* :func:`cross_hess`    -> ``H[i, l, j, k]    = d2k(a_i, b_l) / da_i^j da_i^k``

Derivatives are always taken with respect to the *first* argument. The
scalar helpers (:func:`evaluate`, :func:`grad_x`, :func:`hessian_x`) and the
Gram constructors are built on top of these.

Families
--------
linear  ``x.y``
poly    ``(gamma x.y + coef0)^degree``
rbf     ``exp(-gamma |x-y|^2)``
tanh    ``tanh(gamma x.y + coef0)``        (not PSD in general)
ard     ``signal_var * exp(-1/2 sum_d ((x^d - y^d) / lengthscale_d)^2)``
sinc    ``sin(W (t1 - t2)) / (W (t1 - t2))`` on scalar inputs, W = bandwidth
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DimensionMismatch, InvalidOrder, NonFiniteInput

FAMILIES = ("linear", "poly", "rbf", "tanh", "ard", "sinc")
PSD_FAMILIES = ("linear", "poly", "rbf", "ard", "sinc")

# which optional fields each family reads
_FAMILY_FIELDS = {
    "linear": (),
    "poly": ("gamma", "coef0", "degree"),
    "rbf": ("gamma",),
    "tanh": ("gamma", "coef0"),
    "ard": ("lengthscales", "signal_var"),
    "sinc": ("bandwidth",),
}
_DEFAULTS = {"poly": {"gamma": 1.0, "coef0": 1.0, "degree": 2},
             "tanh": {"gamma": 1.0, "coef0": 0.0},
             "ard": {"signal_var": 1.0}}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters. Fields the family does not use are dropped."""

    family: str
    gamma: float | None = None
    coef0: float | None = None
    degree: int | None = None
    lengthscales: tuple[float, ...] | None = None
    signal_var: float | None = None
    bandwidth: float | None = None

    def __post_init__(self):
        family = str(self.family).lower()
        if family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", family)
        used = _FAMILY_FIELDS[family]
        for name in ("gamma", "coef0", "degree", "lengthscales", "signal_var", "bandwidth"):
            value = getattr(self, name)
            if name not in used:
                object.__setattr__(self, name, None)
            elif value is None:
                if name not in _DEFAULTS.get(family, {}):
                    raise ValueError(f"{family} kernel requires {name}")
                object.__setattr__(self, name, _DEFAULTS[family][name])

        if self.gamma is not None:
            object.__setattr__(self, "gamma", _positive("gamma", self.gamma))
        if self.coef0 is not None:
            coef0 = float(self.coef0)
            if not math.isfinite(coef0):
                raise ValueError("coef0 must be finite")
            object.__setattr__(self, "coef0", coef0)
        if self.degree is not None:
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("degree must be an integer >= 1")
            object.__setattr__(self, "degree", int(self.degree))
        if self.lengthscales is not None:
            ls = tuple(_positive("lengthscales", v) for v in np.atleast_1d(self.lengthscales))
            if not ls:
                raise ValueError("lengthscales must be non-empty")
            object.__setattr__(self, "lengthscales", ls)
        if self.signal_var is not None:
            object.__setattr__(self, "signal_var", _positive("signal_var", self.signal_var))
        if self.bandwidth is not None:
            object.__setattr__(self, "bandwidth", _positive("bandwidth", self.bandwidth))

    # convenience constructors
    @classmethod
    def linear(cls) -> KernelSpec:
        return cls("linear")

    @classmethod
    def poly(cls, gamma: float = 1.0, coef0: float = 1.0, degree: int = 2) -> KernelSpec:
        return cls("poly", gamma=gamma, coef0=coef0, degree=degree)

    @classmethod
    def rbf(cls, gamma: float) -> KernelSpec:
        return cls("rbf", gamma=gamma)

    @classmethod
    def tanh(cls, gamma: float = 1.0, coef0: float = 0.0) -> KernelSpec:
        return cls("tanh", gamma=gamma, coef0=coef0)

    @classmethod
    def ard(cls, lengthscales, signal_var: float = 1.0) -> KernelSpec:
        return cls("ard", lengthscales=tuple(lengthscales), signal_var=signal_var)

    @classmethod
    def sinc(cls, bandwidth: float) -> KernelSpec:
        return cls("sinc", bandwidth=bandwidth)

    @property
    def is_psd(self) -> bool:
        if self.family == "poly":
            return self.coef0 >= 0
        return self.family in PSD_FAMILIES

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family}
        for name in _FAMILY_FIELDS[self.family]:
            value = getattr(self, name)
            out[name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> KernelSpec:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown kernel fields: {sorted(unknown)}")
        if "family" not in data:
            raise ValueError("kernel object needs a 'family'")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> KernelSpec:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("kernel JSON must be an object")
        return cls.from_dict(data)


def _positive(name: str, value) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def median_heuristic_gamma(X) -> float:
    """RBF scale ``1 / (2 * median^2)`` from the median pairwise Euclidean distance.

    Falls back to ``gamma = 1`` when all points coincide.
    """
    X = _as_samples(X)
    n = X.shape[0]
    if n < 2:
        return 1.0
    iu = np.triu_indices(n, 1)
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)[iu]
    med = float(np.sqrt(np.median(sq)))
    if med <= 0 or not math.isfinite(med):
        nz = sq[sq > 0]
        if nz.size == 0:
            return 1.0
        med = float(np.sqrt(np.median(nz)))
    return 1.0 / (2.0 * med * med)


# ---------------------------------------------------------------------------
# input handling
# ---------------------------------------------------------------------------


def _as_samples(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None] if A.size else A.reshape(0, 1)
    if A.ndim != 2:
        raise DimensionMismatch(f"expected a sample matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteInput("input contains non-finite values")
    return A


def _as_point(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input contains non-finite values")
    return x


def _check_pair(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> None:
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d = A.shape[1]
    if spec.family == "ard" and len(spec.lengthscales) != d:
        raise DimensionMismatch(f"ARD kernel has {len(spec.lengthscales)} lengthscales, data has d={d}")
    if spec.family == "sinc" and d != 1:
        raise DimensionMismatch("sinc kernel is defined on scalar inputs only")


def _prepare(spec, A, B):
    A = _as_samples(A)
    B = _as_samples(B)
    _check_pair(spec, A, B)
    return A, B


# ---------------------------------------------------------------------------
# sinc: s(u) = sin(u)/u and its first two derivatives, series near u = 0
# ---------------------------------------------------------------------------

_SINC_SERIES_RADIUS = 0.1
_SINC_TERMS = 7


def _sinc_parts(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = np.empty_like(u)
    s1 = np.empty_like(u)
    s2 = np.empty_like(u)
    small = np.abs(u) < _SINC_SERIES_RADIUS
    big = ~small

    ub = u[big]
    sn, cs = np.sin(ub), np.cos(ub)
    s[big] = sn / ub
    s1[big] = (ub * cs - sn) / ub**2
    s2[big] = -sn / ub - 2.0 * cs / ub**2 + 2.0 * sn / ub**3

    # sin(u)/u = sum_k (-1)^k u^(2k) / (2k+1)!
    us = u[small]
    s[small] = 0.0
    s1[small] = 0.0
    s2[small] = 0.0
    for k in range(_SINC_TERMS):
        c = (-1.0) ** k / math.factorial(2 * k + 1)
        s[small] += c * us ** (2 * k)
        if k >= 1:
            s1[small] += c * 2 * k * us ** (2 * k - 1)
            s2[small] += c * 2 * k * (2 * k - 1) * us ** (2 * k - 2)
    return s, s1, s2


# ---------------------------------------------------------------------------
# vectorised kernels
# ---------------------------------------------------------------------------


def cross_kernel(spec: KernelSpec, A, B) -> np.ndarray:
    """Kernel matrix ``K[i, l] = k(A[i], B[l])``."""
    A, B = _prepare(spec, A, B)
    f = spec.family
    if f == "linear":
        return A @ B.T
    if f == "poly":
        return (spec.gamma * (A @ B.T) + spec.coef0) ** spec.degree
    if f == "tanh":
        return np.tanh(spec.gamma * (A @ B.T) + spec.coef0)
    if f == "rbf":
        return np.exp(-spec.gamma * _sq_dists(A, B))
    if f == "ard":
        ls = np.asarray(spec.lengthscales)
        return spec.signal_var * np.exp(-0.5 * _sq_dists(A / ls, B / ls))
    # sinc
    u = spec.bandwidth * (A[:, 0][:, None] - B[:, 0][None, :])
    return _sinc_parts(u)[0]


def cross_grad(spec: KernelSpec, A, B) -> np.ndarray:
    """First partials ``G[i, l, j] = dk(A[i], B[l]) / dA[i, j]``; shape (n, m, d)."""
    A, B = _prepare(spec, A, B)
    n, d = A.shape
    m = B.shape[0]
    f = spec.family
    if f == "linear":
        return np.broadcast_to(B[None, :, :], (n, m, d)).copy()
    if f == "poly":
        u = spec.gamma * (A @ B.T) + spec.coef0
        p = spec.degree
        return (spec.gamma * p * u ** (p - 1))[..., None] * B[None, :, :]
    if f == "tanh":
        t = np.tanh(spec.gamma * (A @ B.T) + spec.coef0)
        return (spec.gamma * (1.0 - t * t))[..., None] * B[None, :, :]
    if f == "rbf":
        diff = A[:, None, :] - B[None, :, :]
        k = np.exp(-spec.gamma * np.sum(diff**2, axis=-1))
        return -2.0 * spec.gamma * diff * k[..., None]
    if f == "ard":
        ls2 = np.asarray(spec.lengthscales) ** 2
        diff = A[:, None, :] - B[None, :, :]
        k = spec.signal_var * np.exp(-0.5 * np.sum(diff**2 / ls2, axis=-1))
        return -(diff / ls2) * k[..., None]
    W = spec.bandwidth
    u = W * (A[:, 0][:, None] - B[:, 0][None, :])
    return (W * _sinc_parts(u)[1])[..., None]


def cross_hess(spec: KernelSpec, A, B) -> np.ndarray:
    """Second partials ``H[i, l, j, k] = d2k(A[i], B[l]) / dA[i, j] dA[i, k]``; shape (n, m, d, d)."""
    A, B = _prepare(spec, A, B)
    n, d = A.shape
    m = B.shape[0]
    f = spec.family
    if f == "linear":
        return np.zeros((n, m, d, d))
    if f == "poly":
        p = spec.degree
        if p == 1:
            return np.zeros((n, m, d, d))
        u = spec.gamma * (A @ B.T) + spec.coef0
        outer = B[:, :, None] * B[:, None, :]
        coef = (p - 1) * p * spec.gamma**2 * u ** (p - 2)
        return coef[..., None, None] * outer[None, :, :, :]
    if f == "tanh":
        t = np.tanh(spec.gamma * (A @ B.T) + spec.coef0)
        outer = B[:, :, None] * B[:, None, :]
        coef = -2.0 * spec.gamma**2 * (1.0 - t * t) * t
        return coef[..., None, None] * outer[None, :, :, :]
    if f == "rbf":
        g = spec.gamma
        diff = A[:, None, :] - B[None, :, :]
        k = np.exp(-g * np.sum(diff**2, axis=-1))
        H = 4.0 * g * g * diff[..., :, None] * diff[..., None, :]
        H -= 2.0 * g * np.eye(d)
        return H * k[..., None, None]
    if f == "ard":
        ls2 = np.asarray(spec.lengthscales) ** 2
        diff = A[:, None, :] - B[None, :, :]
        k = spec.signal_var * np.exp(-0.5 * np.sum(diff**2 / ls2, axis=-1))
        z = diff / ls2
        H = z[..., :, None] * z[..., None, :] - np.diag(1.0 / ls2)
        return H * k[..., None, None]
    W = spec.bandwidth
    u = W * (A[:, 0][:, None] - B[:, 0][None, :])
    return (W * W * _sinc_parts(u)[2])[..., None, None]


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # direct differences rather than the |a|^2 + |b|^2 - 2ab expansion: exact zeros on the diagonal
    return np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=-1)


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------


def evaluate(spec: KernelSpec, x, y) -> float:
    """``k(x, y)`` for two vectors of equal length.

    >>> evaluate(KernelSpec.poly(gamma=1, coef0=1, degree=2), [1, 1], [1, 1])
    9.0
    """
    x, y = _as_point(x), _as_point(y)
    return float(cross_kernel(spec, x[None, :], y[None, :])[0, 0])


def grad_x(spec: KernelSpec, x, y) -> np.ndarray:
    """Gradient of ``k(x, y)`` with respect to ``x``."""
    x, y = _as_point(x), _as_point(y)
    return cross_grad(spec, x[None, :], y[None, :])[0, 0]


def hessian_x(spec: KernelSpec, x, y) -> np.ndarray:
    """Hessian of ``k(x, y)`` with respect to ``x`` (d x d, symmetric)."""
    x, y = _as_point(x), _as_point(y)
    H = cross_hess(spec, x[None, :], y[None, :])[0, 0]
    return 0.5 * (H + H.T)


def nth_partial_rbf(gamma: float, x, y, j: int, m: int) -> float:
    """m-th partial derivative of the RBF kernel along coordinate ``j``.

    With ``k = exp(g)`` and ``g = -gamma |x - y|^2`` the inner function has
    ``g' = -2 gamma (x^j - y^j)``, ``g'' = -2 gamma`` and vanishing higher
    derivatives, so the chain rule collapses to the recurrence

        D_m = g' D_{m-1} + (m - 1) g'' D_{m-2},   D_0 = k(x, y).
    """
    if int(m) != m or m < 1:
        raise InvalidOrder(f"derivative order must be an integer >= 1, got {m}")
    spec = KernelSpec.rbf(gamma)
    x, y = _as_point(x), _as_point(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"dimension mismatch: {x.size} vs {y.size}")
    if not 0 <= j < x.size:
        raise DimensionMismatch(f"feature index {j} out of range for d={x.size}")
    g1 = -2.0 * spec.gamma * (x[j] - y[j])
    g2 = -2.0 * spec.gamma
    prev, cur = 0.0, evaluate(spec, x, y)
    for order in range(1, int(m) + 1):
        prev, cur = cur, g1 * cur + (order - 1) * g2 * prev
    return float(cur)


def gram(spec: KernelSpec, X) -> np.ndarray:
    """Gram matrix of a sample set; the upper triangle is mirrored so the result is exactly symmetric."""
    X = _as_samples(X)
    if X.shape[0] < 1:
        raise DimensionMismatch("need at least one sample")
    K = cross_kernel(spec, X, X)
    return np.triu(K) + np.triu(K, 1).T


def gram_grad_col(spec: KernelSpec, x_star, X, j: int) -> np.ndarray:
    """``[dk(x*, x_1)/dx^j, ..., dk(x*, x_n)/dx^j]``."""
    x_star = _as_point(x_star)
    X = _as_samples(X)
    if not 0 <= j < x_star.size:
        raise DimensionMismatch(f"feature index {j} out of range for d={x_star.size}")
    return cross_grad(spec, x_star[None, :], X)[0, :, j]


def poly2_feature_map(x) -> np.ndarray:
    """Explicit feature map of the kernel ``(1 + x.y)^2`` on R^2."""
    x = _as_point(x)
    if x.size != 2:
        raise DimensionMismatch(f"feature map is defined for d=2, got d={x.size}")
    a, b = x
    r2 = math.sqrt(2.0)
    return np.array([1.0, a * a, b * b, r2 * a, r2 * b, r2 * a * b])
