"""Binary soft-margin SVM trained by sequential minimal optimisation.

The decision function is ``f(x) = sum_i y_i alpha_i k(x, x_i) + b``. Besides
the usual sign prediction the model exposes the gradient of the smooth
surrogate ``tanh(f(x))``, split by the product rule into the mask term
``1 - tanh^2(f)`` and the kernel term ``grad f``.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels as kern
from ._cv import kfold_indices
from .errors import DimensionMismatch, NonFiniteInput, SingleClassInput
from .kernels import KernelSpec

logger = logging.getLogger(__name__)


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SmoothGradient:
    decision: float
    mask_term: float
    kernel_grad: np.ndarray
    full_grad: np.ndarray


@dataclass(frozen=True, eq=False)
class SvmModel:
    sv_x: np.ndarray
    sv_coef: np.ndarray  # y_i * alpha_i
    bias: float
    kernel: KernelSpec
    C: float
    converged: bool = True
    n_updates: int = 0
    max_kkt_violation: float = 0.0

    @property
    def d(self) -> int:
        return self.sv_x.shape[1]

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

    def decision(self, x_star):
        x, single = self._points(x_star)
        f = kern.cross_kernel(self.kernel, x, self.sv_x) @ self.sv_coef + self.bias
        return float(f[0]) if single else f

    def predict(self, x_star):
        """Class labels in {-1, +1}; a zero decision maps to +1."""
        f = self.decision(x_star)
        if np.ndim(f) == 0:
            return 1 if f >= 0 else -1
        return np.where(f >= 0, 1, -1)

    def kernel_gradient(self, x_star):
        x, single = self._points(x_star)
        g = np.einsum("mnj,n->mj", kern.cross_grad(self.kernel, x, self.sv_x), self.sv_coef)
        return g[0] if single else g

    def smooth_decision_gradient(self, x_star) -> SmoothGradient:
        x = np.atleast_1d(np.asarray(x_star, dtype=float))
        if x.ndim != 1:
            raise DimensionMismatch("smooth_decision_gradient takes a single point")
        f = self.decision(x)
        mask = 1.0 - np.tanh(f) ** 2
        kg = self.kernel_gradient(x)
        return SmoothGradient(decision=f, mask_term=float(mask), kernel_grad=kg, full_grad=mask * kg)

    def to_dict(self) -> dict:
        return {
            "kind": "svm",
            "kernel": self.kernel.to_dict(),
            "data": {"sv_x": self.sv_x.tolist()},
            "params": {"sv_coef": self.sv_coef.tolist(), "bias": self.bias, "C": self.C,
                       "converged": self.converged},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> SvmModel:
        if obj.get("kind") != "svm":
            raise ValueError(f"not an svm model: kind={obj.get('kind')!r}")
        sv_x = kern._as_samples(obj["data"]["sv_x"])
        p = obj["params"]
        coef = np.asarray(p["sv_coef"], dtype=float)
        if coef.shape != (sv_x.shape[0],):
            raise DimensionMismatch("sv_coef length does not match support vectors")
        return cls(sv_x, coef, float(p["bias"]), KernelSpec.from_dict(obj["kernel"]), float(p["C"]),
                   bool(p.get("converged", True)))


class _Smo:
    """Platt's SMO over a precomputed Gram matrix.

    Conventions: ``f(x_i) = sum_l alpha_l y_l K[i, l] + b`` and the error cache
    holds ``E_i = f(x_i) - y_i``. Everything that steers the search depends on
    y only through sign-invariant quantities, so flipping all labels produces
    the exactly negated model.
    """

    EPS = 1e-12

    def __init__(self, K, y, C, tol, max_updates, rng):
        self.K = K
        self.y = y
        self.C = C
        self.tol = tol
        self.max_updates = max_updates
        self.rng = rng
        n = y.size
        self.alpha = np.zeros(n)
        self.b = 0.0
        self.E = -y.astype(float)
        self.updates = 0

    def _objective_at(self, i1, i2, a2_new):
        # dual objective to minimise, restricted to the constraint line, up to a constant
        y1, y2 = self.y[i1], self.y[i2]
        a1, a2 = self.alpha[i1], self.alpha[i2]
        s = y1 * y2
        K11, K22, K12 = self.K[i1, i1], self.K[i2, i2], self.K[i1, i2]
        c1 = y1 * (self.E[i1] - self.b) - a1 * K11 - s * a2 * K12
        c2 = y2 * (self.E[i2] - self.b) - s * a1 * K12 - a2 * K22
        a1_new = a1 + s * (a2 - a2_new)
        return (a1_new * c1 + a2_new * c2 + 0.5 * a1_new**2 * K11 + 0.5 * a2_new**2 * K22
                + s * a1_new * a2_new * K12)

    def take_step(self, i1, i2) -> bool:
        if i1 == i2:
            return False
        y, K, C = self.y, self.K, self.C
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = self.E[i1], self.E[i2]
        s = y1 * y2
        if s < 0:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            L, H = max(0.0, a2 + a1 - C), min(C, a2 + a1)
        if L >= H:
            return False
        K11, K22, K12 = K[i1, i1], K[i2, i2], K[i1, i2]
        eta = K11 + K22 - 2.0 * K12
        if eta > self.EPS:
            a2n = a2 + y2 * (E1 - E2) / eta
            a2n = min(max(a2n, L), H)
        else:
            lobj = self._objective_at(i1, i2, L)
            hobj = self._objective_at(i1, i2, H)
            if lobj < hobj - self.EPS:
                a2n = L
            elif lobj > hobj + self.EPS:
                a2n = H
            else:
                a2n = a2
        if abs(a2n - a2) < self.EPS * (a2n + a2 + self.EPS):
            return False
        a1n = a1 + s * (a2 - a2n)
        a1n = _snap(a1n, C)
        a2n = _snap(a2n, C)

        d1, d2 = y1 * (a1n - a1), y2 * (a2n - a2)
        b1 = self.b - E1 - d1 * K11 - d2 * K12
        b2 = self.b - E2 - d1 * K12 - d2 * K22
        if 0.0 < a1n < C:
            b_new = b1
        elif 0.0 < a2n < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.E += d1 * K[:, i1] + d2 * K[:, i2] + (b_new - self.b)
        self.b = b_new
        self.alpha[i1] = a1n
        self.alpha[i2] = a2n
        self.updates += 1
        return True

    def examine(self, i2) -> bool:
        y2, a2, E2 = self.y[i2], self.alpha[i2], self.E[i2]
        r2 = E2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0)):
            return False
        non_bound = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
        if non_bound.size > 1:
            gap = np.abs(self.E[non_bound] - E2)
            i1 = int(non_bound[np.argmax(gap)])
            if self.take_step(i1, i2):
                return True
        n = self.y.size
        for i1 in np.roll(non_bound, -int(self.rng.integers(max(non_bound.size, 1)))):
            if self.take_step(int(i1), i2):
                return True
        for i1 in np.roll(np.arange(n), -int(self.rng.integers(n))):
            if self.take_step(int(i1), i2):
                return True
        return False

    def run(self) -> bool:
        n = self.y.size
        examine_all = True
        changed = 0
        while changed > 0 or examine_all:
            changed = 0
            if examine_all:
                candidates = range(n)
            else:
                candidates = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
            for i in candidates:
                changed += self.examine(int(i))
                if self.updates >= self.max_updates:
                    return False
            if examine_all:
                examine_all = False
            elif changed == 0:
                examine_all = True
        return True

    def kkt_violation(self) -> float:
        r = self.E * self.y
        viol = np.where(self.alpha < self.C, np.maximum(-r, 0.0), 0.0)
        viol = np.maximum(viol, np.where(self.alpha > 0, np.maximum(r, 0.0), 0.0))
        return float(viol.max(initial=0.0))


def _snap(a: float, C: float) -> float:
    tiny = 1e-12 * C
    if a < tiny:
        return 0.0
    if a > C - tiny:
        return C
    return a


def train(X, y, kernel: KernelSpec, C: float = 1.0, tol: float = 1e-3,
          max_passes: int | None = None, seed: int = 0) -> SvmModel:
    """Train a binary SVM.

    Parameters
    ----------
    X : (n, d) array
    y : labels in {-1, +1}
    kernel : KernelSpec
    C : box constraint, > 0
    tol : KKT tolerance
    max_passes : cap on successful pair updates (default ``100 * n``); hitting it
        emits a :class:`ConvergenceWarning` and marks the model unconverged.
    seed : seeds the fallback pair scans, making training deterministic.
    """
    X = kern._as_samples(X)
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    if y.shape[0] != n:
        raise DimensionMismatch(f"{n} inputs but {y.shape[0]} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise SingleClassInput("training data contains a single class")
    if not C > 0:
        raise ValueError("C must be > 0")
    K = kern.gram(kernel, X)
    smo = _Smo(K, y, float(C), float(tol), max_passes or 100 * n, np.random.default_rng(seed))
    converged = smo.run()
    if not converged:
        warnings.warn(f"SMO stopped after {smo.updates} updates without meeting tol={tol}",
                      ConvergenceWarning, stacklevel=2)
    sv = smo.alpha > 0
    return SvmModel(
        sv_x=X[sv].copy(),
        sv_coef=(smo.alpha * y)[sv],
        bias=float(smo.b),
        kernel=kernel,
        C=float(C),
        converged=converged,
        n_updates=smo.updates,
        max_kkt_violation=smo.kkt_violation(),
    )


def grid_search(X, y, Cs, gammas, folds: int = 3, seed: int = 0) -> tuple[float, float, float]:
    """Stratified k-fold accuracy over an RBF ``(C, gamma)`` grid.

    Returns ``(C, gamma, cv_accuracy)``; ties keep the first grid point.
    """
    X = kern._as_samples(X)
    y = np.asarray(y, dtype=float).ravel()
    splits = list(kfold_indices(X.shape[0], folds, seed, labels=y))
    best = None
    for C, gamma in itertools.product(Cs, gammas):
        accs = []
        for tr, te in splits:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                m = train(X[tr], y[tr], KernelSpec.rbf(gamma), C=C, seed=seed)
            accs.append(np.mean(m.predict(X[te]) == y[te]))
        acc = float(np.mean(accs))
        if best is None or acc > best[2]:
            best = (float(C), float(gamma), acc)
    return best
