"""Empirical HSIC, its derivatives with respect to the samples, and uses of them.

``HSIC(X, Y) = Tr(K H L H) / n^2`` with ``H = I - 11^T / n``. Writing
``A = H L H`` the statistic is ``sum_ij A_ij k(x_i, x_j) / n^2`` and, for any
symmetric kernel,

    dHSIC / dx_i^q = 2/n^2 * sum_j A_ij dk(x_i, x_j)/dx_i^q.

The derivative with respect to ``Y`` has the same form with ``K`` and ``L``
swapped.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kern
from .errors import SampleCountMismatch, StepCollapse
from .kernels import KernelSpec

MIN_PERMUTATIONS = 19
MAX_HALVINGS = 20
ROUNDING_FLOOR = 64 * np.finfo(float).eps  # relative to max |K_ij|


@dataclass(frozen=True)
class HsicConfig:
    """Kernels for the two variables; ``None`` means RBF with the median-heuristic scale."""

    kernel_x: KernelSpec | None = None
    kernel_y: KernelSpec | None = None

    def __post_init__(self):
        for k in (self.kernel_x, self.kernel_y):
            if k is not None and not k.is_psd:
                raise ValueError(f"HSIC needs PSD kernels, got {k.family}")

    def resolve(self, X, Y) -> HsicConfig:
        """Fill missing kernels from the data; the result is fixed for later calls."""
        kx = self.kernel_x or KernelSpec.rbf(kern.median_heuristic_gamma(X))
        ky = self.kernel_y or KernelSpec.rbf(kern.median_heuristic_gamma(Y))
        return HsicConfig(kx, ky)


@dataclass(frozen=True)
class HsicField:
    grad_x: np.ndarray
    grad_y: np.ndarray
    magnitude: np.ndarray


def _prepare(X, Y, cfg):
    X = kern._as_samples(X)
    Y = kern._as_samples(Y)
    if X.shape[0] != Y.shape[0]:
        raise SampleCountMismatch(f"X has {X.shape[0]} samples, Y has {Y.shape[0]}")
    if X.shape[0] < 2:
        raise SampleCountMismatch("HSIC needs at least two samples")
    cfg = (cfg or HsicConfig()).resolve(X, Y)
    return X, Y, cfg


def centering_matrix(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def _center(K: np.ndarray) -> np.ndarray:
    """``H K H``, with entries at rounding level set to zero.

    A constant kernel matrix then centres to exactly zero, so a constant
    variable yields HSIC = 0 and a zero gradient field.
    """
    H = centering_matrix(K.shape[0])
    C = H @ K @ H
    C[np.abs(C) <= ROUNDING_FLOOR * np.max(np.abs(K), initial=0.0)] = 0.0
    return C


def hsic(X, Y, cfg: HsicConfig | None = None) -> float:
    """Biased empirical HSIC ``Tr(K H L H) / n^2``, clamped at zero."""
    X, Y, cfg = _prepare(X, Y, cfg)
    return _hsic_resolved(X, Y, cfg)


def _hsic_resolved(X, Y, cfg: HsicConfig) -> float:
    n = X.shape[0]
    K = kern.gram(cfg.kernel_x, X)
    L = kern.gram(cfg.kernel_y, Y)
    # Tr(KHLH) = Tr(HKH HLH) since H is idempotent
    value = float(np.sum(_center(K) * _center(L))) / n**2
    return max(value, 0.0)


def hsic_grad(X, Y, cfg: HsicConfig | None = None) -> HsicField:
    """Derivatives of HSIC with respect to every entry of ``X`` and ``Y``."""
    X, Y, cfg = _prepare(X, Y, cfg)
    gx, gy = _grad_resolved(X, Y, cfg)
    mag = np.sqrt(np.sum(gx**2, axis=1) + np.sum(gy**2, axis=1))
    return HsicField(gx, gy, mag)


def _grad_resolved(X, Y, cfg: HsicConfig) -> tuple[np.ndarray, np.ndarray]:
    n = X.shape[0]
    K = kern.gram(cfg.kernel_x, X)
    L = kern.gram(cfg.kernel_y, Y)
    A = _center(L)
    B = _center(K)
    gx = 2.0 / n**2 * np.einsum("ij,ijq->iq", A, kern.cross_grad(cfg.kernel_x, X, X))
    gy = 2.0 / n**2 * np.einsum("ij,ijq->iq", B, kern.cross_grad(cfg.kernel_y, Y, Y))
    return gx, gy


def hsic_grad_rbf(X, Y, cfg: HsicConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """RBF-only closed form via Hadamard products.

    For ``k = exp(-|x - x'|^2 / (2 sigma^2))``,
    ``dHSIC/dx_i^q = -2 / (sigma^2 n^2) Tr(H L H (K o M))`` where ``M`` is
    zero except row ``i``, which holds ``x_i^q - x_j^q``. Here
    ``1 / sigma^2 = 2 gamma``.
    """
    X, Y, cfg = _prepare(X, Y, cfg)
    if cfg.kernel_x.family != "rbf" or cfg.kernel_y.family != "rbf":
        raise ValueError("closed form requires rbf kernels for both variables")
    n = X.shape[0]
    K = kern.gram(cfg.kernel_x, X)
    L = kern.gram(cfg.kernel_y, Y)

    def field_for(Z, Kz, Other, gamma):
        A = _center(Other)
        inv_sigma2 = 2.0 * gamma
        out = np.empty_like(Z)
        for q in range(Z.shape[1]):
            D = Z[:, q][:, None] - Z[:, q][None, :]
            for i in range(n):
                M = np.zeros((n, n))
                M[i] = D[i]
                out[i, q] = -2.0 * inv_sigma2 / n**2 * np.trace(A @ (Kz * M))
        return out

    return (field_for(X, K, L, cfg.kernel_x.gamma), field_for(Y, L, K, cfg.kernel_y.gamma))


def permutation_pvalue(X, Y, cfg: HsicConfig | None = None, n_perm: int = 199, seed: int = 0,
                       threads: int | None = None) -> float:
    """Permutation p-value ``(1 + #{HSIC_perm >= HSIC_obs}) / (n_perm + 1)``.

    Each permutation of the ``Y`` rows draws from its own child seed, so the
    result does not depend on ``threads``.
    """
    if int(n_perm) != n_perm or n_perm < MIN_PERMUTATIONS:
        raise ValueError(f"n_perm must be an integer >= {MIN_PERMUTATIONS}, got {n_perm}")
    X, Y, cfg = _prepare(X, Y, cfg)
    n = X.shape[0]
    Kc = _center(kern.gram(cfg.kernel_x, X))
    # permuting rows and columns commutes with centering
    Lc = _center(kern.gram(cfg.kernel_y, Y))
    observed = float(np.sum(Kc * Lc))

    children = np.random.SeedSequence(seed).spawn(int(n_perm))

    def stat(child):
        p = np.random.default_rng(child).permutation(n)
        return float(np.sum(Kc * Lc[np.ix_(p, p)]))

    threads = threads or _env_threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            null = list(pool.map(stat, children))
    else:
        null = [stat(c) for c in children]
    # compare unscaled traces with a relative slack so ties from identical permutations count
    slack = 1e-12 * max(abs(observed), 1e-300)
    exceed = sum(v >= observed - slack for v in null)
    return (1 + exceed) / (n_perm + 1)


def _env_threads() -> int:
    try:
        return max(1, int(os.environ.get("KDX_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class Trajectory:
    hsic: list[float] = field(default_factory=list)
    X: list[np.ndarray] = field(default_factory=list)
    Y: list[np.ndarray] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    stopped_early: bool = False
    config: HsicConfig | None = None


def unfold(X, Y, cfg: HsicConfig | None = None, direction: str = "maximize",
           step: float | None = None, iters: int = 100) -> Trajectory:
    """Move the samples along the HSIC gradient to raise or lower dependence.

    Kernels are resolved once from the initial data and then frozen. Each
    iteration tries ``X +/- s grad_x``, ``Y +/- s grad_y`` and halves ``s``
    (up to 20 times) while HSIC moves the wrong way, so the recorded values are
    monotone. The default base step is ``0.1 / max_i |S_i|`` from the initial
    gradient field. If no acceptable step exists the run stops early; on the
    first iteration this raises :class:`StepCollapse`.

    ``Trajectory.hsic[0]`` is the starting value, followed by one entry per
    accepted iteration.
    """
    direction = direction.lower()
    if direction not in ("maximize", "minimize"):
        raise ValueError("direction must be 'maximize' or 'minimize'")
    if int(iters) != iters or iters < 1:
        raise ValueError("iters must be a positive integer")
    X, Y, cfg = _prepare(X, Y, cfg)
    sign = 1.0 if direction == "maximize" else -1.0

    X, Y = X.copy(), Y.copy()
    value = _hsic_resolved(X, Y, cfg)
    gx, gy = _grad_resolved(X, Y, cfg)
    if step is None:
        peak = float(np.max(np.sqrt(np.sum(gx**2, axis=1) + np.sum(gy**2, axis=1))))
        step = 0.1 / peak if peak > 0 else 1.0
    if not step > 0:
        raise ValueError("step must be > 0")
    base = float(step)
    traj = Trajectory(hsic=[value], X=[X.copy()], Y=[Y.copy()], steps=[0.0], config=cfg)

    trial = base
    for it in range(int(iters)):
        if it:
            gx, gy = _grad_resolved(X, Y, cfg)
        s = trial
        for _ in range(MAX_HALVINGS + 1):
            Xn = X + sign * s * gx
            Yn = Y + sign * s * gy
            new = _hsic_resolved(Xn, Yn, cfg)
            if sign * (new - value) >= 0:
                break
            s *= 0.5
        else:
            if it == 0:
                raise StepCollapse("no acceptable step on the first iteration")
            traj.stopped_early = True
            break
        X, Y, value = Xn, Yn, new
        traj.hsic.append(value)
        traj.X.append(X.copy())
        traj.Y.append(Y.copy())
        traj.steps.append(s)
        trial = min(base, 2.0 * s)
    return traj

