"""Dense symmetric linear algebra shared by the kernel machines.

Two primitives are needed: solving with ``K + jitter*I`` for symmetric
positive-definite Gram matrices (Cholesky with jitter escalation) and the
full eigendecomposition of a symmetric matrix, eigenvalues descending.
Both are thin, validated wrappers around LAPACK through numpy/scipy.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import cho_solve

from .errors import DimensionMismatch, NonFiniteInput, NotPositiveDefinite

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-10
MAX_ESCALATIONS = 3


def as_sym_matrix(A, check: bool = True) -> np.ndarray:
    """Return ``A`` as a float square array, checking finiteness and symmetry.

    Symmetry is checked entrywise as
    ``|A[i, j] - A[j, i]| <= 1e-10 * max(1, |A[i, j]|)``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteInput("matrix contains non-finite entries")
    if check:
        gap = np.abs(A - A.T)
        if np.any(gap > SYMMETRY_RTOL * np.maximum(1.0, np.abs(A))):
            raise DimensionMismatch("matrix is not symmetric")
    return A


def default_jitter(A: np.ndarray) -> float:
    return 1e-10 * float(np.mean(np.abs(np.diag(A)))) if A.size else 0.0


def cholesky_jitter(A, jitter: float | None = None) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``A + jitter*I``.

    The first attempt uses ``jitter`` as given (default ``1e-10`` times the
    mean absolute diagonal). On failure the jitter is multiplied by 10, at
    most three times; a zero starting jitter escalates to the default first.

    Returns
    -------
    L : ndarray
        Lower-triangular factor.
    jitter : float
        The jitter actually added to the diagonal.
    """
    A = as_sym_matrix(A)
    if jitter is None:
        jitter = default_jitter(A)
    if jitter < 0:
        raise ValueError("jitter must be non-negative")
    n = A.shape[0]
    eye = np.eye(n)
    current = float(jitter)
    for attempt in range(MAX_ESCALATIONS + 1):
        tried = current
        try:
            L = np.linalg.cholesky(A + current * eye)
        except np.linalg.LinAlgError:
            L = None
        if L is not None and np.all(np.isfinite(L)):
            if attempt:
                logger.debug("cholesky succeeded after %d escalations (jitter=%g)", attempt, current)
            return L, current
        current = current * 10.0 if current > 0 else max(default_jitter(A), np.finfo(float).tiny)
    raise NotPositiveDefinite(
        f"Cholesky failed after {MAX_ESCALATIONS} jitter escalations (last jitter {tried:g})"
    )


def chol_solve(A, b, jitter: float | None = None) -> np.ndarray:
    """Solve ``(A + jitter*I) x = b`` for symmetric positive-definite ``A``.

    >>> chol_solve([[2.0, 1.0], [1.0, 2.0]], [3.0, 3.0], jitter=0.0)
    array([1., 1.])
    """
    A = as_sym_matrix(A)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix is {A.shape[0]}x{A.shape[0]}")
    if not np.all(np.isfinite(b)):
        raise NonFiniteInput("right-hand side contains non-finite entries")
    L, _ = cholesky_jitter(A, jitter)
    return cho_solve((L, True), b)


def sym_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues are returned in descending order; column ``V[:, i]`` is the
    unit eigenvector for ``w[i]``, signed so that its largest-magnitude
    component is positive.
    """
    A = as_sym_matrix(A)
    w, V = np.linalg.eigh(A)
    w = w[::-1].copy()
    V = V[:, ::-1].copy()
    if V.size:
        lead = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
        V *= np.where(lead < 0, -1.0, 1.0)
    return w, V
