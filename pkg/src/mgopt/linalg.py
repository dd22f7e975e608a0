"""Dense symmetric linear algebra: SPD solves, eigensolves, Schur complements."""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np
import scipy.linalg as sla

from .errors import AsymmetricMatrix, ConvergenceFailure, NotPositiveDefinite, SingularInteriorBlock

# max asymmetry allowed, relative to the largest entry
SYMMETRY_TOL = 1e-12
# Cholesky pivots below PIVOT_TOL times their diagonal entry are rejected
PIVOT_TOL = 1e-12
# residual contract of solve_spd: |Ax - b| <= SOLVE_TOL (|A||x| + |b|)
SOLVE_TOL = 1e-10
# residual contract of sym_eig: |Av - lv| <= EIG_TOL |A|
EIG_TOL = 1e-9


def as_symmetric(A, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Return ``A`` as a float array after checking it is square and symmetric.

    The returned matrix is exactly symmetric (the average of ``A`` and its
    transpose).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise AsymmetricMatrix(f"expected a square matrix, got shape {A.shape}")
    if A.size == 0:
        return A.copy()
    scale = np.max(np.abs(A))
    if np.max(np.abs(A - A.T)) > tol * scale:
        raise AsymmetricMatrix("matrix is not symmetric")
    return 0.5 * (A + A.T)


def cholesky(A) -> np.ndarray:
    """Lower Cholesky factor with the pivot test of :func:`solve_spd`."""
    A = as_symmetric(A)
    n = A.shape[0]
    if n == 0:
        return A
    tr = np.trace(A)
    if not tr > 0:
        raise NotPositiveDefinite("trace is not positive")
    try:
        Lf = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky factorization failed") from None
    # each pivot is at most its diagonal entry; the ratio is scale invariant
    ratio = np.diag(Lf) ** 2 / np.diag(A)
    if np.min(ratio) < PIVOT_TOL:
        raise NotPositiveDefinite(f"pivot ratio {np.min(ratio):.3e} below tolerance")
    return Lf


def solve_spd(A, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Raises
    ------
    NotPositiveDefinite
        If a Cholesky pivot falls below ``PIVOT_TOL`` times its diagonal entry.
    """
    Lf = cholesky(A)
    b = np.asarray(b, dtype=float)
    if Lf.shape[0] == 0:
        return b.copy()
    return sla.cho_solve((Lf, True), b)


def sym_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""
    A = as_symmetric(A)
    try:
        return np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from None


def schur_complement(A, keep: Iterable[int]) -> np.ndarray:
    """``A_BB - A_BI A_II^{-1} A_IB`` with ``B = keep`` and ``I`` the rest.

    The kept indices appear in the order given.

    Raises
    ------
    SingularInteriorBlock
        If the eliminated block is not positive definite.
    """
    A = as_symmetric(A)
    keep = np.asarray(list(keep), dtype=int)
    n = A.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[keep] = False
    elim = np.flatnonzero(mask)
    S = A[np.ix_(keep, keep)]
    if elim.size == 0:
        return S.copy()
    try:
        Lf = cholesky(A[np.ix_(elim, elim)])
    except NotPositiveDefinite as exc:
        raise SingularInteriorBlock(str(exc)) from None
    X = sla.solve_triangular(Lf, A[np.ix_(elim, keep)], lower=True)
    S = S - X.T @ X
    return 0.5 * (S + S.T)
