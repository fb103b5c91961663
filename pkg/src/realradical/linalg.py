"""Dense real linear algebra used throughout the pipeline.

Factorizations delegate to LAPACK through numpy; the numerical-rank rule is
local because rank decisions drive every later step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NonFinite, NotPositiveDefinite, NotSymmetric, UnsortedInput

SVD_ZERO_TOL = 1e-8
GAP_RATIO = 1e-3


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_finite(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has non-finite entries")
    return A


def svd(A) -> SvdResult:
    """Thin SVD with singular values in nonincreasing order."""
    A = _as_finite(A)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if A.size == 0:
        k = min(A.shape)
        return SvdResult(np.zeros((A.shape[0], k)), np.zeros(k), np.zeros((A.shape[1], k)))
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return SvdResult(U, s, Vt.T)


def numerical_rank(singular_values, zero_tol: float = SVD_ZERO_TOL,
                   gap_ratio: float = GAP_RATIO, gap_mode: str = "ratio") -> int:
    """Number of leading singular values kept before the first cut.

    A cut happens before sigma_{k+1} when it is below ``zero_tol`` or when it
    decays from sigma_k by more than ``gap_ratio``, i.e.
    ``sigma_{k+1} / sigma_k <= gap_ratio``.  ``gap_mode="difference"`` reads the
    decay literally as an absolute drop ``sigma_k - sigma_{k+1} > gap_ratio``;
    it is scale dependent and kept only for comparison.
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        return 0
    if not (zero_tol > 0 and 0 < gap_ratio < 1):
        raise ValueError("need zero_tol > 0 and 0 < gap_ratio < 1")
    if np.any(np.diff(s) > 1e-12 * max(1.0, s[0])):
        raise UnsortedInput("singular values must be nonincreasing")
    if s[0] < zero_tol:
        return 0
    for k in range(1, s.size):
        if s[k] < zero_tol:
            return k
        if gap_mode == "ratio":
            if s[k] / s[k - 1] <= gap_ratio:
                return k
        elif gap_mode == "difference":
            if s[k - 1] - s[k] > gap_ratio:
                return k
        else:
            raise ValueError(f"unknown gap_mode {gap_mode!r}")
    return int(s.size)


def eig_nonsymmetric(A) -> EigResult:
    """Eigenvalues and right eigenvectors of a real square matrix (Hessenberg-QR)."""
    A = _as_finite(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigResult(w.astype(complex), V.astype(complex))


def eig_symmetric(A, tol: float = 1e-10):
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix."""
    A = _as_finite(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if np.abs(A - A.T).max(initial=0.0) > tol * scale:
        raise NotSymmetric("matrix is not symmetric")
    lam, Q = np.linalg.eigh((A + A.T) / 2)
    return lam[::-1], Q[:, ::-1]


def solve_spd(A, b):
    """Solve ``A x = b`` by Cholesky; raises when a pivot is not positive."""
    A = _as_finite(A)
    b = _as_finite(b)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("Cholesky pivot <= 0") from exc
    from scipy.linalg import solve_triangular

    z = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, z, lower=False)


def min_eig(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh((A + A.T) / 2)[0])


def orth_complement(A, tol: float = 1e-10):
    """Orthonormal basis of the null space of ``A`` plus its numerical rank."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return np.eye(A.shape[1]), 0
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return Vt[rank:].T.copy(), rank
