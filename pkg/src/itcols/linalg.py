"""
Dense complex linear algebra used by the estimators.

Matrices are plain ``numpy`` complex128 arrays. The module provides a
cyclic Jacobi eigensolver for Hermitian matrices, Gram-based subspace
projectors and a couple of small helpers.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

HERMITIAN_RTOL = 1e-9
CLAMP_BAND = 1e-12
CLAMP_FLOOR = 1e-18
GRAM_PIVOT_RTOL = 1e-10


class DimensionError(ValueError):
    """Raised when a matrix has the wrong shape for an operation."""


class SymmetryError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


class SingularGramError(np.linalg.LinAlgError):
    """Raised when the columns of a steering matrix are (nearly) dependent."""


@dataclass(frozen=True)
class EigenSpectrum:
    """
    Eigenvalues sorted in descending order, with optional eigenvectors.

    Attributes
    ----------
    eigenvalues : np.ndarray
        Real array of shape (M,), ``eigenvalues[i] >= eigenvalues[i + 1]``.
    eigenvectors : np.ndarray or None
        Column-orthonormal complex matrix of shape (M, M); column ``i``
        belongs to ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.eigenvalues)

    def reconstruct(self):
        if self.eigenvectors is None:
            raise ValueError("spectrum was computed without eigenvectors")
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def _as_square(X, name="matrix"):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {X.shape}")
    return X


def check_hermitian(R, rtol=HERMITIAN_RTOL):
    """Return ``R`` as complex128 after verifying it is square and Hermitian."""
    R = _as_square(R).astype(np.complex128, copy=False)
    scale = np.max(np.abs(R)) if R.size else 0.0
    if not np.all(np.isfinite(R)):
        raise ValueError("matrix contains non-finite entries")
    if scale > 0 and np.max(np.abs(R - R.conj().T)) > rtol * scale:
        raise SymmetryError("matrix is not Hermitian within tolerance")
    return R


def _round_robin(n):
    """Pairings of ``range(n)`` such that every pair appears once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_sweeps(A, V, tol, max_sweeps):
    n = A.shape[0]
    offdiag = ~np.eye(n, dtype=bool)
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        if np.sqrt(np.sum(np.abs(A[offdiag]) ** 2)) <= tol:
            return
        for p, q in rounds:
            b = A[p, q]
            mag = np.abs(b)
            active = mag > tol * 1e-3 / n
            if not active.any():
                continue
            p, q, b, mag = p[active], q[active], b[active], mag[active]
            phase = b / mag
            # Rotate column q by the conjugate phase so each pivot is real,
            # then annihilate it with a real symmetric Jacobi rotation.
            tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            J = np.eye(n, dtype=np.complex128)
            J[p, p] = c
            J[p, q] = s
            J[q, p] = -s * phase.conj()
            J[q, q] = c * phase.conj()
            A[:] = J.conj().T @ A @ J
            A[p, q] = 0.0
            A[q, p] = 0.0
            V[:] = V @ J
    raise np.linalg.LinAlgError("Jacobi iteration did not converge")


def hermitian_eigendecompose(R, vectors=True, clamp=True, max_sweeps=60):
    """
    Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    R : array_like, shape (M, M)
        Hermitian matrix (checked to a relative tolerance of 1e-9).
    vectors : bool
        Also return the eigenvectors.
    clamp : bool
        Lift eigenvalues in ``(-1e-12 λmax, 1e-18 λmax)`` to ``1e-18 λmax``
        so that their logarithm stays finite. Eigenvalues more negative
        than the band are left untouched.

    Returns
    -------
    EigenSpectrum
    """
    R = check_hermitian(R)
    n = R.shape[0]
    A = 0.5 * (R + R.conj().T)
    V = np.eye(n, dtype=np.complex128)
    norm = np.sqrt(np.sum(np.abs(A) ** 2))
    if n > 1 and norm > 0:
        _jacobi_sweeps(A, V, 1e-15 * norm, max_sweeps)
    w = np.diag(A).real.copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    if clamp and n:
        lam_max = w[0]
        if lam_max > 0:
            band = (w < CLAMP_FLOOR * lam_max) & (w > -CLAMP_BAND * lam_max)
            w[band] = CLAMP_FLOOR * lam_max
    return EigenSpectrum(w, V if vectors else None)


def projector(A):
    """
    Orthogonal projector ``A (A^H A)^{-1} A^H`` onto the column space of ``A``.

    Admissibility is decided by a Cholesky factorisation of the Gram
    matrix; the projector itself is assembled from an orthonormal QR basis
    so that it stays idempotent for ill-conditioned (but admissible) ``A``.
    An ``(M, 0)`` input yields the zero matrix.

    Raises
    ------
    SingularGramError
        If a Cholesky pivot falls below ``1e-10`` times the largest Gram
        diagonal entry, i.e. the columns are numerically dependent.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {A.shape}")
    m, k = A.shape
    if k == 0:
        return np.zeros((m, m), dtype=np.complex128)
    if k > m:
        raise SingularGramError(f"{k} columns cannot be independent in dimension {m}")
    _cholesky(A.conj().T @ A)
    Q, _ = np.linalg.qr(A)
    P = Q @ Q.conj().T
    return 0.5 * (P + P.conj().T)


def _cholesky(G):
    n = G.shape[0]
    diag_max = np.max(G.diagonal().real)
    floor = GRAM_PIVOT_RTOL * diag_max
    L = np.zeros_like(G)
    for j in range(n):
        pivot = G[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if not pivot > floor:
            raise SingularGramError(f"Gram pivot {pivot:.3e} below {floor:.3e}")
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (G[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j]
    return L


def orthogonal_complement(P, check=True):
    """Return ``I - P`` for an orthogonal projector ``P``."""
    P = _as_square(P, "projector").astype(np.complex128, copy=False)
    if check and P.size:
        if np.max(np.abs(P - P.conj().T)) > 1e-9 or np.max(np.abs(P @ P - P)) > 1e-9:
            raise ValueError("input is not a Hermitian idempotent projector")
    return np.eye(P.shape[0], dtype=np.complex128) - P


def trace_real(X):
    """Real part of the trace of a square matrix."""
    X = _as_square(X)
    return float(np.sum(X.diagonal().real))
