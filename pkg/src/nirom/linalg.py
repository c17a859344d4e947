"""Dense matrix primitives shared by the decomposition modules.

Matrices are plain C-ordered (row-major) ``numpy.ndarray`` objects of dtype
``float64`` or ``complex128``. Promotion from real to complex is always an
explicit ``astype(complex)`` by the caller.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DataError, NumericalError


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SvdFactors:
    """Economy SVD ``A ~= U @ diag(sigma) @ W^H``."""

    U: np.ndarray
    sigma: np.ndarray
    W: np.ndarray

    @property
    def rank_used(self):
        return self.sigma.shape[0]

    def reconstruct(self):
        return (self.U * self.sigma) @ self.W.conj().T


def as_matrix(A, name="A"):
    """Validate a 2-D finite array and return it as a C-ordered float/complex array."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DataError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    dtype = np.complex128 if np.iscomplexobj(A) else np.float64
    A = np.ascontiguousarray(A, dtype=dtype)
    bad = ~np.isfinite(A)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DataError(f"{name} has non-finite entry {A[i, j]} at index ({i}, {j})")
    return A


def economy_svd(A):
    """Economy-size SVD of a tall (rows >= cols) matrix."""
    A = as_matrix(A)
    if A.shape[0] < A.shape[1]:
        raise DataError(
            f"economy_svd expects rows >= cols, got {A.shape}; transpose the input"
        )
    U, s, Wh = np.linalg.svd(A, full_matrices=False)
    return SvdFactors(U, s, Wh.conj().T)


def eig_general(S, rtol=1e-8):
    """Eigendecomposition of a general square matrix.

    Returns ``(X, lam)`` with unit 2-norm eigenvector columns. Raises
    ``NumericalError`` with the achieved residual if
    ``||S X - X diag(lam)||_F > rtol * ||S||_F``.
    """
    S = as_matrix(S, "S")
    k = S.shape[0]
    if S.shape[1] != k:
        raise DataError(f"S must be square, got {S.shape}")
    if k > 512:
        raise DataError(f"reduced operator too large ({k} > 512)")
    lam, X = np.linalg.eig(S)
    X = X / np.linalg.norm(X, axis=0)
    resid = frobenius(S @ X - X * lam)
    scale = frobenius(S)
    if resid > rtol * max(scale, np.finfo(float).tiny):
        raise NumericalError(
            f"eigen residual {resid:.3e} exceeds {rtol:g} * ||S||_F = {rtol * scale:.3e}"
        )
    return X, lam


def orthonormalize(Q, rtol=None):
    """Orthonormal basis for range(Q); numerically dependent columns are dropped.

    Uses QR with column pivoting. A column is kept while ``|R_ii|`` exceeds
    ``rtol * |R_00|`` (default ``max(shape) * eps``). A zero matrix yields a
    basis with zero columns.
    """
    Q = as_matrix(Q, "Q")
    m, n = Q.shape
    if m < n:
        raise DataError(f"orthonormalize expects rows >= cols, got {Q.shape}")
    if rtol is None:
        rtol = max(m, n) * np.finfo(float).eps
    Qr, R, _ = scipy.linalg.qr(Q, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0.0:
        return np.zeros((m, 0), dtype=Q.dtype)
    rank = int(np.count_nonzero(d > rtol * d[0]))
    return np.ascontiguousarray(Qr[:, :rank])


def pinv_diag(sigma, rel_tol=1e-12):
    """Pseudoinverse of a nonincreasing nonnegative diagonal.

    Entries at or below ``rel_tol * sigma[0]`` map to zero. Emits
    ``RankDeficiencyWarning`` when every entry is zero.
    """
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros_like(sigma)
    if sigma.size == 0 or sigma[0] <= 0.0:
        warnings.warn("all singular values are zero; pseudoinverse is zero",
                      RankDeficiencyWarning, stacklevel=2)
        return out
    keep = sigma > rel_tol * sigma[0]
    out[keep] = 1.0 / sigma[keep]
    return out


def frobenius(A):
    A = np.abs(np.asarray(A))
    peak = A.max(initial=0.0)
    if peak == 0 or not np.isfinite(peak):
        return float(peak)
    # scale first so tiny or huge entries neither underflow nor overflow
    return float(peak * np.sqrt(np.sum((A / peak) ** 2)))


def lstsq_min_norm(A, b, rel_tol=1e-12):
    """Minimum-norm least-squares solution ``x = A^+ b`` via SVD.

    Returns ``(x, residual_norm, rank)``.
    """
    A = as_matrix(A)
    U, s, Wh = np.linalg.svd(A, full_matrices=False)
    s_inv = pinv_diag(s, rel_tol) if s.size else s
    x = Wh.conj().T @ (s_inv * (U.conj().T @ b))
    resid = float(np.linalg.norm(A @ x - b))
    return x, resid, int(np.count_nonzero(s_inv))
