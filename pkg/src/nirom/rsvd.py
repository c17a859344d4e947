"""Randomized economy SVD through a Gaussian sketch."""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .linalg import SvdFactors, as_matrix, economy_svd, orthonormalize


@dataclass(frozen=True)
class SketchConfig:
    """Sketch parameters.

    ``k`` is the target rank; the sketch width is ``min(n, 2k)``.
    ``power_iterations`` > 0 enables subspace iteration, which is not part of
    the plain algorithm and is off by default.
    """

    k: int
    seed: int = 0
    power_iterations: int = 0

    def sketch_width(self, n):
        return min(n, 2 * self.k)

    def validate(self, n):
        if not 2 <= self.k < n:
            raise ConfigError(f"target rank k={self.k} must satisfy 2 <= k < n={n}")
        if self.power_iterations < 0:
            raise ConfigError("power_iterations must be >= 0")


def make_rng(seed):
    """Counter-based generator; call-local so concurrent calls never share state."""
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def _complete_basis(Q, width, rng):
    # Pad a rank-deficient range basis with random directions orthogonal to it.
    m = Q.shape[0]
    while Q.shape[1] < width:
        Z = rng.standard_normal((m, width - Q.shape[1]))
        Z -= Q @ (Q.conj().T @ Z)
        Q = np.hstack([Q, orthonormalize(Z)])
        Q = orthonormalize(Q)
    return Q


def randomized_svd(A, cfg):
    """Rank-``cfg.k`` SVD of a tall matrix ``A`` (m >= n) from a random sketch.

    The small SVD is computed on the full ``2k`` sketch and the top ``k``
    triplets are kept.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        raise DataError(f"randomized_svd expects m >= n, got {A.shape}; transpose A")
    cfg.validate(n)
    r = cfg.sketch_width(n)
    rng = make_rng(cfg.seed)

    M = rng.standard_normal((n, r))
    Q = orthonormalize(A @ M)
    for _ in range(cfg.power_iterations):
        Z = orthonormalize(A.conj().T @ Q)
        Q = orthonormalize(A @ Z)
    if Q.shape[1] < cfg.k:
        Q = _complete_basis(Q, cfg.k, rng)

    B = Q.conj().T @ A
    # B is short and wide; factor its adjoint so economy_svd sees a tall matrix.
    small = economy_svd(B.conj().T)
    Q1, W = small.W, small.U
    U = Q @ Q1
    k = cfg.k
    return SvdFactors(
        np.ascontiguousarray(U[:, :k]),
        np.ascontiguousarray(small.sigma[:k]),
        np.ascontiguousarray(W[:, :k]),
    )


def full_svd_reference(A, k):
    """Deterministic economy SVD truncated to ``k`` columns."""
    f = economy_svd(A)
    if not 1 <= k <= f.rank_used:
        raise ConfigError(f"k={k} outside [1, {f.rank_used}]")
    return SvdFactors(
        np.ascontiguousarray(f.U[:, :k]),
        f.sigma[:k].copy(),
        np.ascontiguousarray(f.W[:, :k]),
    )
