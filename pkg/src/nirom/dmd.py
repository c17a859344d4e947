"""DMD from precomputed SVD factors: reduced operator, modes, amplitudes,
Vandermonde evolution, reconstruction and Ritz spectrum."""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .linalg import (
    RankDeficiencyWarning,
    as_matrix,
    eig_general,
    frobenius,
    lstsq_min_norm,
    pinv_diag,
)
from .rsvd import SketchConfig, full_svd_reference, randomized_svd
from .snapshots import SnapshotMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DmdModel:
    """Rank-k DMD model ``v_t = sum_j a_j phi_j lam_j**t`` with t = 0, 1, ...

    ``modes`` columns have unit 2-norm; their scale lives in ``amplitudes``.
    """

    modes: np.ndarray
    ritz: np.ndarray
    amplitudes: np.ndarray
    dt: float
    n_snapshots: int

    @property
    def k(self):
        return self.ritz.shape[0]

    @property
    def m(self):
        return self.modes.shape[0]

    def coefficients(self, n_cols=None):
        """Modal coefficients ``b_j(t) = a_j lam_j**t``, shape (k, n_cols)."""
        n_cols = self.n_snapshots if n_cols is None else n_cols
        return self.amplitudes[:, None] * vandermonde(self.ritz, n_cols)


@dataclass(frozen=True)
class RitzPoint:
    ritz: complex
    growth_rate: float
    frequency: float
    amplitude: float


def split_snapshots(V):
    """Return ``(V0, V1)``: all columns but the last, all but the first."""
    data = V.data if isinstance(V, SnapshotMatrix) else np.asarray(V)
    if data.ndim != 2 or data.shape[1] < 3:
        raise DataError(f"need at least 3 snapshots, got shape {data.shape}")
    return data[:, :-1], data[:, 1:]


def reduced_operator(f, V1, rel_tol=1e-12):
    """``S = U^H V1 W Sigma^+`` (k x k)."""
    V1 = as_matrix(V1, "V1")
    if V1.shape[0] != f.U.shape[0] or V1.shape[1] != f.W.shape[0]:
        raise DataError(f"V1 shape {V1.shape} does not conform to SVD factors")
    s_inv = pinv_diag(f.sigma, rel_tol)
    dropped = int(np.count_nonzero(s_inv == 0))
    if dropped:
        log.info("reduced operator: %d of %d singular values truncated to zero",
                 dropped, f.sigma.size)
    return f.U.conj().T @ (V1 @ (f.W * s_inv))


def dmd_modes(f, S):
    """Ritz values and unit-norm modes ``Phi = U X`` of the reduced operator."""
    X, lam = eig_general(S)
    Phi = f.U @ X
    norms = np.linalg.norm(Phi, axis=0)
    norms[norms == 0] = 1.0
    return Phi / norms, lam


def amplitudes(Phi, v0):
    """Least-squares amplitudes ``a = Phi^+ v0``. Returns ``(a, residual)``."""
    Phi = as_matrix(Phi, "Phi")
    v0 = np.asarray(v0)
    if v0.shape != (Phi.shape[0],):
        raise DataError(f"v0 length {v0.shape} does not match Phi rows {Phi.shape[0]}")
    a, resid, rank = lstsq_min_norm(Phi, v0.astype(complex))
    if rank < Phi.shape[1]:
        warnings.warn(f"modes are rank deficient ({rank} < {Phi.shape[1]}); "
                      "using minimum-norm amplitudes", RankDeficiencyWarning, stacklevel=2)
    return a, resid


def vandermonde(lam, n_cols):
    """``Van[j, t] = lam_j**t`` for t = 0..n_cols-1."""
    if n_cols < 1:
        raise ConfigError("n_cols must be >= 1")
    lam = np.asarray(lam, dtype=complex)
    return np.power(lam[:, None], np.arange(n_cols)[None, :])


def _sig(x):
    # Compare at 12 significant digits so round-off between conjugates does not
    # decide the order.
    return float(f"{x:.12g}")


def mode_order(lam, a):
    """Permutation: descending |a|, then descending |lam|, then ascending arg(lam)."""
    keys = [(-_sig(abs(ai)), -_sig(abs(li)), _sig(np.angle(li)), i)
            for i, (li, ai) in enumerate(zip(lam, a))]
    return np.array([key[-1] for key in sorted(keys)], dtype=int)


def build_model(f, V, dt=1.0):
    """Assemble an ordered DmdModel from SVD factors of V0 and the snapshots."""
    data = V.data if isinstance(V, SnapshotMatrix) else np.asarray(V, dtype=float)
    _, V1 = split_snapshots(data)
    S = reduced_operator(f, V1)
    Phi, lam = dmd_modes(f, S)
    a, _ = amplitudes(Phi, data[:, 0])
    order = mode_order(lam, a)
    return DmdModel(
        np.ascontiguousarray(Phi[:, order]), lam[order], a[order], float(dt), data.shape[1]
    )


def ardmd(V, k, seed=0, power_iterations=0, dt=None):
    """Randomized DMD of rank ``k`` (one fixed rank; see rank.select_rank)."""
    if isinstance(V, SnapshotMatrix):
        dt = V.dt if dt is None else dt
    V0, _ = split_snapshots(V)
    f = randomized_svd(V0, SketchConfig(k, seed, power_iterations))
    return build_model(f, V, 1.0 if dt is None else dt)


def exact_dmd(V, k, dt=None):
    """DMD of rank ``k`` from the deterministic full SVD."""
    if isinstance(V, SnapshotMatrix):
        dt = V.dt if dt is None else dt
    V0, _ = split_snapshots(V)
    f = full_svd_reference(V0, k)
    return build_model(f, V, 1.0 if dt is None else dt)


def reconstruct_complex(model, n_cols=None):
    n_cols = model.n_snapshots if n_cols is None else n_cols
    return (model.modes * model.amplitudes) @ vandermonde(model.ritz, n_cols)


def reconstruct(model, n_cols=None):
    """Real part of ``Phi diag(a) Van``."""
    return np.ascontiguousarray(reconstruct_complex(model, n_cols).real)


def imaginary_residue(model, n_cols=None):
    """``||Im V_dmd||_F / ||V_dmd||_F``; round-off for conjugate-closed spectra."""
    Z = reconstruct_complex(model, n_cols)
    total = frobenius(Z)
    return frobenius(Z.imag) / total if total > 0 else 0.0


def spectrum(model):
    """Ritz points ordered by descending amplitude magnitude."""
    if model.dt <= 0:
        raise ConfigError("dt must be positive")
    out = []
    for lam, a in zip(model.ritz, model.amplitudes):
        mag = abs(lam)
        if mag == 0.0:
            warnings.warn("zero Ritz value; growth rate set to -inf", RuntimeWarning,
                          stacklevel=2)
            sigma = -math.inf
        else:
            sigma = math.log(mag) / model.dt
        out.append(RitzPoint(complex(lam), sigma, float(np.angle(lam)) / model.dt,
                             float(abs(a))))
    order = sorted(range(len(out)), key=lambda i: (-out[i].amplitude, i))
    return [out[i] for i in order]
