"""Thin-plate RBF interpolation of DMD modal coefficients.

The interpolant is ``s(x) = c0 + c . x + sum_i beta_i K(||x - x_i||)`` with
``K(r) = r**2 * log(1 + r)`` and the side conditions ``sum beta_i = 0``,
``sum beta_i x_i = 0``. Coordinates are mapped affinely to [0, 1] per axis
before the kernel is applied; the mapping is part of the surface.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist

from .dmd import DmdModel
from .errors import ConfigError, DataError, NumericalError

KERNELS = {}


class ExtrapolationWarning(UserWarning):
    pass


def thinplate_kernel(r):
    """``r**2 * ln(r + 1)`` for r >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DataError("kernel radius must be nonnegative")
    out = r * r * np.log1p(r)
    return out if out.ndim else float(out)


KERNELS["thinplate"] = thinplate_kernel


@dataclass(frozen=True)
class RbfSurface:
    centers: np.ndarray  # (n, d), original coordinates
    weights: np.ndarray  # (n,)
    poly: np.ndarray  # (d + 1,) affine coefficients in scaled coordinates
    lo: np.ndarray  # (d,) axis offsets of the [0, 1] mapping
    span: np.ndarray  # (d,) axis widths
    kernel: str = "thinplate"

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def affine(self):
        """``(c0, c)`` of the polynomial part in original coordinates."""
        c = self.poly[1:] / self.span
        return float(self.poly[0] - c @ self.lo), c

    def scaled(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / self.span

    def __call__(self, x):
        return eval_rbf(self, x)


def _as_points(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise DataError(f"points must be an (n, d) array, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise DataError("points must be finite")
    return pts


def _kernel_matrix(a, b, kernel):
    return KERNELS[kernel](cdist(a, b))


def _check_nodes(pts):
    n, d = pts.shape
    if n < d + 1:
        raise DataError(f"need at least {d + 1} nodes for the affine term, got {n}")
    uniq = np.unique(pts, axis=0)
    if uniq.shape[0] != n:
        raise DataError(f"{n - uniq.shape[0]} duplicate node(s); nodes must be distinct")


def _scaling(pts):
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span[span == 0] = 1.0
    return lo, span


def fit_rbf_many(points, values, kernel="thinplate"):
    """Fit one surface per column of ``values`` on shared nodes (one factorization)."""
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    pts = _as_points(points)
    F = np.asarray(values, dtype=float)
    single = F.ndim == 1
    F = F[:, None] if single else F
    n, d = pts.shape
    if F.shape[0] != n:
        raise DataError(f"{F.shape[0]} values for {n} nodes")
    if not np.isfinite(F).all():
        raise DataError("values must be finite")
    _check_nodes(pts)

    lo, span = _scaling(pts)
    xs = (pts - lo) / span
    P = np.hstack([np.ones((n, 1)), xs])
    if np.linalg.matrix_rank(P) < d + 1:
        raise NumericalError(
            "affine block is rank deficient: nodes are collinear (or coplanar), "
            "so the polynomial part is not determined")

    A = np.zeros((n + d + 1, n + d + 1))
    A[:n, :n] = _kernel_matrix(xs, xs, kernel)
    A[:n, n:] = P
    A[n:, :n] = P.T
    rhs = np.vstack([F, np.zeros((d + 1, F.shape[1]))])
    lu = scipy.linalg.lu_factor(A, check_finite=False)
    sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
    # One step of iterative refinement; the saddle system is often ill-conditioned.
    sol += scipy.linalg.lu_solve(lu, rhs - A @ sol, check_finite=False)

    surfaces = [RbfSurface(pts.copy(), sol[:n, j].copy(), sol[n:, j].copy(),
                           lo.copy(), span.copy(), kernel) for j in range(F.shape[1])]
    return surfaces[0] if single else surfaces


def fit_rbf(points, values, kernel="thinplate"):
    """Interpolating surface through ``(points[i], values[i])``."""
    return fit_rbf_many(points, np.asarray(values, dtype=float).ravel(), kernel)


def _outside_hull(surface, xs):
    c = (surface.centers - surface.lo) / surface.span
    if surface.dim == 1:
        return (xs[:, 0] < c.min() - 1e-12) | (xs[:, 0] > c.max() + 1e-12)
    hull = ConvexHull(c)
    return np.any(xs @ hull.equations[:, :-1].T + hull.equations[:, -1] > 1e-12, axis=1)


def eval_rbf(surface, x):
    """Evaluate at one point (shape (d,)) or many (shape (p, d)).

    Emits ``ExtrapolationWarning`` for points outside the centers' convex hull.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and x.shape[0] == surface.dim or x.ndim == 0
    xs = surface.scaled(x.reshape(-1, surface.dim))
    if not np.isfinite(xs).all():
        raise DataError("evaluation points must be finite")
    if np.any(_outside_hull(surface, xs)):
        warnings.warn("evaluating RBF surface outside the convex hull of its centers",
                      ExtrapolationWarning, stacklevel=2)
    c = (surface.centers - surface.lo) / surface.span
    out = (_kernel_matrix(xs, c, surface.kernel) @ surface.weights
           + surface.poly[0] + xs @ surface.poly[1:])
    return float(out[0]) if single else out


def side_condition_residual(surface):
    """``max |P^T beta| / ||beta||_1`` (0 when beta vanishes)."""
    b = surface.weights
    norm = np.abs(b).sum()
    if norm == 0:
        return 0.0
    P = np.hstack([np.ones((b.size, 1)), surface.centers])
    return float(np.abs(P.T @ b).max() / norm)


@dataclass(frozen=True)
class NiromSurfaces:
    """Coefficient surfaces for a DMD model.

    ``layout="2d"``: ``surfaces`` is ``[real, imag]`` over (mode index, time).
    ``layout="1d"``: ``surfaces`` is ``[real_1, imag_1, real_2, imag_2, ...]``
    over time only, one pair per mode.
    """

    layout: str
    surfaces: list
    t_first: float
    t_last: float


def coefficient_nodes(model, n_cols=None):
    """Nodes ``(j, t_i)`` with j = 1..k, t_i = i*dt, and values ``b_j(t_i)``."""
    n_cols = model.n_snapshots if n_cols is None else n_cols
    b = model.coefficients(n_cols)
    t = np.arange(n_cols) * model.dt
    J, T = np.meshgrid(np.arange(1, model.k + 1, dtype=float), t, indexing="ij")
    return np.column_stack([J.ravel(), T.ravel()]), b.ravel(), t


def fit_nirom(model, n_cols=None, layout="2d"):
    """Fit real/imaginary coefficient surfaces for ``nirom_predict``."""
    pts, b, t = coefficient_nodes(model, n_cols)
    if layout == "2d":
        if model.k < 2:
            raise ConfigError("2-D layout needs k >= 2; use layout='1d'")
        surfaces = fit_rbf_many(pts, np.column_stack([b.real, b.imag]))
    elif layout == "1d":
        B = b.reshape(model.k, t.size)
        surfaces = []
        for j in range(model.k):
            surfaces.extend(fit_rbf_many(t, np.column_stack([B[j].real, B[j].imag])))
    else:
        raise ConfigError(f"unknown layout {layout!r}")
    return NiromSurfaces(layout, surfaces, float(t[0]), float(t[-1]))


def interpolated_coefficients(model, nirom, times):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    tol = 1e-12 * max(abs(nirom.t_last), 1.0)
    bad = times[(times < nirom.t_first - tol) | (times > nirom.t_last + tol)]
    if bad.size:
        raise DataError(f"time {bad[0]:.17g} outside the model window "
                        f"[{nirom.t_first:.17g}, {nirom.t_last:.17g}]")
    times = np.clip(times, nirom.t_first, nirom.t_last)
    k = model.k
    if nirom.layout == "2d":
        J, T = np.meshgrid(np.arange(1, k + 1, dtype=float), times, indexing="ij")
        xs = np.column_stack([J.ravel(), T.ravel()])
        re, im = (eval_rbf(s, xs).reshape(k, times.size) for s in nirom.surfaces)
        return re + 1j * im
    b = np.empty((k, times.size), dtype=complex)
    for j in range(k):
        s_re, s_im = nirom.surfaces[2 * j], nirom.surfaces[2 * j + 1]
        b[j] = eval_rbf(s_re, times[:, None]) + 1j * eval_rbf(s_im, times[:, None])
    return b


def nirom_predict(model: DmdModel, nirom: NiromSurfaces, t):
    """Predicted real field(s) at time(s) ``t`` inside the training window.

    A scalar ``t`` gives an m-vector; a sequence gives an (m, len(t)) matrix.
    """
    scalar = np.ndim(t) == 0
    b = interpolated_coefficients(model, nirom, t)
    fields = (model.modes @ b).real
    return fields[:, 0] if scalar else np.ascontiguousarray(fields)
