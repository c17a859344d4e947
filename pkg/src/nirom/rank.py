"""Error and correlation metrics and the adaptive rank sweep."""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dmd import DmdModel, ardmd, exact_dmd, reconstruct, split_snapshots
from .errors import ConfigError, DataError
from .linalg import frobenius
from .snapshots import SnapshotMatrix


@dataclass(frozen=True)
class RankCriteria:
    max_rel_error: float = 1e-3
    min_correlation: float = 0.999
    k_min: int = 2
    k_max: int | None = None  # None -> min(n - 1, 64)
    sweep_step: int = 1

    def resolved_k_max(self, n):
        return min(n - 1, 64) if self.k_max is None else self.k_max

    def validate(self, n):
        k_max = self.resolved_k_max(n)
        if not 2 <= self.k_min <= k_max < n:
            raise ConfigError(
                f"rank bounds must satisfy 2 <= k_min={self.k_min} <= k_max={k_max} < n={n}")
        if not self.max_rel_error > 0:
            raise ConfigError("max_rel_error must be positive")
        if not 0 < self.min_correlation <= 1:
            raise ConfigError("min_correlation must lie in (0, 1]")
        if self.sweep_step < 1:
            raise ConfigError("sweep_step must be >= 1")
        return k_max


@dataclass(frozen=True)
class RankSweepRecord:
    k: int
    rel_error: float
    correlation: float
    wall_time: float

    def feasible(self, criteria):
        return (self.rel_error <= criteria.max_rel_error
                and self.correlation >= criteria.min_correlation)


@dataclass(frozen=True)
class RankSelection:
    model: DmdModel
    trace: list = field(repr=False)
    converged: bool

    @property
    def k(self):
        return self.model.k

    @property
    def record(self):
        return next(r for r in self.trace if r.k == self.k)


def _pair(V, V_dmd):
    V = np.asarray(V)
    V_dmd = np.asarray(V_dmd)
    if V.shape != V_dmd.shape:
        raise DataError(f"shape mismatch {V.shape} vs {V_dmd.shape}")
    return V, V_dmd


def relative_error(V, V_dmd):
    """``||V - V_dmd||_F / ||V||_F`` over the whole snapshot matrix."""
    V, V_dmd = _pair(V, V_dmd)
    denom = frobenius(V)
    if denom == 0:
        raise DataError("relative error undefined for a zero reference")
    return frobenius(V - V_dmd) / denom


def correlation(V, V_dmd):
    """Squared cosine between the flattened matrices, in [0, 1]."""
    V, V_dmd = _pair(V, V_dmd)
    nv, nd = frobenius(V), frobenius(V_dmd)
    if nv == 0 or nd == 0:
        raise DataError("correlation undefined for a zero matrix")
    inner = abs(np.vdot(V.ravel() / nv, V_dmd.ravel() / nd))
    return float(min(inner, 1.0) ** 2)


def rank_seed(seed, k):
    """Per-rank sketch seed derived from the base seed."""
    return int(np.random.SeedSequence([int(seed), int(k)]).generate_state(1, np.uint64)[0])


def _evaluate(data, dt, k, seed, method, power_iterations):
    t0 = time.perf_counter()
    if method == "randomized":
        model = ardmd(data, k, rank_seed(seed, k), power_iterations, dt=dt)
    else:
        model = exact_dmd(data, k, dt=dt)
    R = reconstruct(model)
    rec = RankSweepRecord(k, relative_error(data, R), correlation(data, R),
                          time.perf_counter() - t0)
    return model, rec


def select_rank(V, criteria=None, seed=0, method="randomized", power_iterations=0,
                workers=1):
    """Sweep k over ``[k_min, k_max]`` and return the smallest feasible rank.

    Feasible means relative error <= ``max_rel_error`` and correlation >=
    ``min_correlation``. Without a feasible k, the k with minimal relative
    error is returned with ``converged=False``.
    """
    criteria = criteria or RankCriteria()
    if method not in ("randomized", "full"):
        raise ConfigError(f"unknown method {method!r}")
    if isinstance(V, SnapshotMatrix):
        data, dt = V.data, V.dt
    else:
        data, dt = np.asarray(V, dtype=float), 1.0
    V0, _ = split_snapshots(data)
    n = V0.shape[1]
    k_max = criteria.validate(n)
    ks = range(criteria.k_min, k_max + 1, criteria.sweep_step)

    def run(k):
        return _evaluate(data, dt, k, seed, method, power_iterations)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, ks))
    else:
        results = [run(k) for k in ks]

    trace = [rec for _, rec in results]
    for model, rec in results:
        if rec.feasible(criteria):
            return RankSelection(model, trace, True)
    best = min(range(len(results)), key=lambda i: (trace[i].rel_error, trace[i].k))
    return RankSelection(results[best][0], trace, False)
