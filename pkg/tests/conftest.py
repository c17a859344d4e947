import numpy as np
import pytest

from nirom import rank, swe


def planted_dynamics(m, n_cols, block, seed=0):
    """Snapshots v_t = B @ block**t @ z with random real B (m x r) and z."""
    rng = np.random.default_rng(seed)
    r = block.shape[0]
    B = rng.standard_normal((m, r))
    z = rng.standard_normal(r)
    Z = np.empty((r, n_cols))
    Z[:, 0] = z
    for t in range(1, n_cols):
        Z[:, t] = block @ Z[:, t - 1]
    return B @ Z, B, Z


def rotation(theta, radius=1.0):
    c, s = np.cos(theta), np.sin(theta)
    return radius * np.array([[c, -s], [s, c]])


@pytest.fixture(scope="session")
def desk_cfg():
    return swe.SweConfig()


@pytest.fixture(scope="session")
def desk_run(desk_cfg):
    """Dimensional desk-scale run (32 x 24 grid, 120 snapshots)."""
    return swe.simulate(desk_cfg)


@pytest.fixture(scope="session")
def desk_scaled(desk_cfg, desk_run):
    return swe.nondimensionalize(desk_run, swe.reference_scales(desk_cfg))


@pytest.fixture(scope="session")
def desk_selection(desk_scaled):
    return {name: rank.select_rank(snap, rank.RankCriteria(1e-3, 0.999), seed=7)
            for name, snap in desk_scaled.fields().items()}
