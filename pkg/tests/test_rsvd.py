import numpy as np
import pytest

from nirom.errors import ConfigError, DataError
from nirom.linalg import economy_svd, frobenius
from nirom.rsvd import SketchConfig, full_svd_reference, randomized_svd


def planted(m, n, sigma, seed=0):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((m, len(sigma))))
    W, _ = np.linalg.qr(rng.standard_normal((n, len(sigma))))
    return (U * sigma) @ W.T


def test_rank_one():
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal(10), rng.standard_normal(6)
    A = 7.0 * np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))
    f = randomized_svd(A, SketchConfig(k=2, seed=3))
    assert f.U.shape == (10, 2) and f.W.shape == (6, 2)
    np.testing.assert_allclose(f.sigma, [7, 0], atol=1e-12)
    assert frobenius(A - f.reconstruct()) <= 1e-10 * frobenius(A)
    np.testing.assert_allclose(f.U.T @ f.U, np.eye(2), atol=1e-12)


def test_planted_spectrum():
    A = planted(6, 4, [5.0, 3.0, 1.0])
    f = randomized_svd(A, SketchConfig(k=3, seed=11))
    np.testing.assert_allclose(f.sigma, [5, 3, 1], atol=1e-8)
    np.testing.assert_allclose(full_svd_reference(A, 3).sigma, f.sigma, atol=1e-8)


def test_seed_determinism():
    A = planted(40, 12, np.linspace(3, 1, 8), seed=2)
    a = randomized_svd(A, SketchConfig(k=5, seed=99))
    b = randomized_svd(A, SketchConfig(k=5, seed=99))
    for x, y in ((a.U, b.U), (a.sigma, b.sigma), (a.W, b.W)):
        assert np.array_equal(x, y)
    c = randomized_svd(A, SketchConfig(k=5, seed=100))
    assert not np.array_equal(a.U, c.U)


@pytest.mark.parametrize("seed", range(5))
def test_spectral_dominance(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((60, 25)) @ np.diag(0.8 ** np.arange(25))
    f = randomized_svd(A, SketchConfig(k=6, seed=seed))
    ref = economy_svd(A).sigma
    assert np.all(f.sigma <= ref[:6] + 1e-8 * ref[0])


def test_power_iterations_improve_slow_decay():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((200, 80)) @ np.diag(1.0 / np.arange(1, 81))
    ref = economy_svd(A).sigma[:5]
    plain = randomized_svd(A, SketchConfig(k=5, seed=1)).sigma
    refined = randomized_svd(A, SketchConfig(k=5, seed=1, power_iterations=2)).sigma
    assert np.abs(refined - ref).max() < np.abs(plain - ref).max()


def test_full_reference():
    np.testing.assert_allclose(full_svd_reference(np.diag([3.0, 1.0]), 1).sigma, [3])
    A = np.random.default_rng(1).standard_normal((7, 4))
    a, b = full_svd_reference(A, 4), economy_svd(A)
    assert np.array_equal(a.sigma, b.sigma) and np.array_equal(a.U, b.U)


@pytest.mark.parametrize("k", [1, 4, 5])
def test_bad_rank_rejected(k):
    with pytest.raises(ConfigError):
        randomized_svd(np.ones((6, 4)), SketchConfig(k=k))


def test_wide_rejected():
    with pytest.raises(DataError, match="transpose"):
        randomized_svd(np.ones((3, 5)), SketchConfig(k=2))


def test_sketch_width():
    assert SketchConfig(k=3).sketch_width(10) == 6
    assert SketchConfig(k=7).sketch_width(10) == 10
