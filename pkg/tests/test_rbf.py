import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nirom import dmd, rbf
from nirom.errors import ConfigError, DataError, NumericalError


class TestKernel:
    def test_values(self):
        assert rbf.thinplate_kernel(0.0) == 0.0
        assert rbf.thinplate_kernel(1.0) == pytest.approx(math.log(2.0), rel=1e-15)
        assert rbf.thinplate_kernel(math.e - 1) == pytest.approx((math.e - 1) ** 2, rel=1e-15)

    def test_small_r_accurate(self):
        r = 1e-10
        assert rbf.thinplate_kernel(r) == pytest.approx(r ** 3, rel=1e-9)

    def test_negative(self):
        with pytest.raises(DataError):
            rbf.thinplate_kernel(-0.1)


SIX = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.3, 0.7], [0.8, 0.2]], dtype=float)


class TestFit:
    def test_affine_reproduction(self):
        vals = 3 + 2 * SIX[:, 0] - SIX[:, 1]
        s = rbf.fit_rbf(SIX, vals)
        np.testing.assert_allclose(s.weights, 0, atol=1e-12)
        c0, c = s.affine
        assert c0 == pytest.approx(3, abs=1e-12)
        np.testing.assert_allclose(c, [2, -1], atol=1e-12)
        assert s([0.5, 0.5]) == pytest.approx(3.5, abs=1e-12)

    def test_exact_at_nodes_and_side_conditions(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(0, 1, (30, 2))
        vals = np.sin(3 * pts[:, 0]) * np.cos(2 * pts[:, 1])
        s = rbf.fit_rbf(pts, vals)
        np.testing.assert_allclose(s(pts), vals, atol=1e-10)
        assert rbf.side_condition_residual(s) <= 1e-10

    def test_bump_midpoint_by_direct_formula(self):
        # centers at 0, 1, 2 with values 0, 1, 0 in 1-D
        s = rbf.fit_rbf([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        # independent oracle: solve the 5x5 saddle system in scaled coords by hand
        x = np.array([0.0, 0.5, 1.0])
        K = np.array([[rbf.thinplate_kernel(abs(a - b)) for b in x] for a in x])
        P = np.column_stack([np.ones(3), x])
        A = np.block([[K, P], [P.T, np.zeros((2, 2))]])
        sol = np.linalg.solve(A, [0, 1, 0, 0, 0])
        xm = 0.25
        direct = sum(sol[i] * rbf.thinplate_kernel(abs(xm - x[i])) for i in range(3)) \
            + sol[3] + sol[4] * xm
        assert s(np.array([0.5])) == pytest.approx(direct, abs=1e-12)
        assert 0.0 <= direct <= 1.0

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(0, 1, (20, 2))
        vals = rng.standard_normal(20)
        perm = rng.permutation(20)
        a, b = rbf.fit_rbf(pts, vals), rbf.fit_rbf(pts[perm], vals[perm])
        probes = rng.uniform(0.2, 0.8, (100, 2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", rbf.ExtrapolationWarning)
            np.testing.assert_allclose(a(probes), b(probes), atol=1e-10)

    def test_many_matches_single(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(0, 1, (15, 2))
        F = rng.standard_normal((15, 3))
        many = rbf.fit_rbf_many(pts, F)
        for j in range(3):
            np.testing.assert_allclose(many[j].weights, rbf.fit_rbf(pts, F[:, j]).weights,
                                       atol=1e-12)

    def test_collinear(self):
        pts = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
        with pytest.raises(NumericalError, match="collinear"):
            rbf.fit_rbf(pts, np.arange(5.0))

    def test_duplicate(self):
        with pytest.raises(DataError, match="duplicate"):
            rbf.fit_rbf(np.vstack([SIX, SIX[:1]]), np.arange(7.0))

    def test_too_few_nodes(self):
        with pytest.raises(DataError):
            rbf.fit_rbf(SIX[:2], [1.0, 2.0])

    def test_unknown_kernel(self):
        with pytest.raises(ConfigError):
            rbf.fit_rbf(SIX, np.arange(6.0), kernel="gaussian")

    def test_extrapolation_warning(self):
        s = rbf.fit_rbf(SIX, np.arange(6.0))
        with pytest.warns(rbf.ExtrapolationWarning):
            s([2.0, 2.0])
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            s([0.5, 0.5])

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5),
           st.floats(0.1, 100), st.floats(-50, 50))
    def test_affine_invariant_under_axis_map(self, c0, cx, cy, scale, shift):
        pts = SIX * scale + shift
        s = rbf.fit_rbf(pts, c0 + cx * pts[:, 0] + cy * pts[:, 1])
        got0, got = s.affine
        tol = 1e-8 * (1 + abs(c0) + (abs(cx) + abs(cy)) * (abs(shift) + scale))
        assert got0 == pytest.approx(c0, abs=tol)
        np.testing.assert_allclose(got, [cx, cy], atol=tol)


def small_model(k=4, n=40, dt=2.0):
    rng = np.random.default_rng(3)
    lam = np.array([0.99, 0.9, 0.97 * np.exp(0.15j), 0.97 * np.exp(-0.15j)])[:k]
    Phi = rng.standard_normal((30, k)) + 0j
    if k > 3:
        Phi[:, 3] = np.conj(Phi[:, 2])
    Phi /= np.linalg.norm(Phi, axis=0)
    a = np.array([2.0, 0.5, 1 + 1j, 1 - 1j])[:k]
    return dmd.DmdModel(Phi, lam, a, dt, n)


class TestNirom:
    @pytest.mark.parametrize("layout", ["2d", "1d"])
    def test_nodes_reproduce_reconstruction(self, layout):
        model = small_model()
        nirom = rbf.fit_nirom(model, layout=layout)
        R = dmd.reconstruct(model)
        for i in (0, 1, 20, 39):
            np.testing.assert_allclose(rbf.nirom_predict(model, nirom, i * model.dt), R[:, i],
                                       atol=1e-8 * np.abs(R).max())

    def test_sequence_times(self):
        model = small_model()
        nirom = rbf.fit_nirom(model)
        out = rbf.nirom_predict(model, nirom, [0.0, 2.0])
        assert out.shape == (30, 2)

    def test_midpoint_is_close(self):
        model = small_model()
        nirom = rbf.fit_nirom(model, layout="1d")
        t = 10.5 * model.dt
        exact = (model.modes @ (model.amplitudes * model.ritz ** 10.5)).real
        got = rbf.nirom_predict(model, nirom, t)
        assert np.linalg.norm(got - exact) <= 1e-2 * np.linalg.norm(exact)

    def test_outside_window(self):
        model = small_model()
        nirom = rbf.fit_nirom(model)
        with pytest.raises(DataError, match="outside"):
            rbf.nirom_predict(model, nirom, 40 * model.dt)
        with pytest.raises(DataError):
            rbf.nirom_predict(model, nirom, -1.0)

    def test_layout_errors(self):
        with pytest.raises(ConfigError):
            rbf.fit_nirom(small_model(), layout="3d")
        with pytest.raises(ConfigError):
            rbf.fit_nirom(small_model(k=1))

    def test_nodes_layout(self):
        model = small_model(k=2, n=3)
        pts, b, t = rbf.coefficient_nodes(model)
        np.testing.assert_array_equal(pts, [[1, 0], [1, 2], [1, 4], [2, 0], [2, 2], [2, 4]])
        assert b[4] == pytest.approx(model.amplitudes[1] * model.ritz[1])


@pytest.mark.slow
def test_desk_fields_side_conditions(desk_selection):
    for sel in desk_selection.values():
        nirom = rbf.fit_nirom(sel.model)
        pts, b, _ = rbf.coefficient_nodes(sel.model)
        scale = np.abs(b).max()
        for surf, vals in zip(nirom.surfaces, (b.real, b.imag)):
            assert np.abs(surf(pts) - vals).max() <= 1e-8 * scale
            assert rbf.side_condition_residual(surf) <= 1e-8
        R = dmd.reconstruct(sel.model)
        got = rbf.nirom_predict(sel.model, nirom, 100 * sel.model.dt)
        assert np.linalg.norm(got - R[:, 100]) <= 1e-6 * np.linalg.norm(R[:, 100])


@pytest.mark.slow
def test_desk_midpoint_against_halved_step(desk_cfg, desk_selection):
    """Between t5 and t6 the surrogate error stays within 5x the at-node error."""
    import dataclasses

    from nirom import swe
    fine_cfg = dataclasses.replace(desk_cfg, dt=desk_cfg.dt / 2, n_snapshots=14)
    fine = swe.nondimensionalize(swe.simulate(fine_cfg), swe.reference_scales(desk_cfg))
    for name, sel in desk_selection.items():
        model = sel.model
        nirom = rbf.fit_nirom(model)
        ref = getattr(fine, name).data
        at_node = np.linalg.norm(rbf.nirom_predict(model, nirom, 5 * model.dt) - ref[:, 10])
        mid = np.linalg.norm(rbf.nirom_predict(model, nirom, 5.5 * model.dt) - ref[:, 11])
        assert mid <= 5 * at_node, (name, mid, at_node)
