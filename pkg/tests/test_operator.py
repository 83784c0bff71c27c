import time

import numpy as np
import pytest

from rtkrylov import presets
from rtkrylov.errors import ResourceLimitError
from rtkrylov.operator import apply_A, build_rhs, materialize_A, spectral_radius_estimate
from rtkrylov.transfer import apply_transfer


class TestApplyA:
    def test_identity_when_gamma_zero(self):
        p = presets.monochromatic(7, 4, gamma_scale=0.0)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(p.n_total)
        out = apply_A(p, v)
        assert np.array_equal(out, v)

    @pytest.mark.parametrize("factory", [
        lambda: presets.monochromatic(12, 8),
        lambda: presets.coherent(6, 4, 7),
        lambda: presets.crd(6, 4, 7),
    ])
    def test_matches_dense_oracle(self, factory):
        p = factory()
        dense = materialize_A(p)
        rng = np.random.default_rng(1)
        for _ in range(10):
            v = rng.standard_normal(p.n_total)
            np.testing.assert_allclose(apply_A(p, v), dense @ v, rtol=1e-12, atol=1e-13)

    def test_boundary_rows_are_unit_rows(self):
        p = presets.monochromatic(10, 12)
        dense = materialize_A(p)
        g = p.grid
        for k, ray in enumerate(g.rays):
            row = k if ray.mu < 0 else (g.n_space - 1) * g.n_rays + k
            expected = np.zeros(p.n_total)
            expected[row] = 1.0
            np.testing.assert_array_equal(dense[row], expected)

    def test_linearity(self):
        p = presets.coherent(5, 4, 5)
        rng = np.random.default_rng(2)
        u, v = rng.standard_normal((2, p.n_total))
        lhs = apply_A(p, 2.5 * u - 1.5 * v)
        rhs = 2.5 * apply_A(p, u) - 1.5 * apply_A(p, v)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-14)

    def test_length_mismatch(self):
        p = presets.monochromatic(5, 4)
        with pytest.raises(ValueError):
            apply_A(p, np.zeros(11))

    def test_identity_perturbation_norm_bounded_in_space(self):
        fro = []
        for ns in (50, 100, 200):
            p = presets.monochromatic(ns, 12)
            a = materialize_A(p)
            a[np.diag_indices(p.n_total)] -= 1.0
            fro.append(np.linalg.norm(a))
        assert max(fro) / min(fro) < 1.10

    def test_apply_cost_scales_linearly(self):
        # moment-form scattering keeps the apply at O(N * L); allow a 3x
        # slack on the ideal 4x ratio for a 4x size increase
        def best_time(p, v):
            best = np.inf
            for _ in range(5):
                t0 = time.perf_counter()
                apply_A(p, v)
                best = min(best, time.perf_counter() - t0)
            return best

        p_small = presets.monochromatic(250, 12)
        p_big = presets.monochromatic(1000, 12)
        rng = np.random.default_rng(3)
        v_small = rng.standard_normal(p_small.n_total)
        v_big = rng.standard_normal(p_big.n_total)
        apply_A(p_small, v_small)  # warm up (jit, caches)
        apply_A(p_big, v_big)
        ratio = best_time(p_big, v_big) / best_time(p_small, v_small)
        assert ratio < 12.0


class TestBuildRhs:
    def test_zero_sources(self):
        p = presets.monochromatic(6, 4)
        p.transfer.inflow[:] = 0.0
        assert np.all(build_rhs(p) == 0.0)

    def test_override_ones(self):
        p = presets.monochromatic(6, 4)
        np.testing.assert_array_equal(build_rhs(p, override_ones=True), np.ones(p.n_total))

    def test_constant_thermal_source_linearity(self):
        p = presets.monochromatic(6, 4)
        p.transfer.inflow[:] = 0.0
        p.thermal = np.full(p.n_total, 3.0)
        expected = 3.0 * apply_transfer(p.transfer, np.ones(p.n_total))
        np.testing.assert_allclose(build_rhs(p), expected, rtol=1e-14)

    def test_physical_rhs_combines_boundary_and_thermal(self):
        p = presets.monochromatic(6, 4)
        b = build_rhs(p)
        g = p.grid
        mat = b.reshape(g.n_space, g.n_rays)
        up = np.array([r.mu > 0 for r in g.rays])
        assert np.all(mat[-1, up] == 1.0)  # deep inflow reaches the deep node intact


class TestMaterializeA:
    def test_gamma_zero_gives_identity(self):
        p = presets.monochromatic(5, 4, gamma_scale=0.0)
        np.testing.assert_array_equal(materialize_A(p), np.eye(p.n_total))

    def test_cap(self):
        p = presets.monochromatic(100, 12)
        with pytest.raises(ResourceLimitError):
            materialize_A(p, dense_cap=500)


class TestSpectralRadiusEstimate:
    def test_zero_for_identity(self):
        p = presets.monochromatic(6, 4, gamma_scale=0.0)
        assert spectral_radius_estimate(p, iters=5) == 0.0

    def test_against_dense_spectrum_oracle(self):
        p = presets.monochromatic(40, 12)
        lam = np.linalg.eigvals(materialize_A(p))
        rho_oracle = np.max(np.abs(1.0 - lam))
        est = spectral_radius_estimate(p, iters=300)
        assert est == pytest.approx(rho_oracle, rel=0.05)
        assert est < 1.0

    def test_homogeneity_in_gamma(self):
        base = presets.monochromatic(12, 6, gamma_scale=1.0)
        scaled = presets.monochromatic(12, 6, gamma_scale=0.35)
        e1 = spectral_radius_estimate(base, iters=80)
        e2 = spectral_radius_estimate(scaled, iters=80)
        assert e2 == pytest.approx(0.35 * e1, rel=1e-10)

    def test_rejects_bad_iters(self):
        p = presets.monochromatic(5, 4)
        with pytest.raises(ValueError):
            spectral_radius_estimate(p, iters=0)
