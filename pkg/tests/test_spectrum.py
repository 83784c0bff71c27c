import numpy as np
import pytest

from rtkrylov import presets
from rtkrylov.errors import ResourceLimitError
from rtkrylov.operator import materialize_A
from rtkrylov.scattering import materialize_scattering
from rtkrylov.spectrum import clustering_trend, compute_spectrum


class TestComputeSpectrum:
    def test_identity_limit(self):
        p = presets.monochromatic(6, 4, gamma_scale=0.0)
        rep = compute_spectrum(p)
        np.testing.assert_array_equal(rep.eigenvalues, np.ones(p.n_total))
        assert rep.cluster_fraction == 1.0
        assert rep.cluster_fraction_one_sided == 1.0
        assert rep.min_modulus == 1.0
        assert all(c == 0 for c in rep.outlier_counts.values())

    def test_monochromatic_reference_cell(self):
        rep = compute_spectrum(presets.monochromatic(10, 12))
        assert rep.cluster_fraction * 100 == pytest.approx(68.3, abs=3.0)
        assert rep.min_modulus > 0.82
        assert rep.n == 120

    def test_spectrum_invariant_under_permutation(self):
        p = presets.monochromatic(8, 6)
        dense = materialize_A(p)
        rng = np.random.default_rng(4)
        perm = rng.permutation(p.n_total)
        permuted = dense[np.ix_(perm, perm)]
        lam = np.sort_complex(np.linalg.eigvals(dense))
        lam_p = np.sort_complex(np.linalg.eigvals(permuted))
        np.testing.assert_allclose(lam, lam_p, atol=1e-10)

    def test_conjugate_pair_symmetry(self):
        rep = compute_spectrum(presets.monochromatic(10, 12))
        lam = rep.eigenvalues
        assert np.any(np.abs(lam.imag) > 1e-14)  # genuinely complex pairs occur
        np.testing.assert_allclose(
            np.sort_complex(lam), np.sort_complex(np.conj(lam)), atol=1e-10
        )

    def test_scattering_singular_value_rank_structure(self):
        p = presets.monochromatic(9, 12)
        sv = np.linalg.svd(materialize_scattering(p.scattering), compute_uv=False)
        cutoff = 8 * p.grid.n_space
        assert sv[cutoff] <= 1e-10 * sv[0]

    def test_singular_values_on_request(self):
        p = presets.monochromatic(5, 4)
        rep = compute_spectrum(p, compute_singular=True)
        assert rep.singular_values is not None
        assert rep.singular_values.size == p.n_total

    def test_dense_cap(self):
        p = presets.monochromatic(50, 12)
        with pytest.raises(ResourceLimitError):
            compute_spectrum(p, dense_cap=100)


class TestClusteringTrend:
    def test_identity_sequence_trivially_consistent(self):
        reports = [compute_spectrum(presets.monochromatic(ns, 4, gamma_scale=0.0))
                   for ns in (5, 10, 20)]
        trend = clustering_trend(reports)
        assert trend.strong_cluster_consistent
        assert all(all(c == 0 for c in series) for series in trend.outlier_counts.values())

    def test_fraction_increases_with_angular_refinement(self):
        reports = [compute_spectrum(presets.monochromatic(10, nom)) for nom in (12, 24)]
        trend = clustering_trend(reports)
        assert trend.cluster_fractions[1] > trend.cluster_fractions[0]
        assert trend.strong_cluster_consistent

    def test_requires_two_reports(self):
        rep = compute_spectrum(presets.monochromatic(5, 4))
        with pytest.raises(ValueError):
            clustering_trend([rep])

    def test_inconsistent_when_counts_blow_up(self):
        rep = compute_spectrum(presets.monochromatic(5, 4, gamma_scale=0.0))
        inflated = compute_spectrum(presets.monochromatic(10, 4, gamma_scale=0.0))
        inflated.outlier_counts = {k: v + 10 for k, v in inflated.outlier_counts.items()}
        trend = clustering_trend([rep, inflated])
        assert not trend.strong_cluster_consistent
