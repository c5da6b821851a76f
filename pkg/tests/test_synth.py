import numpy as np
import pytest
from numpy.testing import assert_allclose

from riversep import errors
from riversep.ica import IcaConfig, fast_ica
from riversep.pca import fit_pca
from riversep.synth import evaluate_recovery, generate_scenario


class TestGenerateScenario:
    def test_noise_free_blend_is_exact(self):
        sc = generate_scenario(["uniform", "laplace"], rows=500, seed=1)
        assert_allclose(sc.observed, sc.sources @ sc.mixing.T, atol=0)

    def test_sources_standardized(self):
        sc = generate_scenario(["uniform", "laplace", "gaussian"], rows=200, seed=2)
        assert_allclose(sc.sources.mean(axis=0), np.zeros(3), atol=1e-12)
        assert_allclose(sc.sources.std(axis=0, ddof=1), np.ones(3), atol=1e-12)

    def test_bit_identical_reruns(self):
        a = generate_scenario(["uniform", "gaussian"], rows=300, noise_sd=0.2, seed=3)
        b = generate_scenario(["uniform", "gaussian"], rows=300, noise_sd=0.2, seed=3)
        assert np.array_equal(a.sources, b.sources)
        assert np.array_equal(a.mixing, b.mixing)
        assert np.array_equal(a.observed, b.observed)

    def test_adding_a_source_keeps_existing_columns(self):
        two = generate_scenario(["uniform", "laplace"], rows=400, seed=4)
        three = generate_scenario(["uniform", "laplace", "gaussian"], rows=400, seed=4)
        assert np.array_equal(two.sources, three.sources[:, :2])

    def test_sources_nearly_uncorrelated_at_scale(self):
        sc = generate_scenario(["gaussian", "uniform"], rows=5000, seed=5)
        c = np.corrcoef(sc.sources.T)
        assert abs(c[0, 1]) < 0.05

    def test_condition_bound_respected(self):
        sc = generate_scenario(["uniform", "uniform", "uniform"], rows=100,
                               mixing_condition_max=10.0, seed=6)
        assert np.linalg.cond(sc.mixing) <= 10.0

    def test_unsatisfiable_condition_bound(self):
        with pytest.raises(errors.ConditioningFailed) as exc:
            generate_scenario(["uniform", "uniform"], rows=50,
                              mixing_condition_max=1.0000001, seed=7)
        assert exc.value.attempts == 50
        assert exc.value.best > 1.0

    def test_more_channels_than_sources(self):
        sc = generate_scenario(["uniform", "laplace"], rows=100, n_observed=5, seed=8)
        assert sc.observed.shape == (100, 5)
        assert sc.mixing.shape == (5, 2)

    def test_fewer_channels_rejected(self):
        with pytest.raises(errors.ShapeMismatch):
            generate_scenario(["uniform", "uniform"], rows=100, n_observed=1)

    def test_unknown_distribution(self):
        with pytest.raises(errors.OutOfRange):
            generate_scenario(["cauchy"], rows=100)

    def test_laplace_has_heavy_tails(self):
        sc = generate_scenario(["laplace"], rows=20000, seed=9)
        s = sc.sources[:, 0]
        kurtosis = np.mean(s**4) / np.mean(s**2) ** 2 - 3.0
        assert 2.0 < kurtosis < 4.5  # population excess kurtosis is 3


class TestEvaluateRecovery:
    def test_ica_on_clean_uniform_mixture(self):
        sc = generate_scenario(["uniform", "uniform"], rows=5000,
                               mixing_condition_max=10.0, seed=10)
        model = fast_ica(sc.observed, IcaConfig(n_components=2, seed=10))
        report = evaluate_recovery(sc, model)
        assert report.method == "ica"
        assert report.amari < 0.05
        assert all(c > 0.95 for c in report.matched_correlations)

    def test_pca_on_oblique_mixing_fails_to_unmix(self):
        # non-orthogonal mixing: orthogonal loadings cannot undo it
        sc = generate_scenario(["uniform", "uniform"], rows=5000,
                               mixing_condition_max=10.0, seed=42)
        assert np.linalg.cond(sc.mixing) > 1.5
        model = fit_pca(sc.observed, center=True, scale=False)
        report = evaluate_recovery(sc, model)
        assert report.method == "pca"
        assert report.amari > 0.1

    def test_gaussian_sources_not_identifiable(self):
        # Rotational symmetry makes the recovered axes arbitrary, so
        # match quality swings wildly from seed to seed.  The sample must
        # stay modest: with two sources and exclusive matching the worst
        # large-sample alignment is cos(45 deg) ~ 0.707, which caps the
        # asymptotic spread below 0.3 — the swing shows at survey-sized n.
        quality = []
        for seed in range(12):
            sc = generate_scenario(["gaussian", "gaussian"], rows=100, seed=seed)
            model = fast_ica(sc.observed, IcaConfig(n_components=2, seed=seed))
            report = evaluate_recovery(sc, model)
            quality.extend(report.matched_correlations)
        assert max(quality) - min(quality) > 0.3

    def test_noise_degrades_recovery_monotonically(self):
        means = []
        for noise in (0.0, 0.1, 0.5):
            vals = []
            for seed in range(10):
                sc = generate_scenario(["uniform", "uniform"], rows=3000,
                                       noise_sd=noise,
                                       mixing_condition_max=10.0, seed=100 + seed)
                model = fast_ica(sc.observed, IcaConfig(n_components=2, seed=seed))
                vals.append(evaluate_recovery(sc, model).amari)
            means.append(np.mean(vals))
        assert means[0] <= means[1] <= means[2]

    def test_wrong_model_type(self):
        sc = generate_scenario(["uniform"], rows=100, seed=11)
        with pytest.raises(errors.ShapeMismatch):
            evaluate_recovery(sc, object())
