import math

import numpy as np
import pytest

from ssllab.datagen import (
    gaussian_bayes_error,
    gaussian_covariance,
    generate_crescent_moon,
    generate_parallel_planes,
    generate_spirals,
    generate_two_circles,
    generate_two_class_gaussian,
)


class TestDeterminismAndCounts:
    @pytest.mark.parametrize(
        "make",
        [
            lambda s: generate_two_class_gaussian(101, 2, expected=False, seed=s),
            lambda s: generate_crescent_moon(40, 0.3, seed=s),
            lambda s: generate_spirals(30, 0.05, seed=s),
            lambda s: generate_parallel_planes(25, 0.1, seed=s),
            lambda s: generate_two_circles(20, 0.1, seed=s),
        ],
    )
    def test_same_seed_bit_identical(self, make):
        d1, d2 = make(123), make(123)
        assert np.array_equal(d1.features, d2.features)
        assert d1.labels == d2.labels
        d3 = make(124)
        assert not np.array_equal(d1.features, d3.features)

    def test_odd_n_gives_extra_point_to_first_class(self):
        d = generate_two_class_gaussian(101, 2, seed=0)
        counts = {c: d.labels.count(c) for c in d.class_order}
        assert counts["A"] == 51 and counts["B"] == 50

    def test_all_labels_present(self):
        d = generate_crescent_moon(10, 0.3, seed=0)
        assert all(y is not None for y in d.labels)
        assert d.labels.count("A") == 10 and d.labels.count("B") == 10


class TestTwoClassGaussian:
    def test_bayes_error_formula_vs_monte_carlo(self):
        # oracle: classify a large sample with the exact posterior rule
        for expected in (True, False):
            C = gaussian_covariance(2, expected)
            C_inv = np.linalg.inv(C)
            rng = np.random.default_rng(0)
            chol = np.linalg.cholesky(C)
            n = 1_000_000
            z = rng.standard_normal((n, 2)) @ chol.T
            signs = rng.random(n) < 0.5
            mu = np.where(signs[:, None], 1.0, -1.0)
            X = z + mu
            w = C_inv @ (2.0 * np.ones(2))
            predicted_positive = X @ w > 0
            mc_error = float(np.mean(predicted_positive != signs))
            assert gaussian_bayes_error(2, expected) == pytest.approx(mc_error, abs=0.003)

    def test_expected_bayes_error_closed_form(self):
        # spherical case: squared separation 8, error Phi(-sqrt(8)/2)
        value = 0.5 * (1 + math.erf(-math.sqrt(8.0) / 2 / math.sqrt(2)))
        assert gaussian_bayes_error(2, True) == pytest.approx(value, abs=1e-12)
        assert value == pytest.approx(0.0786, abs=5e-4)

    def test_empirical_means(self):
        for expected in (True, False):
            d = generate_two_class_gaussian(100_000, 2, expected=expected, seed=7)
            X = d.features
            a = X[: 50_000].mean(axis=0)
            b = X[50_000:].mean(axis=0)
            np.testing.assert_allclose(a, [-1.0, -1.0], atol=0.05)
            np.testing.assert_allclose(b, [1.0, 1.0], atol=0.05)

    def test_empirical_covariance_matches_construction(self):
        d = generate_two_class_gaussian(200_000, 2, expected=False, seed=11)
        X = d.features[:100_000] - d.features[:100_000].mean(axis=0)
        emp = X.T @ X / len(X)
        np.testing.assert_allclose(emp, gaussian_covariance(2, False), atol=0.08)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            generate_two_class_gaussian(1, 2)
        with pytest.raises(ValueError):
            generate_two_class_gaussian(10, 0)
        with pytest.raises(ValueError):
            generate_two_class_gaussian(10, 2, variance=0.0)


class TestCrescentMoon:
    def test_noiseless_circle(self):
        d = generate_crescent_moon(50, 1e-12, seed=1)
        a = d.features[:50]
        radii = np.sqrt((a**2).sum(axis=1))
        np.testing.assert_allclose(radii, 4.0, atol=1e-9)

    def test_half_circle_ranges(self):
        d = generate_crescent_moon(50, 1e-12, seed=2)
        a, b = d.features[:50], d.features[50:]
        assert np.all(a[:, 1] >= -1e-9)
        assert np.all(b[:, 1] <= 2.0 + 1e-9)


class TestSpirals:
    def test_arms_are_pi_rotations(self):
        d = generate_spirals(200, 1e-12, turns=1.5, seed=3)
        b = d.features[200:]
        radii = np.sqrt((b**2).sum(axis=1))
        assert np.all(radii >= 0.5 - 1e-6) and np.all(radii <= 2.5 + 1e-6)
        # recover t from the radius and check the angle is theta(t) + pi
        t = (radii - 0.5) / 2.0
        expected_angle = 2.0 * np.pi * 1.5 * t + np.pi
        actual_angle = np.arctan2(b[:, 1], b[:, 0])
        delta = np.angle(np.exp(1j * (actual_angle - expected_angle)))
        np.testing.assert_allclose(delta, 0.0, atol=1e-6)

    def test_radius_range(self):
        d = generate_spirals(100, 1e-12, seed=4)
        radii = np.sqrt((d.features[:100] ** 2).sum(axis=1))
        assert radii.min() >= 0.5 - 1e-6
        assert radii.max() <= 2.5 + 1e-6


class TestParallelPlanes:
    def test_noiseless_bands(self):
        d = generate_parallel_planes(50, 1e-12, seed=5)
        np.testing.assert_allclose(d.features[:50, 1], 0.0, atol=1e-9)
        np.testing.assert_allclose(d.features[50:, 1], 1.0, atol=1e-9)

    def test_separable_at_default_noise(self):
        d = generate_parallel_planes(100, 0.1, seed=6)
        a, b = d.features[:100], d.features[100:]
        assert np.sum(a[:, 1] > 0.5) + np.sum(b[:, 1] < 0.5) == 0

    def test_x1_support(self):
        d = generate_parallel_planes(200, 0.1, seed=7)
        assert d.features[:, 0].min() >= 0.0
        assert d.features[:, 0].max() <= 2.0


class TestTwoCircles:
    def test_noiseless_radii(self):
        d = generate_two_circles(40, 1e-12, seed=8)
        np.testing.assert_allclose(
            np.sqrt((d.features[:40] ** 2).sum(axis=1)), 1.0, atol=1e-9
        )

    def test_separable_by_radius(self):
        d = generate_two_circles(40, 1e-12, seed=9)
        radii = np.sqrt((d.features**2).sum(axis=1))
        assert np.all(radii[:40] < 1.5) and np.all(radii[40:] > 1.5)

    def test_outer_mean_radius(self):
        d = generate_two_circles(10_000, 0.1, seed=10)
        radii = np.sqrt((d.features[10_000:] ** 2).sum(axis=1))
        assert radii.mean() == pytest.approx(2.0, abs=0.01)
