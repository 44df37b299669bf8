"""Seedable generators for archetypal simulated two-class problems.

All sampling goes through numpy's PCG64 generator, so one (seed, config)
pair always produces a bit-identical Dataset within this implementation.
Class names are "A" (first class) and "B" (second class) and every
generated label is present; the evaluation module removes labels.
"""

from __future__ import annotations

import numpy as np

from .core import Dataset

CLASS_ORDER = ("A", "B")

# Principal axes of the non-expected within-class covariance: eigenvalues
# (9, 1) with the major axis rotated 67.5 degrees from the x1 axis, i.e.
# 22.5 degrees away from the between-class direction (1, 1).  The tilt is
# what makes hard-label self-training drift away from the optimal boundary
# while the class means stay at +-1.
_ALT_MAJOR_VAR = 9.0
_ALT_MINOR_VAR = 1.0
_ALT_ANGLE = np.radians(67.5)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _alt_block() -> np.ndarray:
    c, s = np.cos(_ALT_ANGLE), np.sin(_ALT_ANGLE)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([_ALT_MAJOR_VAR, _ALT_MINOR_VAR]) @ R.T


def gaussian_covariance(d: int, expected: bool, variance: float = 1.0) -> np.ndarray:
    """Within-class covariance used by generate_two_class_gaussian."""
    if expected:
        return variance * np.eye(d)
    C = np.eye(d)
    block = _alt_block()
    for i in range(0, d - 1, 2):
        C[i : i + 2, i : i + 2] = block
    return variance * C


def gaussian_bayes_error(d: int, expected: bool, variance: float = 1.0) -> float:
    """Closed-form Bayes error for the two-class Gaussian problem."""
    from math import erf, sqrt

    C = gaussian_covariance(d, expected, variance)
    delta = 2.0 * np.ones(d)
    d2 = float(delta @ np.linalg.solve(C, delta))
    return 0.5 * (1.0 + erf(-sqrt(d2) / 2.0 / sqrt(2.0)))


def generate_two_class_gaussian(
    n: int,
    d: int = 2,
    variance: float = 1.0,
    expected: bool = True,
    seed: int = 0,
) -> Dataset:
    """Two Gaussian classes with means -1 and +1 in every coordinate.

    expected=True uses a spherical covariance, so the optimal boundary
    bisects the low-density gap between the clusters.  expected=False uses
    the tilted anisotropic covariance from gaussian_covariance, whose
    principal axis disagrees with the between-class direction; cluster-
    seeking semi-supervised methods deteriorate there.

    Odd n gives the extra point to the first class.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if d < 1:
        raise ValueError("d must be at least 1")
    if variance <= 0:
        raise ValueError("variance must be positive")
    rng = _rng(seed)
    C = gaussian_covariance(d, expected, variance)
    chol = np.linalg.cholesky(C)
    n0 = (n + 1) // 2
    z = rng.standard_normal((n, d))
    X = z @ chol.T
    X[:n0] -= 1.0
    X[n0:] += 1.0
    labels = [CLASS_ORDER[0]] * n0 + [CLASS_ORDER[1]] * (n - n0)
    return Dataset(X, labels, class_order=CLASS_ORDER)


def generate_crescent_moon(
    n_per_class: int, noise_sigma: float = 0.3, seed: int = 0
) -> Dataset:
    """Two interleaving half-moon arcs of radius 4.

    Class A is the upper half circle around the origin; class B is the same
    arc flipped and shifted to (R, R/2) so the moons hook into each other.
    Noise is isotropic Gaussian with std noise_sigma * R / 4 per coordinate.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be positive")
    rng = _rng(seed)
    radius = 4.0
    std = noise_sigma * radius / 4.0
    theta_a = rng.uniform(0.0, np.pi, n_per_class)
    a = np.column_stack([radius * np.cos(theta_a), radius * np.sin(theta_a)])
    a += std * rng.standard_normal(a.shape)
    theta_b = rng.uniform(0.0, np.pi, n_per_class)
    b = np.column_stack(
        [radius - radius * np.cos(theta_b), radius / 2.0 - radius * np.sin(theta_b)]
    )
    b += std * rng.standard_normal(b.shape)
    X = np.vstack([a, b])
    labels = [CLASS_ORDER[0]] * n_per_class + [CLASS_ORDER[1]] * n_per_class
    return Dataset(X, labels, class_order=CLASS_ORDER)


def generate_spirals(
    n_per_class: int,
    noise_sigma: float = 0.1,
    turns: float = 1.5,
    seed: int = 0,
) -> Dataset:
    """Two interleaved spirals; class B is class A rotated by pi."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be positive")
    if turns <= 0:
        raise ValueError("turns must be positive")
    rng = _rng(seed)
    t_a = rng.uniform(0.0, 1.0, n_per_class)
    t_b = rng.uniform(0.0, 1.0, n_per_class)

    def arm(t, phase):
        r = 0.5 + 2.0 * t
        theta = 2.0 * np.pi * turns * t + phase
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    a = arm(t_a, 0.0) + noise_sigma * rng.standard_normal((n_per_class, 2))
    b = arm(t_b, np.pi) + noise_sigma * rng.standard_normal((n_per_class, 2))
    X = np.vstack([a, b])
    labels = [CLASS_ORDER[0]] * n_per_class + [CLASS_ORDER[1]] * n_per_class
    return Dataset(X, labels, class_order=CLASS_ORDER)


def generate_parallel_planes(
    n_per_class: int, noise_sigma: float = 0.1, seed: int = 0
) -> Dataset:
    """Two horizontal bands: x1 uniform on [0, 2], x2 near 0 (A) or 1 (B)."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be positive")
    rng = _rng(seed)
    x1_a = rng.uniform(0.0, 2.0, n_per_class)
    x2_a = noise_sigma * rng.standard_normal(n_per_class)
    x1_b = rng.uniform(0.0, 2.0, n_per_class)
    x2_b = 1.0 + noise_sigma * rng.standard_normal(n_per_class)
    X = np.column_stack(
        [np.concatenate([x1_a, x1_b]), np.concatenate([x2_a, x2_b])]
    )
    labels = [CLASS_ORDER[0]] * n_per_class + [CLASS_ORDER[1]] * n_per_class
    return Dataset(X, labels, class_order=CLASS_ORDER)


def generate_two_circles(
    n_per_class: int, noise_sigma: float = 0.1, seed: int = 0
) -> Dataset:
    """Concentric circles of radius 1 (class A) and 2 (class B) plus noise."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be positive")
    rng = _rng(seed)

    def ring(radius):
        theta = rng.uniform(0.0, 2.0 * np.pi, n_per_class)
        pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        return pts + noise_sigma * rng.standard_normal(pts.shape)

    X = np.vstack([ring(1.0), ring(2.0)])
    labels = [CLASS_ORDER[0]] * n_per_class + [CLASS_ORDER[1]] * n_per_class
    return Dataset(X, labels, class_order=CLASS_ORDER)


GENERATORS = {
    "two-gaussian": generate_two_class_gaussian,
    "crescent-moon": generate_crescent_moon,
    "spirals": generate_spirals,
    "parallel-planes": generate_parallel_planes,
    "two-circles": generate_two_circles,
}
