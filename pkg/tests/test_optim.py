import numpy as np
import pytest

from ssllab.exceptions import NumericalError, ShapeError, SingularMatrixError
from ssllab.optim import (
    OptimSettings,
    check_gradient,
    minimize,
    minimize_box,
    solve_linear,
    solve_with_jitter,
)


def quadratic(A, b):
    def fun(x):
        return 0.5 * float(x @ A @ x) - float(b @ x), A @ x - b

    return fun


class TestMinimize:
    def test_norm_squared(self):
        res = minimize(lambda x: (float(x @ x), 2 * x), [3.0, 4.0])
        np.testing.assert_allclose(res.x, [0.0, 0.0], atol=1e-6)
        assert res.converged

    def test_shifted_parabola(self):
        res = minimize(lambda x: (float((x[0] - 2) ** 2), np.array([2 * (x[0] - 2)])), [0.0])
        assert res.x[0] == pytest.approx(2.0, abs=1e-6)
        assert res.fun == pytest.approx(0.0, abs=1e-10)

    def test_quadratic_matches_direct_solve(self):
        rng = np.random.default_rng(0)
        M = rng.normal(size=(5, 5))
        A = M @ M.T + 0.5 * np.eye(5)
        b = rng.normal(size=5)
        res = minimize(quadratic(A, b), np.zeros(5), OptimSettings(max_iter=50000, grad_tol=1e-10))
        np.testing.assert_allclose(res.x, np.linalg.solve(A, b), atol=1e-5)

    def test_monotone_decrease(self):
        rng = np.random.default_rng(1)
        M = rng.normal(size=(4, 4))
        A = M @ M.T + 0.1 * np.eye(4)
        b = rng.normal(size=4)
        seen = []
        base = quadratic(A, b)

        def tracking(x):
            value, grad = base(x)
            seen.append(value)
            return value, grad

        minimize(tracking, rng.normal(size=4))
        accepted = [seen[0]]
        for v in seen[1:]:
            if v <= accepted[-1]:
                accepted.append(v)
        # every accepted step decreased the objective
        assert all(b <= a for a, b in zip(accepted, accepted[1:]))

    def test_nonfinite_objective_raises(self):
        def fun(x):
            return float("nan"), x

        with pytest.raises(NumericalError):
            minimize(fun, [1.0])


class TestMinimizeBox:
    def test_active_bound(self):
        res = minimize_box(
            lambda x: (float((x[0] - 2) ** 2), np.array([2 * (x[0] - 2)])),
            [0.5], [0.0], [1.0],
        )
        assert res.x[0] == pytest.approx(1.0, abs=1e-10)

    def test_interior_minimum(self):
        res = minimize_box(
            lambda x: (float((x[0] - 0.3) ** 2), np.array([2 * (x[0] - 0.3)])),
            [0.9], [0.0], [1.0],
        )
        assert res.x[0] == pytest.approx(0.3, abs=1e-7)

    def test_matches_tighter_tolerance_oracle(self):
        rng = np.random.default_rng(2)
        M = rng.normal(size=(6, 6))
        A = M @ M.T + 0.3 * np.eye(6)
        b = rng.normal(size=6)
        fun = quadratic(A, b)
        x0 = np.full(6, 0.5)
        loose = minimize_box(fun, x0, 0.0, 1.0, OptimSettings(max_iter=20000, grad_tol=1e-8))
        tight = minimize_box(fun, x0, 0.0, 1.0, OptimSettings(max_iter=200000, grad_tol=1e-9))
        np.testing.assert_allclose(loose.x, tight.x, atol=1e-4)

    def test_iterates_stay_in_box(self):
        rng = np.random.default_rng(3)
        M = rng.normal(size=(4, 4))
        A = M @ M.T + 0.1 * np.eye(4)
        b = rng.normal(size=4)
        base = quadratic(A, b)

        def tracking(x):
            assert np.all(x >= -1e-15) and np.all(x <= 1 + 1e-15)
            return base(x)

        minimize_box(tracking, np.full(4, 0.5), 0.0, 1.0)

    def test_inconsistent_bounds(self):
        with pytest.raises(ValueError):
            minimize_box(lambda x: (0.0, x), [0.5], [1.0], [0.0])


class TestSolveLinear:
    def test_identity(self):
        b = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(solve_linear(np.eye(3), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(
            solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 8.0])), [1.0, 2.0]
        )

    def test_zero_matrix_singular(self):
        with pytest.raises(SingularMatrixError):
            solve_linear(np.zeros((2, 2)), np.ones(2))

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            solve_linear(np.ones((2, 3)), np.ones(2))
        with pytest.raises(ShapeError):
            solve_linear(np.eye(2), np.ones(3))

    def test_residual_bound(self):
        rng = np.random.default_rng(4)
        A = rng.normal(size=(8, 8)) + 8 * np.eye(8)
        B = rng.normal(size=(8, 2))
        X = solve_linear(A, B)
        resid = np.max(np.abs(A @ X - B))
        assert resid <= 1e-8 * (1 + np.max(np.abs(B)))

    def test_jitter_rescues_rank_deficiency(self):
        # duplicated row makes the normal matrix exactly singular
        X = np.array([[1.0, 1.0], [1.0, 1.0]])
        A = X.T @ X
        with pytest.raises(SingularMatrixError):
            solve_linear(A, np.ones(2))
        out = solve_with_jitter(A, np.ones(2))
        assert np.all(np.isfinite(out))


class TestCheckGradient:
    def test_exact_quadratic(self):
        fun = lambda x: (float(x @ x), 2 * x)
        assert check_gradient(fun, np.array([1.0, -2.0, 0.5])) < 1e-6

    def test_logistic_entropy_objective(self):
        from ssllab.semi import erlr_objective

        rng = np.random.default_rng(5)
        X_l = rng.normal(size=(12, 3))
        y = np.where(rng.random(12) < 0.5, -1.0, 1.0)
        X_u = rng.normal(size=(20, 3))
        fun = erlr_objective(X_l, y, X_u, 0.7, 0.05)
        assert check_gradient(fun, rng.normal(size=4) * 0.5) < 1e-4

    def test_squared_hinge_objective(self):
        from ssllab.core import KernelSpec, gram_matrix
        from ssllab.supervised import svm_objective

        rng = np.random.default_rng(6)
        X = rng.normal(size=(10, 2))
        y = np.where(rng.random(10) < 0.5, -1.0, 1.0)
        K = gram_matrix(KernelSpec("rbf", 0.3), X, X)
        fun = svm_objective(K, y, C=5.0)
        theta = rng.normal(size=11) * 0.1
        # keep away from hinge kinks
        f = K @ theta[:-1] + theta[-1]
        assert np.min(np.abs(1.0 - y * f)) > 1e-3
        assert check_gradient(fun, theta) < 1e-4


def test_settings_validation():
    with pytest.raises(ValueError):
        OptimSettings(max_iter=0)
    with pytest.raises(ValueError):
        OptimSettings(backtrack_factor=1.0)
    with pytest.raises(ValueError):
        OptimSettings(grad_tol=0.0)
