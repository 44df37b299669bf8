import numpy as np
import pytest

from ssllab.core import ClassEncoding, KernelSpec, gram_matrix
from ssllab.exceptions import MissingClassError
from ssllab.optim import OptimSettings, check_gradient
from ssllab.supervised import (
    augment,
    logistic_objective,
    svm_objective,
    train_kernel_least_squares,
    train_lda,
    train_least_squares,
    train_logistic,
    train_nearest_mean,
    train_svm,
)


def random_problem(seed, n=30, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = ["A" if x[0] - 0.5 * x[1] + 0.1 * rng.normal() < 0 else "B" for x in X]
    if "A" not in y:
        y[0] = "A"
    if "B" not in y:
        y[-1] = "B"
    return X, y


class TestLeastSquares:
    def test_exact_interpolation(self):
        m = train_least_squares([[0.0], [1.0]], ["A", "B"], 0.0)
        assert m.intercept == pytest.approx(0.0, abs=1e-10)
        assert m.weights[0] == pytest.approx(1.0, abs=1e-10)
        assert m.predict([[0.6]]) == ["B"]

    def test_fully_shrunk_limit(self):
        X, y = random_problem(0)
        m = train_least_squares(X, y, 1e9)
        y01 = ClassEncoding(m.class_order).encode(y)
        np.testing.assert_allclose(m.weights, 0.0, atol=1e-6)
        assert m.intercept == pytest.approx(float(y01.mean()), abs=1e-6)

    def test_matches_normal_equation_oracle(self):
        X, y = random_problem(1, n=20, d=3)
        lam = 0.1
        m = train_least_squares(X, y, lam)
        # independent oracle: explicit augmented normal equations
        Xa = augment(np.asarray(X))
        y01 = ClassEncoding(m.class_order).encode(y)
        penalty = lam * len(y) * np.eye(4)
        penalty[-1, -1] = 0.0
        coef = np.linalg.solve(Xa.T @ Xa + penalty, Xa.T @ y01)
        np.testing.assert_allclose(np.append(m.weights, m.intercept), coef, atol=1e-8)

    def test_global_minimum_property(self):
        X, y = random_problem(2, n=25)
        m = train_least_squares(X, y, 0.0)
        y01 = ClassEncoding(m.class_order).encode(y)
        base = float(np.mean((m.raw_output(X) - y01) ** 2))
        rng = np.random.default_rng(3)
        for _ in range(20):
            dw = rng.normal(size=3) * 0.01
            db = rng.normal() * 0.01
            perturbed = np.asarray(X) @ (m.weights + dw) + m.intercept + db
            assert float(np.mean((perturbed - y01) ** 2)) >= base - 1e-12


class TestKernelLeastSquares:
    def test_linear_kernel_on_centered_data_matches_primal(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(25, 3))
        X -= X.mean(axis=0)
        y = ["A" if x[0] < 0 else "B" for x in X]
        lam = 0.05
        primal = train_least_squares(X, y, lam)
        kern = train_kernel_least_squares(X, y, KernelSpec("linear"), lam)
        test = rng.normal(size=(10, 3))
        np.testing.assert_allclose(
            kern.decision_values(test), primal.decision_values(test), atol=1e-6
        )

    def test_large_lambda_is_constant(self):
        X, y = random_problem(5)
        m = train_kernel_least_squares(X, y, KernelSpec("rbf", 0.5), 1e6)
        y01 = ClassEncoding(m.class_order).encode(y)
        np.testing.assert_allclose(m.raw_output(X), y01.mean(), atol=1e-4)

    def test_single_point_interpolation(self):
        m = train_kernel_least_squares(
            [[0.0]], ["A"], KernelSpec("rbf", 1.0), 1e-12, class_order=("A", "B")
        )
        assert m.raw_output([[0.0]])[0] == pytest.approx(0.0, abs=1e-9)


class TestNearestMean:
    def test_means_and_prediction(self):
        m = train_nearest_mean([[0.0, 0.0], [2.0, 2.0]], ["A", "B"])
        np.testing.assert_array_equal(m.means[0], [0.0, 0.0])
        np.testing.assert_array_equal(m.means[1], [2.0, 2.0])
        assert m.predict([[0.1, 0.0]]) == ["A"]

    def test_equidistant_decision_zero(self):
        m = train_nearest_mean(
            [[0.0, 0.0], [0.0, 0.0], [2.0, 0.0], [2.0, 0.0]], ["A", "A", "B", "B"]
        )
        assert m.decision_values([[1.0, 5.0]])[0] == pytest.approx(0.0, abs=1e-12)

    def test_means_match_arithmetic_oracle(self):
        X, y = random_problem(6)
        m = train_nearest_mean(X, y)
        X = np.asarray(X)
        for c, name in enumerate(m.class_order):
            rows = [x for x, t in zip(X, y) if t == name]
            np.testing.assert_allclose(m.means[c], np.mean(rows, axis=0), atol=1e-12)

    def test_pooled_variance_formula(self):
        X, y = random_problem(7)
        m = train_nearest_mean(X, y)
        X = np.asarray(X)
        sq = 0.0
        for c, name in enumerate(m.class_order):
            rows = np.array([x for x, t in zip(X, y) if t == name])
            sq += np.sum((rows - m.means[c]) ** 2)
        assert m.covariance[0, 0] == pytest.approx(sq / X.size, abs=1e-12)

    def test_missing_class(self):
        with pytest.raises(MissingClassError):
            train_nearest_mean([[0.0]], ["A"], class_order=("A", "B"))

    def test_row_order_invariance(self):
        X, y = random_problem(8)
        m1 = train_nearest_mean(X, y)
        perm = np.random.default_rng(0).permutation(len(y))
        m2 = train_nearest_mean(
            np.asarray(X)[perm], [y[i] for i in perm], class_order=m1.class_order
        )
        np.testing.assert_allclose(m1.means, m2.means, atol=1e-12)


class TestLDA:
    def test_boundary_is_perpendicular_bisector(self):
        rng = np.random.default_rng(9)
        a = rng.normal(size=(50, 2)) * 0.1 + [-2.0, 0.0]
        b = rng.normal(size=(50, 2)) * 0.1 + [2.0, 0.0]
        X = np.vstack([a, b])
        y = ["A"] * 50 + ["B"] * 50
        m = train_lda(X, y)
        midpoint = 0.5 * (m.means[0] + m.means[1])
        assert m.decision_values([midpoint])[0] == pytest.approx(0.0, abs=1e-10)

    def test_priors_are_frequencies(self):
        X = np.random.default_rng(10).normal(size=(40, 2))
        y = ["A"] * 30 + ["B"] * 10
        m = train_lda(X, y)
        np.testing.assert_allclose(m.priors, [0.75, 0.25])

    def test_covariance_matches_pooled_oracle(self):
        X, y = random_problem(11)
        m = train_lda(X, y)
        X = np.asarray(X)
        cov = np.zeros((3, 3))
        for c, name in enumerate(m.class_order):
            rows = np.array([x for x, t in zip(X, y) if t == name])
            diff = rows - rows.mean(axis=0)
            cov += diff.T @ diff
        np.testing.assert_allclose(m.covariance, cov / len(y), atol=1e-10)


class TestLogistic:
    def test_intercept_only_limit(self):
        X, y = random_problem(12)
        m = train_logistic(X, y, 100.0, OptimSettings(max_iter=50000, grad_tol=1e-12))
        p = np.mean(ClassEncoding(m.class_order).encode(y))
        np.testing.assert_allclose(m.weights, 0.0, atol=2e-3)
        assert m.intercept == pytest.approx(np.log(p / (1 - p)), abs=1e-2)

    def test_separable_data_training_error_zero(self):
        rng = np.random.default_rng(13)
        a = rng.normal(size=(20, 2)) + [-3.0, 0.0]
        b = rng.normal(size=(20, 2)) + [3.0, 0.0]
        X = np.vstack([a, b])
        y = ["A"] * 20 + ["B"] * 20
        m = train_logistic(X, y, 1e-4)
        assert m.predict(X) == y

    def test_gradient_check(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(15, 3))
        y = np.where(rng.random(15) < 0.5, -1.0, 1.0)
        fun = logistic_objective(X, y, 0.01)
        assert check_gradient(fun, rng.normal(size=4)) < 1e-5

    def test_duplication_invariance(self):
        X, y = random_problem(15, n=20)
        m1 = train_logistic(X, y, 0.01)
        X2 = np.vstack([X, X])
        m2 = train_logistic(X2, y + y, 0.01, class_order=m1.class_order)
        assert m1.predict(X) == m2.predict(X)


class TestSVM:
    def test_two_points_large_c_margin(self):
        X = [[0.0, 0.0], [10.0, 10.0]]
        y = ["A", "B"]
        m = train_svm(X, y, KernelSpec("rbf", 0.05), C=1e4)
        f = m.decision_values(X)
        assert f[0] <= -(1 - 1e-3) and f[1] >= 1 - 1e-3

    def test_small_c_constant_fit(self):
        X = [[0.0], [1.0], [2.0]]
        y = ["B", "B", "A"]
        m = train_svm(X, y, KernelSpec("rbf", 0.5), C=1e-9,
                      settings=OptimSettings(max_iter=5000, grad_tol=1e-10),
                      class_order=("A", "B"))
        # with alpha ~ 0 the bias minimizes 2(1-b)^2 + (1+b)^2 -> b = 1/3
        np.testing.assert_allclose(m.alpha, 0.0, atol=1e-4)
        assert m.bias == pytest.approx(1.0 / 3.0, abs=1e-3)

    def test_gradient_check_away_from_margin(self):
        rng = np.random.default_rng(16)
        X = rng.normal(size=(8, 2))
        y = np.where(rng.random(8) < 0.5, -1.0, 1.0)
        K = gram_matrix(KernelSpec("rbf", 0.4), X, X)
        fun = svm_objective(K, y, C=2.0)
        theta = rng.normal(size=9) * 0.05
        f = K @ theta[:-1] + theta[-1]
        assert np.min(np.abs(1.0 - y * f)) > 1e-3
        assert check_gradient(fun, theta) < 1e-4
