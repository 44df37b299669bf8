"""Supervised baselines.

The semi-supervised estimators wrap or reduce to these: (kernel) least
squares, nearest mean, LDA, logistic regression, and a primal kernel SVM
trained with a squared hinge so one smooth-gradient optimizer serves every
method in the package.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import optim
from .core import (
    PM_ONE,
    ZERO_ONE,
    ClassEncoding,
    GaussianModel,
    KernelModel,
    KernelSpec,
    LinearModel,
    gram_matrix,
)
from .exceptions import MissingClassError
from .optim import OptimSettings, minimize, solve_with_jitter


def _class_order_from(y: Sequence[str], class_order=None) -> tuple:
    if class_order is not None:
        return tuple(class_order)
    seen: list[str] = []
    for label in y:
        if label not in seen:
            seen.append(label)
    if len(seen) == 1:
        raise MissingClassError(f"only one class present: {seen[0]!r}")
    return tuple(seen)


def _require_both_classes(y: Sequence[str], class_order: tuple) -> None:
    present = set(y)
    for c in class_order:
        if c not in present:
            raise MissingClassError(f"class {c!r} has no labeled examples")


def augment(X: np.ndarray) -> np.ndarray:
    """Append the intercept column of ones."""
    return np.hstack([X, np.ones((X.shape[0], 1))])


def ridge_normal_matrix(X_aug: np.ndarray, lam: float, n_scale: int) -> np.ndarray:
    """X'X plus lam * n_scale on the diagonal, intercept slot unpenalized."""
    A = X_aug.T @ X_aug
    if lam > 0:
        penalty = lam * n_scale * np.eye(X_aug.shape[1])
        penalty[-1, -1] = 0.0
        A = A + penalty
    return A


def train_least_squares(X_l, y_l, lam: float = 0.0, class_order=None) -> LinearModel:
    """Regression of 0/1 targets: argmin ||Xw + b - y||^2 / n + lam ||w||^2."""
    X_l = np.asarray(X_l, dtype=float)
    order = _class_order_from(y_l, class_order)
    targets = ClassEncoding(order).encode(y_l, ZERO_ONE)
    Xa = augment(X_l)
    A = ridge_normal_matrix(Xa, lam, X_l.shape[0])
    coef = solve_with_jitter(A, Xa.T @ targets)
    return LinearModel(coef[:-1], coef[-1], order, link="squared")


def train_kernel_least_squares(
    X_l, y_l, kernel: KernelSpec, lam: float = 0.0, class_order=None
) -> KernelModel:
    """Kernel ridge on centered 0/1 targets; the bias absorbs the target mean."""
    X_l = np.asarray(X_l, dtype=float)
    order = _class_order_from(y_l, class_order)
    targets = ClassEncoding(order).encode(y_l, ZERO_ONE)
    n = X_l.shape[0]
    K = gram_matrix(kernel, X_l, X_l)
    y_mean = float(targets.mean())
    alpha = solve_with_jitter(K + lam * n * np.eye(n), targets - y_mean)
    return KernelModel(
        alpha, y_mean, X_l, kernel, order, target_scale=ZERO_ONE, tag="kernel_least_squares"
    )


def train_nearest_mean(X_l, y_l, class_order=None) -> GaussianModel:
    """Class means with a pooled spherical variance and frequency priors."""
    X_l = np.asarray(X_l, dtype=float)
    order = _class_order_from(y_l, class_order)
    _require_both_classes(y_l, order)
    idx = ClassEncoding(order).encode(y_l, ZERO_ONE).astype(int)
    n, d = X_l.shape
    means = np.vstack([X_l[idx == c].mean(axis=0) for c in (0, 1)])
    priors = np.array([(idx == 0).mean(), (idx == 1).mean()])
    sq = sum(
        float(np.sum((X_l[idx == c] - means[c]) ** 2)) for c in (0, 1)
    )
    variance = sq / (n * d)
    floored = variance <= 0.0
    if floored:
        variance = 1e-12
    return GaussianModel(
        priors,
        means,
        variance * np.eye(d),
        order,
        spherical=True,
        variance_floored=floored,
    )


def train_lda(X_l, y_l, reg: float = 0.0, class_order=None) -> GaussianModel:
    """LDA with maximum-likelihood (1/n) pooled covariance plus reg * I."""
    X_l = np.asarray(X_l, dtype=float)
    order = _class_order_from(y_l, class_order)
    _require_both_classes(y_l, order)
    idx = ClassEncoding(order).encode(y_l, ZERO_ONE).astype(int)
    n, d = X_l.shape
    means = np.vstack([X_l[idx == c].mean(axis=0) for c in (0, 1)])
    priors = np.array([(idx == 0).mean(), (idx == 1).mean()])
    cov = np.zeros((d, d))
    for c in (0, 1):
        diff = X_l[idx == c] - means[c]
        cov += diff.T @ diff
    cov /= n
    cov += reg * np.eye(d)
    sign, _ = np.linalg.slogdet(cov)
    if sign <= 0:
        raise optim.SingularMatrixError(
            "pooled covariance is singular; pass reg > 0"
        )
    return GaussianModel(priors, means, cov, order, spherical=False)


def logistic_objective(X: np.ndarray, y_pm: np.ndarray, lam: float):
    """Mean logistic NLL + lam ||w||^2 over theta = (w, b), with gradient."""
    n = X.shape[0]

    def fun(theta):
        w, b = theta[:-1], theta[-1]
        z = X @ w + b
        t = y_pm * z
        value = float(np.mean(np.logaddexp(0.0, -t))) + lam * float(w @ w)
        # sigma(-t) computed stably in both tails
        s = np.where(t >= 0, np.exp(-t) / (1.0 + np.exp(-t)), 1.0 / (1.0 + np.exp(t)))
        coeff = -y_pm * s / n
        grad = np.empty_like(theta)
        grad[:-1] = X.T @ coeff + 2.0 * lam * w
        grad[-1] = coeff.sum()
        return value, grad

    return fun


def logistic_preconditioner(X_aug: np.ndarray, lam: float) -> np.ndarray:
    """Hessian of the logistic objective at p = 1/2, the natural scaling."""
    n = X_aug.shape[0]
    H0 = 0.25 * (X_aug.T @ X_aug) / n
    penalty = 2.0 * lam * np.eye(X_aug.shape[1])
    penalty[-1, -1] = 0.0
    return H0 + penalty


def train_logistic(
    X_l,
    y_l,
    lam: float = 0.0,
    settings: Optional[OptimSettings] = None,
    class_order=None,
) -> LinearModel:
    """Logistic regression via gradient descent; decision value is the log-odds."""
    X_l = np.asarray(X_l, dtype=float)
    order = _class_order_from(y_l, class_order)
    _require_both_classes(y_l, order)
    y_pm = ClassEncoding(order).encode(y_l, PM_ONE)
    fun = logistic_objective(X_l, y_pm, lam)
    s = settings or OptimSettings(max_iter=5000)
    H0 = logistic_preconditioner(augment(X_l), lam)
    result = _preconditioned_minimize(fun, H0, np.zeros(X_l.shape[1] + 1), s)
    return LinearModel(
        result.x[:-1], result.x[-1], order, link="logistic", converged=result.converged
    )


def svm_objective(K: np.ndarray, y_pm: np.ndarray, C: float):
    """Primal squared-hinge SVM objective over theta = (alpha, b), with gradient.

    (1 / (2 C n)) alpha' K alpha + (1/n) sum max(0, 1 - y f)^2, f = K alpha + b.
    """
    n = K.shape[0]

    def fun(theta):
        alpha, b = theta[:-1], theta[-1]
        Ka = K @ alpha
        f = Ka + b
        h = np.maximum(0.0, 1.0 - y_pm * f)
        value = float(alpha @ Ka) / (2.0 * C * n) + float(h @ h) / n
        dloss_df = (-2.0 / n) * y_pm * h
        grad = np.empty_like(theta)
        grad[:-1] = Ka / (C * n) + K @ dloss_df
        grad[-1] = dloss_df.sum()
        return value, grad

    return fun


def spd_inverse_sqrt(H: np.ndarray, floor_ratio: float = 1e-10) -> np.ndarray:
    """Inverse square root of a symmetric PSD matrix, small eigenvalues floored.

    Used to precondition kernel-space objectives: gradient descent runs on
    g(z) = J(Pz), which leaves the minimizer of J unchanged while making the
    initial Hessian approximately the identity.
    """
    vals, vecs = np.linalg.eigh(0.5 * (H + H.T))
    floor = max(vals.max(), 0.0) * floor_ratio + np.finfo(float).tiny
    vals = np.maximum(vals, floor)
    return (vecs / np.sqrt(vals)) @ vecs.T


def _preconditioned_minimize(fun, H0, theta0, settings: OptimSettings):
    P = spd_inverse_sqrt(H0)

    def fun_z(z):
        value, grad = fun(P @ z)
        return value, P @ grad

    z0 = np.zeros_like(theta0) if not np.any(theta0) else np.linalg.solve(P, theta0)
    result = minimize(fun_z, z0, settings)
    result.x = P @ result.x
    return result


def train_svm(
    X_l,
    y_l,
    kernel: KernelSpec,
    C: float = 1.0,
    settings: Optional[OptimSettings] = None,
    class_order=None,
) -> KernelModel:
    """Primal kernel SVM with squared hinge, f(x) = sum_i alpha_i k(x_i, x) + b."""
    if C <= 0:
        raise ValueError("C must be positive")
    X_l = np.asarray(X_l, dtype=float)
    order = _class_order_from(y_l, class_order)
    _require_both_classes(y_l, order)
    y_pm = ClassEncoding(order).encode(y_l, PM_ONE)
    n = X_l.shape[0]
    K = gram_matrix(kernel, X_l, X_l)
    fun = svm_objective(K, y_pm, C)

    # all-active squared-hinge Hessian as the preconditioner
    H0 = np.zeros((n + 1, n + 1))
    H0[:n, :n] = K / (C * n) + (2.0 / n) * (K @ K)
    H0[:n, n] = (2.0 / n) * K.sum(axis=1)
    H0[n, :n] = H0[:n, n]
    H0[n, n] = 2.0
    s = settings or OptimSettings(max_iter=2000)
    result = _preconditioned_minimize(fun, H0, np.zeros(n + 1), s)
    return KernelModel(
        result.x[:-1],
        result.x[-1],
        X_l,
        kernel,
        order,
        target_scale=PM_ONE,
        converged=result.converged,
        tag="svm",
    )
