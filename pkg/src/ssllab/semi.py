"""Semi-supervised estimators.

Each trainer takes the labeled block (X_l, y_l) plus an unlabeled feature
block X_u, and reduces exactly to its supervised counterpart when X_u is
empty.  Trainers that assign soft labels expose them as the returned
model's `responsibilities` (probability of the second class per unlabeled
point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    PM_ONE,
    ZERO_ONE,
    ClassEncoding,
    GaussianModel,
    KernelModel,
    KernelSpec,
    LinearModel,
    TrainedModel,
    gram_matrix,
)
from .exceptions import MissingClassError, SingularMatrixError
from .graph import GraphConfig, build_graph
from .optim import OptimSettings, minimize, minimize_box, solve_linear, solve_with_jitter
from .supervised import (
    _class_order_from,
    _preconditioned_minimize,
    _require_both_classes,
    augment,
    logistic_objective,
    logistic_preconditioner,
    ridge_normal_matrix,
    train_lda,
    train_least_squares,
    train_logistic,
    train_nearest_mean,
)


@dataclass(frozen=True)
class LapParams:
    """Laplacian regularization strengths: ambient (lambda) and intrinsic (gamma)."""

    lam: float = 1e-4
    gamma: float = 1.0

    def __post_init__(self):
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lambda and gamma must be nonnegative")


BaseTrainer = Callable[[np.ndarray, Sequence[str]], TrainedModel]


def self_learning(
    base_trainer: BaseTrainer,
    X_l,
    y_l,
    X_u,
    max_iter: int = 100,
) -> TrainedModel:
    """Iterated pseudo-labeling around any supervised base trainer.

    Every round labels ALL unlabeled points with the current model, retrains
    the base on labeled plus pseudo-labeled data, and stops when the
    pseudo-labels no longer change (or max_iter is hit).  No confidence
    threshold is applied.
    """
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    model = base_trainer(X_l, y_l)
    rounds = 0
    if X_u.shape[0] == 0:
        model.responsibilities = np.empty(0)
        model.self_learning_rounds = rounds
        return model
    pseudo = model.predict(X_u)
    if max_iter > 0:
        X_aug = np.vstack([X_l, X_u])
        for rounds in range(1, max_iter + 1):
            model = base_trainer(X_aug, list(y_l) + pseudo)
            new_pseudo = model.predict(X_u)
            if new_pseudo == pseudo:
                break
            pseudo = new_pseudo
    model.responsibilities = ClassEncoding(model.class_order).encode(pseudo, ZERO_ONE)
    model.self_learning_rounds = rounds
    return model


def _log_gaussian(X: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    sign, logdet = np.linalg.slogdet(cov)
    diff = X - mean
    sol = solve_with_jitter(cov, diff.T).T
    maha = np.sum(diff * sol, axis=1)
    return -0.5 * (d * math.log(2.0 * math.pi) + logdet + maha)


def _em_log_likelihood(model: GaussianModel, X_l, idx_l, X_u) -> float:
    log_p = np.log(model.priors)
    total = 0.0
    dens_l = np.column_stack(
        [_log_gaussian(X_l, model.means[c], model.covariance) for c in (0, 1)]
    )
    total += float(np.sum(dens_l[np.arange(len(idx_l)), idx_l] + log_p[idx_l]))
    if X_u.shape[0]:
        dens_u = np.column_stack(
            [_log_gaussian(X_u, model.means[c], model.covariance) for c in (0, 1)]
        )
        total += float(np.sum(np.logaddexp(dens_u[:, 0] + log_p[0], dens_u[:, 1] + log_p[1])))
    return total


def train_em_generative(
    family: str,
    X_l,
    y_l,
    X_u,
    tol: float = 1e-8,
    max_iter: int = 1000,
    class_order=None,
) -> GaussianModel:
    """EM for the nearest-mean ('nmc') or LDA ('lda') model.

    Labeled points keep hard assignments; unlabeled points enter the M-step
    with their posterior responsibilities.  The observed-data log-likelihood
    is non-decreasing across iterations.
    """
    if family not in ("nmc", "lda"):
        raise ValueError(f"unknown generative family {family!r}")
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    _require_both_classes(y_l, order)
    idx_l = ClassEncoding(order).encode(y_l, ZERO_ONE).astype(int)
    n_l, d = X_l.shape
    n_u = X_u.shape[0]
    n_all = n_l + n_u

    supervised = train_nearest_mean(X_l, y_l, order) if family == "nmc" else train_lda(X_l, y_l, 0.0, order)
    model = supervised
    if n_u == 0:
        model.responsibilities = np.empty(0)
        return model

    hard1 = (idx_l == 1).astype(float)
    prev_ll = _em_log_likelihood(model, X_l, idx_l, X_u)
    q = model.posterior(X_u)
    floored = False
    for _ in range(max_iter):
        q = model.posterior(X_u)
        # M-step with responsibility weights, maximum-likelihood normalization
        n1 = hard1.sum() + q.sum()
        n0 = n_all - n1
        priors = np.array([n0, n1]) / n_all
        mu1 = (X_l[idx_l == 1].sum(axis=0) + q @ X_u) / n1
        mu0 = (X_l[idx_l == 0].sum(axis=0) + (1.0 - q) @ X_u) / n0
        means = np.vstack([mu0, mu1])
        scatter = np.zeros((d, d))
        for c, mu in ((0, mu0), (1, mu1)):
            diff_l = X_l[idx_l == c] - mu
            scatter += diff_l.T @ diff_l
            weight = q if c == 1 else 1.0 - q
            diff_u = X_u - mu
            scatter += (diff_u * weight[:, None]).T @ diff_u
        if family == "nmc":
            variance = float(np.trace(scatter)) / (n_all * d)
            if variance < 1e-9:
                variance, floored = 1e-9, True
            cov = variance * np.eye(d)
        else:
            cov = scatter / n_all
            eigvals = np.linalg.eigvalsh(cov)
            if eigvals.min() < 1e-9:
                cov = cov + (1e-9 - min(eigvals.min(), 0.0)) * np.eye(d)
                floored = True
        model = GaussianModel(
            priors,
            means,
            cov,
            order,
            spherical=(family == "nmc"),
            variance_floored=floored,
        )
        ll = _em_log_likelihood(model, X_l, idx_l, X_u)
        if ll - prev_ll < tol:
            prev_ll = ll
            break
        prev_ll = ll
    model.responsibilities = model.posterior(X_u)
    return model


def train_moment_constrained_nmc(X_l, y_l, X_u, class_order=None) -> GaussianModel:
    """Nearest-mean with class means shifted so their prior-weighted average
    equals the mean of all points, labeled and unlabeled."""
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    supervised = train_nearest_mean(X_l, y_l, order)
    mu_all = np.vstack([X_l, X_u]).mean(axis=0)
    correction = mu_all - supervised.priors @ supervised.means
    means = supervised.means + correction[None, :]

    idx = ClassEncoding(order).encode(y_l, ZERO_ONE).astype(int)
    n_l, d = X_l.shape
    sq = sum(float(np.sum((X_l[idx == c] - means[c]) ** 2)) for c in (0, 1))
    variance = sq / (n_l * d)
    floored = variance <= 0.0
    if floored:
        variance = 1e-12
    return GaussianModel(
        supervised.priors,
        means,
        variance * np.eye(d),
        order,
        spherical=True,
        variance_floored=floored,
    )


def train_usm_least_squares(X_l, y_l, X_u, lam: float = 0.0, class_order=None) -> LinearModel:
    """Least squares with the labeled second moment replaced by the all-data
    estimate: solve((n_l/n_all) X_all'X_all + lam n_l I*, X_l' y)."""
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    targets = ClassEncoding(order).encode(y_l, ZERO_ONE)
    Xa_l = augment(X_l)
    Xa_all = augment(np.vstack([X_l, X_u]))
    n_l, n_all = X_l.shape[0], Xa_all.shape[0]
    A = (n_l / n_all) * (Xa_all.T @ Xa_all)
    if lam > 0:
        penalty = lam * n_l * np.eye(A.shape[0])
        penalty[-1, -1] = 0.0
        A = A + penalty
    coef = solve_with_jitter(A, Xa_l.T @ targets)
    return LinearModel(coef[:-1], coef[-1], order, link="squared")


class _SoftLabelFitMap:
    """The affine map q -> w(q): ridge fit of (X_l u X_u, [y01; q])."""

    def __init__(self, X_l, targets_l, X_u, lam):
        self.Xa_l = augment(X_l)
        self.Xa_u = augment(X_u)
        Xa_all = np.vstack([self.Xa_l, self.Xa_u])
        n_all = Xa_all.shape[0]
        A = ridge_normal_matrix(Xa_all, lam, n_all)
        self.M_l = solve_with_jitter(A, self.Xa_l.T)
        self.M_u = solve_with_jitter(A, self.Xa_u.T)
        self.w0 = self.M_l @ targets_l
        self.second_moment = (Xa_all.T @ Xa_all) / n_all

    def coef(self, q: np.ndarray) -> np.ndarray:
        return self.w0 + self.M_u @ q


def _box_settings(lipschitz: float, grad_tol: float, max_iter: int) -> OptimSettings:
    step = 1.0 / lipschitz if lipschitz > 0 else 1.0
    return OptimSettings(
        max_iter=max_iter,
        grad_tol=grad_tol,
        initial_step=step,
    )


def train_icls(
    X_l,
    y_l,
    X_u,
    lam: float = 0.0,
    settings: Optional[OptimSettings] = None,
    class_order=None,
) -> LinearModel:
    """Implicitly constrained least squares.

    Over soft labels q in [0,1]^{n_u}, w(q) is the ridge fit of the augmented
    data; the returned model minimizes the mean squared loss of w(q) on the
    labeled examples only.  The box optimizer is warm started at the
    supervised model's clipped fitted values, which also makes the
    responsibilities deterministic.
    """
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    if X_u.shape[0] == 0:
        model = train_least_squares(X_l, y_l, lam, order)
        model.responsibilities = np.empty(0)
        return model
    targets = ClassEncoding(order).encode(y_l, ZERO_ONE)
    fit_map = _SoftLabelFitMap(X_l, targets, X_u, lam)
    n_l = X_l.shape[0]
    B = fit_map.Xa_l @ fit_map.M_u
    r0 = fit_map.Xa_l @ fit_map.w0 - targets

    def fun(q):
        resid = B @ q + r0
        grad = (2.0 / n_l) * (B.T @ resid)
        return float(resid @ resid) / n_l, grad

    supervised = train_least_squares(X_l, y_l, lam, order)
    q0 = np.clip(supervised.raw_output(X_u), 0.0, 1.0)
    if settings is None:
        lipschitz = 2.0 * float(np.linalg.eigvalsh(B @ B.T).max()) / n_l
        settings = _box_settings(lipschitz, grad_tol=1e-9, max_iter=20000)
    result = minimize_box(fun, q0, 0.0, 1.0, settings)
    coef = fit_map.coef(result.x)
    return LinearModel(
        coef[:-1],
        coef[-1],
        order,
        link="squared",
        converged=result.converged,
        responsibilities=result.x,
    )


def train_icls_projection(
    X_l,
    y_l,
    X_u,
    lam: float = 0.0,
    settings: Optional[OptimSettings] = None,
    reference: Optional[LinearModel] = None,
    class_order=None,
) -> LinearModel:
    """Projection of the supervised solution onto the implicitly constrained set.

    Minimizes D(q) = (w(q) - w_ref)' M (w(q) - w_ref) with M the second
    moment of ALL augmented data.  With lam = 0 the set {w(q)} contains the
    all-data true-label least squares fit, and the projection's mean squared
    loss on the full training set provably never exceeds the reference's.
    """
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    if reference is None:
        reference = train_least_squares(X_l, y_l, lam, order)
    if X_u.shape[0] == 0:
        model = train_least_squares(X_l, y_l, lam, order)
        model.responsibilities = np.empty(0)
        return model
    targets = ClassEncoding(order).encode(y_l, ZERO_ONE)
    fit_map = _SoftLabelFitMap(X_l, targets, X_u, lam)
    w_ref = np.append(reference.weights, reference.intercept)
    M = fit_map.second_moment
    M_u = fit_map.M_u

    def fun(q):
        diff = fit_map.coef(q) - w_ref
        Md = M @ diff
        return float(diff @ Md), 2.0 * (M_u.T @ Md)

    q0 = np.clip(reference.raw_output(X_u), 0.0, 1.0)
    if settings is None:
        R = np.linalg.cholesky(M + 1e-12 * np.trace(M) * np.eye(M.shape[0]))
        lipschitz = 2.0 * float(np.linalg.eigvalsh(R.T @ (M_u @ M_u.T) @ R).max())
        settings = _box_settings(lipschitz, grad_tol=1e-12, max_iter=50000)
    result = minimize_box(fun, q0, 0.0, 1.0, settings)
    coef = fit_map.coef(result.x)
    return LinearModel(
        coef[:-1],
        coef[-1],
        order,
        link="squared",
        converged=result.converged,
        responsibilities=result.x,
    )


def erlr_objective(X_l, y_pm, X_u, lambda_entropy, lambda_ridge):
    """Labeled logistic NLL + ridge + mean unlabeled entropy, with gradient."""
    base = logistic_objective(X_l, y_pm, lambda_ridge)
    n_u = X_u.shape[0]

    def fun(theta):
        value, grad = base(theta)
        if n_u == 0 or lambda_entropy == 0.0:
            return value, grad
        w, b = theta[:-1], theta[-1]
        z = X_u @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        # H(p) with 0 log 0 = 0; clip only inside the log
        pc = np.clip(p, 1e-300, 1.0 - 1e-16)
        entropy = -(pc * np.log(pc) + (1.0 - pc) * np.log1p(-pc))
        value += lambda_entropy * float(entropy.mean())
        dh_dz = -z * p * (1.0 - p)
        coeff = lambda_entropy * dh_dz / n_u
        grad = grad.copy()
        grad[:-1] += X_u.T @ coeff
        grad[-1] += coeff.sum()
        return value, grad

    return fun


def train_erlr(
    X_l,
    y_l,
    X_u,
    lambda_entropy: float = 1.0,
    lambda_ridge: float = 0.0,
    settings: Optional[OptimSettings] = None,
    class_order=None,
) -> LinearModel:
    """Entropy-regularized logistic regression, initialized at the supervised fit."""
    if lambda_entropy < 0:
        raise ValueError("lambda_entropy must be nonnegative")
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    _require_both_classes(y_l, order)
    s = settings or OptimSettings(max_iter=5000)
    supervised = train_logistic(X_l, y_l, lambda_ridge, s, order)
    if X_u.shape[0] == 0 or lambda_entropy == 0.0:
        return supervised
    y_pm = ClassEncoding(order).encode(y_l, PM_ONE)
    fun = erlr_objective(X_l, y_pm, X_u, lambda_entropy, lambda_ridge)
    theta0 = np.append(supervised.weights, supervised.intercept)
    H0 = logistic_preconditioner(augment(X_l), lambda_ridge)
    result = _preconditioned_minimize(fun, H0, theta0, s)
    return LinearModel(
        result.x[:-1], result.x[-1], order, link="logistic", converged=result.converged
    )


def _stack_all(X_l, X_u):
    return np.vstack([X_l, X_u]) if X_u.shape[0] else X_l


def train_laplacian_rls(
    X_l,
    y_l,
    X_u,
    kernel: KernelSpec,
    params: LapParams,
    graph_cfg: Optional[GraphConfig] = None,
    class_order=None,
) -> KernelModel:
    """Laplacian-regularized least squares in closed form.

    alpha solves (J K + lambda n_l I + gamma n_l / n^2 L K) alpha = J ytilde
    with J selecting labeled rows and ytilde the +-1 labels padded with
    zeros; f(x) = sum over ALL points of alpha_i k(x_i, x).
    """
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    y_pm = ClassEncoding(order).encode(y_l, PM_ONE)
    X_all = _stack_all(X_l, X_u)
    n_l, n_all = X_l.shape[0], X_all.shape[0]
    K = gram_matrix(kernel, X_all, X_all)
    j_diag = np.concatenate([np.ones(n_l), np.zeros(n_all - n_l)])
    y_tilde = np.concatenate([y_pm, np.zeros(n_all - n_l)])
    A = j_diag[:, None] * K + params.lam * n_l * np.eye(n_all)
    if params.gamma > 0:
        if n_all < 2:
            raise ValueError("need at least 2 points for the graph term")
        cfg = graph_cfg or GraphConfig(adjacency="full_rbf", weight_sigma=kernel.sigma)
        L = build_graph(X_all, cfg).laplacian
        A = A + (params.gamma * n_l / n_all**2) * (L @ K)
    try:
        alpha = solve_linear(A, j_diag * y_tilde)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            "Laplacian RLS system is singular; increase lambda"
        ) from exc
    return KernelModel(
        alpha, 0.0, X_all, kernel, order, target_scale=PM_ONE, tag="laplacian_rls"
    )


def lapsvm_objective(K, L, y_pm, n_l, lam, gamma):
    """Squared-hinge Laplacian SVM objective over theta = (alpha, b)."""
    n = K.shape[0]
    labeled = slice(0, n_l)

    def fun(theta):
        alpha, b = theta[:-1], theta[-1]
        Ka = K @ alpha
        f = Ka + b
        h = np.maximum(0.0, 1.0 - y_pm * f[labeled])
        value = float(h @ h) / n_l + lam * float(alpha @ Ka)
        df = np.zeros(n)
        df[labeled] = (-2.0 / n_l) * y_pm * h
        if gamma > 0:
            Lf = L @ f
            value += (gamma / n**2) * float(f @ Lf)
            df += (2.0 * gamma / n**2) * Lf
        grad = np.empty_like(theta)
        grad[:-1] = K @ df + 2.0 * lam * Ka
        grad[-1] = df.sum()
        return value, grad

    return fun


def train_laplacian_svm(
    X_l,
    y_l,
    X_u,
    kernel: KernelSpec,
    params: LapParams,
    graph_cfg: Optional[GraphConfig] = None,
    settings: Optional[OptimSettings] = None,
    class_order=None,
) -> KernelModel:
    """Laplacian SVM in the primal with a squared hinge.

    Representer form over ALL points: minimizes the labeled squared hinge
    plus lam alpha'K alpha plus gamma/n^2 f'Lf with f = K alpha + b.
    """
    X_l = np.asarray(X_l, dtype=float)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1]) if np.size(X_u) else np.empty((0, X_l.shape[1]))
    order = _class_order_from(y_l, class_order)
    _require_both_classes(y_l, order)
    y_pm = ClassEncoding(order).encode(y_l, PM_ONE)
    X_all = _stack_all(X_l, X_u)
    n_l, n_all = X_l.shape[0], X_all.shape[0]
    K = gram_matrix(kernel, X_all, X_all)
    if params.gamma > 0:
        cfg = graph_cfg or GraphConfig(adjacency="full_rbf", weight_sigma=kernel.sigma)
        L = build_graph(X_all, cfg).laplacian
    else:
        L = np.zeros((n_all, n_all))
    fun = lapsvm_objective(K, L, y_pm, n_l, params.lam, params.gamma)

    j_diag = np.concatenate([np.ones(n_l), np.zeros(n_all - n_l)])
    KJK = (K * j_diag[None, :]) @ K
    H0 = np.zeros((n_all + 1, n_all + 1))
    H0[:n_all, :n_all] = 2.0 * params.lam * K + (2.0 / n_l) * KJK
    if params.gamma > 0:
        H0[:n_all, :n_all] += (2.0 * params.gamma / n_all**2) * (K @ L @ K)
    H0[:n_all, n_all] = (2.0 / n_l) * (K @ j_diag)
    H0[n_all, :n_all] = H0[:n_all, n_all]
    H0[n_all, n_all] = 2.0
    s = settings or OptimSettings(max_iter=2000)
    result = _preconditioned_minimize(fun, H0, np.zeros(n_all + 1), s)
    return KernelModel(
        result.x[:-1],
        result.x[-1],
        X_all,
        kernel,
        order,
        target_scale=PM_ONE,
        converged=result.converged,
        tag="laplacian_svm",
    )
