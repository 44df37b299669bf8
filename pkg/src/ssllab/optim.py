"""Shared numerical machinery.

Gradient descent with a backtracking Armijo line search, its projected
variant for box constraints, pivoted linear solves, and a finite-difference
gradient checker.  Every trainer in the package funnels through these
routines so numerical behaviour is controlled in one place.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
import scipy.linalg

from .exceptions import NumericalError, ShapeError, SingularMatrixError

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass(frozen=True)
class OptimSettings:
    """Settings for `minimize` and `minimize_box`.

    grad_tol is the infinity norm of the (projected) gradient below which
    the run counts as converged.  initial_step is the step size tried first
    on every iteration; backtracking multiplies it by backtrack_factor until
    the Armijo sufficient-decrease condition holds.
    """

    max_iter: int = 1000
    grad_tol: float = 1e-7
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    sufficient_decrease: float = 1e-4

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.sufficient_decrease <= 0:
            raise ValueError("sufficient_decrease must be positive")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def _check_finite(value: float, grad: np.ndarray, iteration: int) -> None:
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NumericalError(
            f"non-finite objective or gradient at iterate {iteration}"
        )


def minimize(fun: Objective, x0, settings: OptimSettings | None = None) -> MinimizeResult:
    """Unconstrained gradient descent with backtracking Armijo line search.

    `fun` maps a vector to (value, gradient).  Accepted steps decrease the
    objective monotonically; convergence is declared when the gradient
    infinity norm drops to settings.grad_tol.
    """
    s = settings or OptimSettings()
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun(x)
    _check_finite(f, g, 0)
    iterations = 0
    for iterations in range(1, s.max_iter + 1):
        if np.max(np.abs(g)) <= s.grad_tol:
            return MinimizeResult(x, f, iterations - 1, True)
        step = s.initial_step
        gg = float(g @ g)
        while True:
            x_new = x - step * g
            f_new, g_new = fun(x_new)
            if (
                np.isfinite(f_new)
                and np.all(np.isfinite(g_new))
                and f_new <= f - s.sufficient_decrease * step * gg
            ):
                break
            step *= s.backtrack_factor
            if step < 1e-20:
                # no step gives sufficient decrease: flat to machine precision
                return MinimizeResult(x, f, iterations, bool(np.max(np.abs(g)) <= s.grad_tol))
        x, f, g = x_new, f_new, g_new
    return MinimizeResult(x, f, iterations, bool(np.max(np.abs(g)) <= s.grad_tol))


def minimize_box(
    fun: Objective,
    x0,
    lower,
    upper,
    settings: OptimSettings | None = None,
) -> MinimizeResult:
    """Projected gradient descent over the box [lower, upper].

    Projection is elementwise clamping; convergence is measured by the
    projected gradient x - clip(x - grad, lower, upper) in infinity norm.
    """
    s = settings or OptimSettings()
    x = np.asarray(x0, dtype=float).copy()
    lo = np.broadcast_to(np.asarray(lower, dtype=float), x.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), x.shape)
    if np.any(lo > hi):
        raise ValueError("inconsistent bounds: lower > upper")
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError("x0 violates the box constraints")

    f, g = fun(x)
    _check_finite(f, g, 0)
    iterations = 0
    for iterations in range(1, s.max_iter + 1):
        projected_grad = x - np.clip(x - g, lo, hi)
        if np.max(np.abs(projected_grad)) <= s.grad_tol:
            return MinimizeResult(x, f, iterations - 1, True)
        step = s.initial_step
        while True:
            x_new = np.clip(x - step * g, lo, hi)
            f_new, g_new = fun(x_new)
            decrease = s.sufficient_decrease * float(g @ (x - x_new))
            if (
                np.isfinite(f_new)
                and np.all(np.isfinite(g_new))
                and f_new <= f - decrease
            ):
                break
            step *= s.backtrack_factor
            if step < 1e-20:
                pg = x - np.clip(x - g, lo, hi)
                return MinimizeResult(x, f, iterations, bool(np.max(np.abs(pg)) <= s.grad_tol))
        x, f, g = x_new, f_new, g_new
    projected_grad = x - np.clip(x - g, lo, hi)
    return MinimizeResult(x, f, iterations, bool(np.max(np.abs(projected_grad)) <= s.grad_tol))


def solve_linear(A, B) -> np.ndarray:
    """Solve A X = B with a pivoted LU factorization.

    Raises SingularMatrixError when the factorization exposes a pivot that
    is zero to working precision, with a hint to regularize.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"A must be square, got shape {A.shape}")
    if B.shape[0] != A.shape[0]:
        raise ShapeError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
    with warnings.catch_warnings():
        # zero pivots are reported through SingularMatrixError below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    scale = diag.max() if diag.size else 0.0
    if scale == 0.0 or diag.min() <= scale * A.shape[0] * np.finfo(float).eps:
        raise SingularMatrixError(
            "matrix is singular to working precision; "
            "consider adding a positive regularization term"
        )
    return scipy.linalg.lu_solve((lu, piv), B)


def solve_with_jitter(A, B) -> np.ndarray:
    """solve_linear with the package's ridge-jitter retry policy.

    When the factorization fails, 1e-10 * trace(A)/dim is added to the
    diagonal and the solve is retried exactly once.  Keeping the policy here
    makes closed-form estimators reproducible across the package.
    """
    A = np.asarray(A, dtype=float)
    try:
        return solve_linear(A, B)
    except SingularMatrixError:
        jitter = 1e-10 * np.trace(A) / A.shape[0]
        if jitter <= 0:
            raise
        return solve_linear(A + jitter * np.eye(A.shape[0]), B)


def check_gradient(fun: Objective, x, h: float = 1e-6) -> float:
    """Max relative discrepancy between analytic and central-difference gradients."""
    x = np.asarray(x, dtype=float)
    _, g_analytic = fun(x)
    g_numeric = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        f_plus, _ = fun(x + e)
        f_minus, _ = fun(x - e)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericalError(f"non-finite objective near coordinate {i}")
        g_numeric[i] = (f_plus - f_minus) / (2.0 * h)
    return float(np.max(np.abs(g_analytic - g_numeric) / (1.0 + np.abs(g_numeric))))
