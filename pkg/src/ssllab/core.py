"""Data model shared by all classifiers and the experiment harness.

A Dataset is a dense feature matrix with per-row optional class labels
(missing label = unlabeled point).  Binary classification only: the class
order fixes the 0/1 and -1/+1 encodings, the 0.5 / 0 decision thresholds,
and the tie rule (a decision value of exactly 0 goes to the first class).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import (
    BoundaryError,
    EncodingError,
    ShapeError,
)
from .optim import solve_with_jitter

ZERO_ONE = "zero_one"
PM_ONE = "pm_one"


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-d feature matrix, got ndim={X.ndim}")
    return X


class Dataset:
    """Feature matrix plus optional labels, with a fixed binary class order."""

    def __init__(self, features, labels: Sequence[Optional[str]], class_order=None):
        self.features = _as_matrix(features)
        self.labels = list(labels)
        if len(self.labels) != self.features.shape[0]:
            raise ShapeError(
                f"{len(self.labels)} labels for {self.features.shape[0]} rows"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValueError("feature values must be finite")
        present = [y for y in self.labels if y is not None]
        if class_order is None:
            seen: list[str] = []
            for y in present:
                if y not in seen:
                    seen.append(y)
            class_order = seen
        self.class_order = tuple(class_order)
        if len(self.class_order) != 2:
            raise ValueError(
                f"need exactly 2 classes, got {list(self.class_order)}"
            )
        for y in present:
            if y not in self.class_order:
                raise EncodingError(f"unknown class {y!r}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        return np.array([y is not None for y in self.labels], dtype=bool)

    @property
    def n_labeled(self) -> int:
        return int(self.labeled_mask.sum())

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            self.features[indices],
            [self.labels[i] for i in indices],
            class_order=self.class_order,
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.class_order == other.class_order
            and self.labels == other.labels
            and np.array_equal(self.features, other.features)
        )

    def __repr__(self) -> str:
        return (
            f"Dataset(n={self.n}, d={self.d}, labeled={self.n_labeled}, "
            f"classes={list(self.class_order)})"
        )


@dataclass(frozen=True)
class ClassEncoding:
    """Bijection between the two class names and numeric targets."""

    class_order: tuple

    def __post_init__(self):
        if len(self.class_order) != 2:
            raise ValueError("class_order must have exactly 2 entries")

    def encode(self, labels: Sequence[str], target: str = ZERO_ONE) -> np.ndarray:
        values = {ZERO_ONE: (0.0, 1.0), PM_ONE: (-1.0, 1.0)}[target]
        out = np.empty(len(labels), dtype=float)
        for i, y in enumerate(labels):
            if y == self.class_order[0]:
                out[i] = values[0]
            elif y == self.class_order[1]:
                out[i] = values[1]
            else:
                raise EncodingError(f"unknown class {y!r}")
        return out

    def decode(self, values, target: str = ZERO_ONE) -> list:
        midpoint = {ZERO_ONE: 0.5, PM_ONE: 0.0}[target]
        return [
            self.class_order[1] if v > midpoint else self.class_order[0]
            for v in np.asarray(values, dtype=float)
        ]


def encode_labels(labels, encoding: ClassEncoding, target: str = ZERO_ONE) -> np.ndarray:
    return encoding.encode(labels, target)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters.

    The rbf convention is k(x, z) = exp(-sigma * ||x - z||^2), chosen so a
    bandwidth like sigma=0.05 acts directly on squared Euclidean distance.
    """

    family: str = "linear"
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "rbf" and not self.sigma > 0:
            raise ValueError("rbf kernel requires sigma > 0")


def gram_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    """Gram matrix with entry (i, j) = k(A_i, B_j)."""
    A = _as_matrix(A)
    B = _as_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise ShapeError(
            f"column mismatch: {A.shape[1]} vs {B.shape[1]}"
        )
    if spec.family == "linear":
        return A @ B.T
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.sigma * sq)


def split_labeled_unlabeled(d: Dataset):
    """Partition rows by label presence, preserving row order.

    Returns (X_l, y_l, X_u, unlabeled_row_indices).
    """
    mask = d.labeled_mask
    X_l = d.features[mask]
    y_l = [y for y in d.labels if y is not None]
    X_u = d.features[~mask]
    unlabeled_idx = np.nonzero(~mask)[0]
    return X_l, y_l, X_u, unlabeled_idx


@dataclass(frozen=True)
class BoundaryLine:
    """A 2-d decision boundary: x2 = intercept + slope * x1, or x1 = intercept."""

    intercept: float
    slope: float = 0.0
    vertical: bool = False

    def x2_at(self, x1: float) -> float:
        if self.vertical:
            raise BoundaryError("vertical line has no x2(x1) form")
        return self.intercept + self.slope * x1


def _line_from_weights(w: np.ndarray, offset: float) -> BoundaryLine:
    """Line {x : w . x + offset = 0} for a 2-d weight vector."""
    if w.shape[0] != 2:
        raise BoundaryError("line coefficients require exactly 2 features")
    w1, w2 = float(w[0]), float(w[1])
    if w1 == 0.0 and w2 == 0.0:
        raise BoundaryError("degenerate boundary: zero weight vector")
    if w2 == 0.0:
        return BoundaryLine(intercept=-offset / w1, vertical=True)
    return BoundaryLine(intercept=-offset / w2, slope=-w1 / w2)


class TrainedModel:
    """Common model surface: predict, decision values, loss, line coefficients.

    Subclasses implement decision_values with the sign convention
    value > 0  <=>  predict = class_order[1]; a value of exactly 0 predicts
    class_order[0] so tie-breaking is deterministic.
    """

    tag = "model"

    def __init__(self, class_order, responsibilities: Optional[np.ndarray] = None):
        self.class_order = tuple(class_order)
        self.responsibilities = None
        if responsibilities is not None:
            r = np.asarray(responsibilities, dtype=float)
            if r.size and (r.min() < 0.0 or r.max() > 1.0):
                raise ValueError("responsibilities must lie in [0, 1]")
            self.responsibilities = r

    @property
    def encoding(self) -> ClassEncoding:
        return ClassEncoding(self.class_order)

    def decision_values(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> list:
        values = self.decision_values(X)
        return [
            self.class_order[1] if v > 0.0 else self.class_order[0] for v in values
        ]

    def loss(self, X, y) -> np.ndarray:
        """Per-example surrogate loss for fully labeled (X, y)."""
        raise NotImplementedError

    def line_coefficients(self) -> BoundaryLine:
        raise BoundaryError(f"{self.tag} has no linear 2-d boundary")

    def _check_dim(self, X: np.ndarray, expected: int) -> None:
        if X.shape[1] != expected:
            raise ShapeError(
                f"model trained on {expected} features, got {X.shape[1]}"
            )


class LinearModel(TrainedModel):
    """w . x + b, either a 0/1-target regression (threshold 0.5) or log-odds."""

    def __init__(
        self,
        weights,
        intercept: float,
        class_order,
        link: str = "squared",
        converged: bool = True,
        responsibilities=None,
    ):
        super().__init__(class_order, responsibilities)
        self.weights = np.asarray(weights, dtype=float)
        self.intercept = float(intercept)
        if link not in ("squared", "logistic"):
            raise ValueError(f"unknown link {link!r}")
        self.link = link
        self.converged = converged
        self.tag = "least_squares" if link == "squared" else "logistic"

    def raw_output(self, X) -> np.ndarray:
        X = _as_matrix(X)
        self._check_dim(X, self.weights.shape[0])
        return X @ self.weights + self.intercept

    def decision_values(self, X) -> np.ndarray:
        raw = self.raw_output(X)
        return raw - 0.5 if self.link == "squared" else raw

    def loss(self, X, y) -> np.ndarray:
        raw = self.raw_output(X)
        if self.link == "squared":
            targets = self.encoding.encode(y, ZERO_ONE)
            return (raw - targets) ** 2
        targets = self.encoding.encode(y, PM_ONE)
        # numerically stable log(1 + exp(-t)) with t = y * raw
        t = targets * raw
        return np.logaddexp(0.0, -t)

    def line_coefficients(self) -> BoundaryLine:
        threshold = 0.5 if self.link == "squared" else 0.0
        return _line_from_weights(self.weights, self.intercept - threshold)


class KernelModel(TrainedModel):
    """Representer-form model f(x) = sum_i alpha_i k(x_i, x) + bias."""

    def __init__(
        self,
        alpha,
        bias: float,
        support_points,
        kernel: KernelSpec,
        class_order,
        target_scale: str = PM_ONE,
        converged: bool = True,
        responsibilities=None,
        tag: str = "kernel_model",
    ):
        super().__init__(class_order, responsibilities)
        self.alpha = np.asarray(alpha, dtype=float)
        self.bias = float(bias)
        self.support_points = _as_matrix(support_points)
        if self.alpha.shape[0] != self.support_points.shape[0]:
            raise ShapeError("alpha length must equal support point count")
        self.kernel = kernel
        if target_scale not in (ZERO_ONE, PM_ONE):
            raise ValueError(f"unknown target scale {target_scale!r}")
        self.target_scale = target_scale
        self.converged = converged
        self.tag = tag

    def raw_output(self, X) -> np.ndarray:
        X = _as_matrix(X)
        self._check_dim(X, self.support_points.shape[1])
        K = gram_matrix(self.kernel, X, self.support_points)
        return K @ self.alpha + self.bias

    def decision_values(self, X) -> np.ndarray:
        raw = self.raw_output(X)
        return raw - 0.5 if self.target_scale == ZERO_ONE else raw

    def loss(self, X, y) -> np.ndarray:
        raw = self.raw_output(X)
        if self.target_scale == ZERO_ONE:
            targets = self.encoding.encode(y, ZERO_ONE)
            return (raw - targets) ** 2
        targets = self.encoding.encode(y, PM_ONE)
        margins = 1.0 - targets * raw
        return np.maximum(margins, 0.0) ** 2

    def line_coefficients(self) -> BoundaryLine:
        if self.kernel.family != "linear":
            raise BoundaryError(
                f"{self.tag} with {self.kernel.family} kernel is not linear"
            )
        w = self.support_points.T @ self.alpha
        threshold = 0.5 if self.target_scale == ZERO_ONE else 0.0
        return _line_from_weights(w, self.bias - threshold)


class GaussianModel(TrainedModel):
    """Two Gaussian class conditionals with a shared covariance.

    Nearest-mean uses a spherical sigma^2 I covariance, LDA a full pooled
    matrix; both predict by the larger log pi_c + log N(x; mu_c, Sigma).
    The per-example loss is the negative log joint likelihood
    -log(pi_c N(x; mu_c, Sigma)), which may take any real value.
    """

    def __init__(
        self,
        priors,
        means,
        covariance,
        class_order,
        spherical: bool = False,
        variance_floored: bool = False,
        responsibilities=None,
    ):
        super().__init__(class_order, responsibilities)
        self.priors = np.asarray(priors, dtype=float)
        self.means = _as_matrix(means)
        self.covariance = np.asarray(covariance, dtype=float)
        if self.priors.shape != (2,) or self.means.shape[0] != 2:
            raise ShapeError("GaussianModel needs 2 priors and 2 mean rows")
        if abs(self.priors.sum() - 1.0) > 1e-12:
            raise ValueError("priors must sum to 1")
        self.spherical = spherical
        self.variance_floored = variance_floored
        self.tag = "nearest_mean" if spherical else "lda"

    def _log_densities(self, X: np.ndarray) -> np.ndarray:
        """(n, 2) matrix of log N(x; mu_c, Sigma)."""
        d = self.means.shape[1]
        sign, logdet = np.linalg.slogdet(self.covariance)
        if sign <= 0:
            raise NumericalError("covariance is not positive definite")
        out = np.empty((X.shape[0], 2))
        for c in range(2):
            diff = X - self.means[c]
            sol = solve_with_jitter(self.covariance, diff.T).T
            maha = np.sum(diff * sol, axis=1)
            out[:, c] = -0.5 * (d * math.log(2.0 * math.pi) + logdet + maha)
        return out

    def decision_values(self, X) -> np.ndarray:
        X = _as_matrix(X)
        self._check_dim(X, self.means.shape[1])
        log_dens = self._log_densities(X)
        log_post = log_dens + np.log(self.priors)[None, :]
        return log_post[:, 1] - log_post[:, 0]

    def posterior(self, X) -> np.ndarray:
        """P(class_order[1] | x) under the fitted mixture."""
        values = self.decision_values(X)
        return 1.0 / (1.0 + np.exp(-values))

    def loss(self, X, y) -> np.ndarray:
        X = _as_matrix(X)
        self._check_dim(X, self.means.shape[1])
        idx = self.encoding.encode(y, ZERO_ONE).astype(int)
        log_dens = self._log_densities(X)
        log_joint = log_dens[np.arange(X.shape[0]), idx] + np.log(self.priors[idx])
        return -log_joint

    def line_coefficients(self) -> BoundaryLine:
        if self.means.shape[1] != 2:
            raise BoundaryError("line coefficients require exactly 2 features")
        delta = self.means[1] - self.means[0]
        w = solve_with_jitter(self.covariance, delta)
        mid = 0.5 * (self.means[0] + self.means[1])
        offset = math.log(self.priors[1] / self.priors[0]) - float(mid @ w)
        return _line_from_weights(np.asarray(w), offset)
