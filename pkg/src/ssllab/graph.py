"""Similarity graphs, graph Laplacians, and harmonic energy minimization.

Vertices are data points; edge weights are RBF-valued in squared Euclidean
distance.  Harmonic energy minimization fixes the labeled values and solves
for unlabeled values so each vertex equals the weighted average of its
neighbours, which propagates labels through dense regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConnectivityError, ShapeError, SingularMatrixError
from .optim import solve_linear


@dataclass(frozen=True)
class GraphConfig:
    """How to build the similarity graph.

    adjacency 'full_rbf' keeps all pairs; 'knn' keeps the k nearest per row
    (excluding self) and then symmetrizes with max(w_ij, w_ji).  Weights are
    always exp(-weight_sigma * ||x_i - x_j||^2).
    """

    adjacency: str = "knn"
    k: int = 10
    weight_sigma: float = 1.0
    symmetrize: bool = True
    normalized_laplacian: bool = False

    def __post_init__(self):
        if self.adjacency not in ("full_rbf", "knn"):
            raise ValueError(f"unknown adjacency {self.adjacency!r}")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not self.weight_sigma > 0:
            raise ValueError("weight_sigma must be positive")


@dataclass
class Graph:
    W: np.ndarray
    degrees: np.ndarray
    laplacian: np.ndarray
    config: GraphConfig


def median_heuristic_sigma(X) -> float:
    """1 / (2 median^2) of the nonzero pairwise Euclidean distances."""
    X = np.asarray(X, dtype=float)
    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(X * X, axis=1)[None, :]
        - 2.0 * (X @ X.T)
    )
    np.maximum(sq, 0.0, out=sq)
    dists = np.sqrt(sq[np.triu_indices_from(sq, k=1)])
    dists = dists[dists > 0]
    if dists.size == 0:
        raise ValueError("all points coincide; no distance scale")
    med = float(np.median(dists))
    return 1.0 / (2.0 * med * med)


def build_graph(X, cfg: GraphConfig) -> Graph:
    """Build the weight matrix, degrees and Laplacian for points X."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ShapeError("need at least 2 points to build a graph")
    if cfg.adjacency == "knn" and cfg.k >= n:
        raise ValueError(f"k={cfg.k} must be smaller than n={n}")

    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(X * X, axis=1)[None, :]
        - 2.0 * (X @ X.T)
    )
    np.maximum(sq, 0.0, out=sq)
    W = np.exp(-cfg.weight_sigma * sq)
    np.fill_diagonal(W, 0.0)

    if cfg.adjacency == "knn":
        keep = np.zeros_like(W, dtype=bool)
        for i in range(n):
            order = np.argsort(sq[i])
            neighbours = [j for j in order if j != i][: cfg.k]
            keep[i, neighbours] = True
        W = np.where(keep, W, 0.0)
        if cfg.symmetrize:
            W = np.maximum(W, W.T)

    degrees = W.sum(axis=1)
    isolated = np.nonzero(degrees <= 0.0)[0]
    if isolated.size:
        raise ConnectivityError(f"vertex {int(isolated[0])} has zero degree")

    if cfg.normalized_laplacian:
        inv_sqrt = 1.0 / np.sqrt(degrees)
        laplacian = np.eye(n) - (inv_sqrt[:, None] * W) * inv_sqrt[None, :]
    else:
        laplacian = np.diag(degrees) - W
    return Graph(W=W, degrees=degrees, laplacian=laplacian, config=cfg)


def harmonic_energy_min(g: Graph, labeled_idx, f_l, unlabeled_idx) -> np.ndarray:
    """Harmonic extension of the labeled values to the unlabeled vertices.

    Solves L_uu f_u = W_ul f_l, so each unlabeled value is the weighted
    average of its neighbours (maximum principle: values stay inside the
    labeled range).  Predicted class for 0/1 targets is the second class
    when f_u > 0.5, ties to the first.
    """
    labeled_idx = np.asarray(labeled_idx, dtype=int)
    unlabeled_idx = np.asarray(unlabeled_idx, dtype=int)
    f_l = np.asarray(f_l, dtype=float)
    n = g.W.shape[0]
    if labeled_idx.size == 0:
        raise ConnectivityError("need at least one labeled vertex")
    if f_l.shape[0] != labeled_idx.shape[0]:
        raise ShapeError("f_l length must equal labeled_idx length")
    all_idx = np.concatenate([labeled_idx, unlabeled_idx])
    if np.unique(all_idx).size != n or all_idx.size != n:
        raise ValueError("labeled and unlabeled indices must partition vertices")

    D = np.diag(g.degrees)
    L = D - g.W
    L_uu = L[np.ix_(unlabeled_idx, unlabeled_idx)]
    W_ul = g.W[np.ix_(unlabeled_idx, labeled_idx)]
    try:
        f_u = solve_linear(L_uu, W_ul @ f_l)
    except SingularMatrixError as exc:
        raise ConnectivityError(
            "an unlabeled component is unreachable from any labeled vertex"
        ) from exc
    return f_u
