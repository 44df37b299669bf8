"""Decision-boundary grids and figure rendering.

Figures are rendered with matplotlib and written as SVG.  Output is kept
byte-reproducible: the SVG date metadata is suppressed and the hash salt
pinned, so repeated runs with the same inputs produce identical files.
The zero-level contour is extracted by marching squares on the decision
grid, which also gives tests line segments to assert against.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import Dataset, TrainedModel  # noqa: E402
from .exceptions import ShapeError  # noqa: E402

_SVG_RC = {"svg.hashsalt": "ssllab", "figure.max_open_warning": 0}
_CLASS_COLORS = ("#d55e00", "#0072b2")


def decision_grid(model: TrainedModel, features: np.ndarray, grid: int = 100, pad: float = 0.1):
    """Decision values on a grid x grid lattice over the padded bounding box.

    Returns (xs, ys, Z) with Z[i, j] = decision value at (xs[j], ys[i]).
    """
    if features.shape[1] != 2:
        raise ShapeError("decision grids need exactly 2 feature columns")
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = hi - lo
    span[span == 0] = 1.0
    lo = lo - pad * span
    hi = hi + pad * span
    xs = np.linspace(lo[0], hi[0], grid)
    ys = np.linspace(lo[1], hi[1], grid)
    XX, YY = np.meshgrid(xs, ys)
    pts = np.column_stack([XX.ravel(), YY.ravel()])
    Z = np.asarray(model.decision_values(pts)).reshape(grid, grid)
    return xs, ys, Z


def marching_squares(xs, ys, Z, level: float = 0.0) -> list:
    """Level-set segments ((x1, y1), (x2, y2)) of Z by marching squares.

    Cell corners are classified against `level`; crossing edges are
    interpolated linearly.  The two ambiguous saddle cases are split by the
    cell-center average.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    Z = np.asarray(Z, dtype=float)
    segments = []

    def interp(pa, va, pb, vb):
        t = 0.5 if vb == va else (level - va) / (vb - va)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    for i in range(Z.shape[0] - 1):
        for j in range(Z.shape[1] - 1):
            corners = [
                ((xs[j], ys[i]), Z[i, j]),
                ((xs[j + 1], ys[i]), Z[i, j + 1]),
                ((xs[j + 1], ys[i + 1]), Z[i + 1, j + 1]),
                ((xs[j], ys[i + 1]), Z[i + 1, j]),
            ]
            index = sum(1 << k for k, (_, v) in enumerate(corners) if v > level)
            if index in (0, 15):
                continue
            edges = {
                "bottom": interp(corners[0][0], corners[0][1], corners[1][0], corners[1][1]),
                "right": interp(corners[1][0], corners[1][1], corners[2][0], corners[2][1]),
                "top": interp(corners[3][0], corners[3][1], corners[2][0], corners[2][1]),
                "left": interp(corners[0][0], corners[0][1], corners[3][0], corners[3][1]),
            }
            lookup = {
                1: [("left", "bottom")],
                2: [("bottom", "right")],
                3: [("left", "right")],
                4: [("right", "top")],
                6: [("bottom", "top")],
                7: [("left", "top")],
                8: [("top", "left")],
                9: [("bottom", "top")],
                11: [("right", "top")],
                12: [("left", "right")],
                13: [("bottom", "right")],
                14: [("left", "bottom")],
            }
            if index in (5, 10):
                center = 0.25 * sum(v for _, v in corners)
                if index == 5:
                    pairs = (
                        [("left", "top"), ("bottom", "right")]
                        if center > level
                        else [("left", "bottom"), ("right", "top")]
                    )
                else:
                    pairs = (
                        [("left", "bottom"), ("right", "top")]
                        if center > level
                        else [("left", "top"), ("bottom", "right")]
                    )
            else:
                pairs = lookup[index]
            for a, b in pairs:
                segments.append((edges[a], edges[b]))
    return segments


def save_figure(fig, path) -> None:
    """Write an SVG without timestamps; repeated runs are byte-identical."""
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def scatter_dataset(ax, d: Dataset, labeled_size: float = 60.0, point_size: float = 12.0):
    """Unlabeled points gray, labeled points colored by class and enlarged."""
    mask = d.labeled_mask
    if (~mask).any():
        ax.scatter(
            d.features[~mask, 0],
            d.features[~mask, 1],
            s=point_size,
            c="#999999",
            linewidths=0,
            label="unlabeled",
        )
    for c, color in zip(d.class_order, _CLASS_COLORS):
        idx = [i for i in range(d.n) if d.labels[i] == c]
        if idx:
            ax.scatter(
                d.features[idx, 0],
                d.features[idx, 1],
                s=labeled_size,
                c=color,
                edgecolors="black",
                linewidths=0.5,
                label=str(c),
            )


def boundary_figure(
    model: TrainedModel,
    d: Dataset,
    grid: int = 100,
    title: Optional[str] = None,
    predictions: Optional[Sequence[str]] = None,
):
    """Scatter of the data plus the model's zero-level decision contour.

    When `predictions` is given (one class per row of d), points are tinted
    by the predicted class instead of gray, which is how the transductive
    figures mark propagated labels.
    """
    xs, ys, Z = decision_grid(model, d.features, grid=grid)
    segments = marching_squares(xs, ys, Z, level=0.0)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    if predictions is not None:
        for c, color in zip(d.class_order, _CLASS_COLORS):
            idx = [i for i in range(d.n) if predictions[i] == c]
            if idx:
                ax.scatter(
                    d.features[idx, 0], d.features[idx, 1], s=12, c=color, linewidths=0
                )
        mask = d.labeled_mask
        if mask.any():
            scatter_dataset(ax, d.subset(np.nonzero(mask)[0]), point_size=0)
    else:
        scatter_dataset(ax, d)
    for (x1, y1), (x2, y2) in segments:
        ax.plot([x1, x2], [y1, y2], color="black", linewidth=1.2)
    if title:
        ax.set_title(title)
    ax.set_xlabel("X1")
    ax.set_ylabel("X2")
    fig.tight_layout()
    return fig


def transductive_figure(d: Dataset, predictions: Sequence[str], title: Optional[str] = None):
    """Scatter with every point colored by its (predicted) class; labeled
    points drawn larger, matching the harmonic-propagation figures."""
    fig, ax = plt.subplots(figsize=(5, 4.2))
    for c, color in zip(d.class_order, _CLASS_COLORS):
        idx = [i for i in range(d.n) if predictions[i] == c]
        if idx:
            ax.scatter(
                d.features[idx, 0], d.features[idx, 1], s=12, c=color, linewidths=0
            )
    mask = d.labeled_mask
    labeled_idx = np.nonzero(mask)[0]
    for c, color in zip(d.class_order, _CLASS_COLORS):
        idx = [i for i in labeled_idx if d.labels[i] == c]
        if idx:
            ax.scatter(
                d.features[idx, 0],
                d.features[idx, 1],
                s=140,
                c=color,
                edgecolors="black",
                linewidths=1.0,
            )
    if title:
        ax.set_title(title)
    ax.set_xlabel("X1")
    ax.set_ylabel("X2")
    fig.tight_layout()
    return fig


def learning_curve_figure(result, dataset: str, measure: str, sizes, title=None):
    """Mean measure vs unlabeled-pool size, one line per classifier."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    classifiers = sorted({r.classifier for r in result.records if r.dataset == dataset})
    for name in classifiers:
        means = []
        for size in sizes:
            vals = np.asarray(
                [
                    r.value
                    for r in result.records
                    if r.dataset == dataset
                    and r.classifier == name
                    and r.measure == measure
                    and r.size == size
                    and np.isfinite(r.value)
                ]
            )
            means.append(vals.mean() if vals.size else np.nan)
        ax.plot(sizes, means, marker="o", label=name)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("unlabeled examples")
    ax.set_ylabel(measure)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig
