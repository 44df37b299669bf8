"""One-shot replications of the package's reference experiments.

Each target writes delimited results plus SVG figures into an output
directory and returns a summary with pass/fail checks mirroring the
acceptance suite.  Replication targets default to reduced repeat counts;
pass `repeats` to run at full scale.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Dataset, KernelSpec
from .datagen import (
    generate_crescent_moon,
    generate_parallel_planes,
    generate_spirals,
    generate_two_class_gaussian,
)
from .evaluation import (
    ExperimentResult,
    TrialPlan,
    add_missing_labels_mar,
    learning_curve_ssl,
    measure_error,
    measure_loss_all,
    measure_loss_test,
    supervised_trainer,
)
from .graph import GraphConfig, build_graph, harmonic_energy_min, median_heuristic_sigma
from .plotting import (
    boundary_figure,
    decision_grid,
    learning_curve_figure,
    marching_squares,
    save_figure,
    scatter_dataset,
    transductive_figure,
)
from .semi import (
    LapParams,
    self_learning,
    train_erlr,
    train_icls,
    train_icls_projection,
    train_laplacian_svm,
)
from .supervised import train_least_squares, train_logistic, train_svm

# Ridge used by the surrogate-loss replication (supervised baseline,
# self-learning base, and plain ICLS inner fits).  At prob=0.995 the
# labeled set has ~5 points, and unregularized 5-point fits have a heavy
# loss tail that would drown every comparison; the projection variant keeps
# its lambda at 0 because its improvement guarantee requires exact all-data
# normal equations.
LOSSES_RIDGE = 2.0

FIG2_SIZES = tuple(2**k for k in range(1, 11))


def derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


@dataclass
class ReplicationSummary:
    target: str
    files: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    lines: list = field(default_factory=list)

    def add_check(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append((name, bool(passed), detail))

    @property
    def all_passed(self) -> bool:
        return all(p for _, p, _ in self.checks)

    def render(self) -> str:
        out = list(self.lines)
        for name, passed, detail in self.checks:
            out.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return "\n".join(out)


def _fig2_classifiers(ridge: float = 0.0):
    def supervised(X_l, y_l, X_u):
        return train_least_squares(X_l, y_l, ridge)

    def self_learn(X_l, y_l, X_u):
        return self_learning(
            lambda X, y: train_least_squares(X, y, ridge), X_l, y_l, X_u
        )

    return {
        "supervised-lsc": supervised_trainer(supervised),
        "self-learning-lsc": self_learn,
    }


def run_fig2(
    out_dir: str,
    repeats: int = 20,
    seed: int = 1,
    jobs: int = 1,
    n: int = 2000,
) -> ReplicationSummary:
    """Self-learning learning curves on the expected and non-expected Gaussians."""
    os.makedirs(out_dir, exist_ok=True)
    summary = ReplicationSummary("fig2")
    datasets = {
        "two-gaussian-expected": generate_two_class_gaussian(
            n, 2, expected=True, seed=derive_seed(seed, 0)
        ),
        "two-gaussian-non-expected": generate_two_class_gaussian(
            n, 2, expected=False, seed=derive_seed(seed, 1)
        ),
    }
    measures = {"Error": measure_error, "Loss": measure_loss_test}
    combined = ExperimentResult()
    for index, (name, data) in enumerate(datasets.items()):
        plan = TrialPlan(
            base_seed=seed,
            repeats=repeats,
            n_l=10,
            sizes=FIG2_SIZES,
            classifiers=_fig2_classifiers(),
            measures=measures,
        )
        result = learning_curve_ssl(data, plan, dataset_name=name, dataset_index=index, jobs=jobs)
        combined.extend(result)
        fig = learning_curve_figure(result, name, "Error", FIG2_SIZES, title=name)
        fig_path = os.path.join(out_dir, f"fig2_{'expected' if index == 0 else 'non_expected'}.svg")
        save_figure(fig, fig_path)
        summary.files.append(fig_path)
    csv_path = os.path.join(out_dir, "fig2_results.csv")
    combined.sorted().to_csv(csv_path)
    summary.files.append(csv_path)

    def mean_at(dataset, classifier, size):
        vals = np.asarray(
            [
                r.value
                for r in combined.records
                if r.dataset == dataset
                and r.classifier == classifier
                and r.measure == "Error"
                and r.size == size
                and np.isfinite(r.value)
            ]
        )
        return float(vals.mean())

    exp = "two-gaussian-expected"
    alt = "two-gaussian-non-expected"
    sup_exp = mean_at(exp, "supervised-lsc", max(FIG2_SIZES))
    self_exp = mean_at(exp, "self-learning-lsc", max(FIG2_SIZES))
    summary.add_check(
        "fig2-left: self-learning helps on the expected Gaussian",
        sup_exp - self_exp >= 0.005,
        f"supervised {sup_exp:.4f} vs self-learning {self_exp:.4f} at size {max(FIG2_SIZES)}",
    )
    sup_alt = mean_at(alt, "supervised-lsc", max(FIG2_SIZES))
    self_alt = mean_at(alt, "self-learning-lsc", max(FIG2_SIZES))
    self_alt_small = mean_at(alt, "self-learning-lsc", min(FIG2_SIZES))
    summary.add_check(
        "fig2-right: self-learning deteriorates on the non-expected Gaussian",
        self_alt - sup_alt >= 0.01 and self_alt > self_alt_small,
        f"self {self_alt:.4f} vs supervised {sup_alt:.4f}; self at size 2 {self_alt_small:.4f}",
    )
    return summary


def _one_label_per_class(d: Dataset, pick: Callable[[np.ndarray], float]) -> Dataset:
    """Keep one label per class (the row minimizing `pick`), hide the rest."""
    keep = []
    for c in d.class_order:
        idx = [i for i in range(d.n) if d.labels[i] == c]
        scores = [pick(d.features[i]) for i in idx]
        keep.append(idx[int(np.argmin(scores))])
    labels = [d.labels[i] if i in keep else None for i in range(d.n)]
    return Dataset(d.features, labels, class_order=d.class_order)


def _harmonic_predict(d: Dataset, k: int = 10):
    """Harmonic energy minimization on a knn graph with the median heuristic."""
    cfg = GraphConfig(adjacency="knn", k=k, weight_sigma=median_heuristic_sigma(d.features))
    g = build_graph(d.features, cfg)
    mask = d.labeled_mask
    labeled_idx = np.nonzero(mask)[0]
    unlabeled_idx = np.nonzero(~mask)[0]
    f_l = np.asarray(
        [1.0 if d.labels[i] == d.class_order[1] else 0.0 for i in labeled_idx]
    )
    f_u = harmonic_energy_min(g, labeled_idx, f_l, unlabeled_idx)
    predictions = list(d.labels)
    for pos, i in enumerate(unlabeled_idx):
        predictions[i] = d.class_order[1] if f_u[pos] > 0.5 else d.class_order[0]
    return predictions, unlabeled_idx


def run_fig3(out_dir: str, seed: int = 1, n_seeds: int = 10) -> ReplicationSummary:
    """Harmonic label propagation on the parallel planes and spirals datasets."""
    os.makedirs(out_dir, exist_ok=True)
    summary = ReplicationSummary("fig3")
    configs = {
        "parallel-planes": dict(threshold=0.99, min_pass=8),
        "spirals": dict(threshold=0.95, min_pass=8),
    }
    rows = ["dataset,seed,transductive_accuracy"]
    for name, cfg in configs.items():
        passes = 0
        for s in range(n_seeds):
            ds_seed = derive_seed(seed, hash(name) % 2**31, s)
            if name == "parallel-planes":
                full = generate_parallel_planes(100, 0.1, seed=ds_seed)
                masked = _one_label_per_class(full, lambda x: x[0])
            else:
                full = generate_spirals(100, 0.025, seed=ds_seed)
                masked = _one_label_per_class(full, lambda x: float(x @ x))
            predictions, unlabeled_idx = _harmonic_predict(masked)
            correct = [predictions[i] == full.labels[i] for i in unlabeled_idx]
            acc = float(np.mean(correct))
            rows.append(f"{name},{s},{acc!r}")
            passes += acc >= cfg["threshold"]
            if s == 0:
                fig = transductive_figure(masked, predictions, title=name)
                path = os.path.join(out_dir, f"fig3_{name}.svg")
                save_figure(fig, path)
                summary.files.append(path)
        summary.add_check(
            f"fig3 {name}: transductive accuracy >= {cfg['threshold']}",
            passes >= cfg["min_pass"],
            f"{passes}/{n_seeds} seeds passed",
        )
    csv_path = os.path.join(out_dir, "fig3_results.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")
    summary.files.append(csv_path)
    return summary


FIG4_KERNEL = KernelSpec("rbf", 0.05)
FIG4_SVM_C = 2500.0


def _fig4_instance(seed: int):
    unlabeled = generate_crescent_moon(100, 0.3, seed=seed)
    labeled = generate_crescent_moon(1, 0.3, seed=derive_seed(seed, 1))
    X_u = unlabeled.features
    y_u_true = unlabeled.labels
    X_l = labeled.features
    y_l = list(labeled.labels)
    merged = Dataset(
        np.vstack([X_u, X_l]),
        [None] * len(y_u_true) + y_l,
        class_order=unlabeled.class_order,
    )
    return X_l, y_l, X_u, y_u_true, merged


def _fig4_graph_cfg(X_all: np.ndarray) -> GraphConfig:
    return GraphConfig(
        adjacency="knn", k=10, weight_sigma=median_heuristic_sigma(X_all)
    )


def run_fig4(out_dir: str, seed: int = 1, n_seeds: int = 10) -> ReplicationSummary:
    """Supervised SVM vs Laplacian SVM on the crescent moons."""
    os.makedirs(out_dir, exist_ok=True)
    summary = ReplicationSummary("fig4")
    svm_bad = 0
    lap_good = 0
    rows = ["seed,svm_unlabeled_error,lapsvm_gamma10000_accuracy"]
    for s in range(n_seeds):
        X_l, y_l, X_u, y_u_true, merged = _fig4_instance(derive_seed(seed, 40, s))
        svm = train_svm(X_l, y_l, FIG4_KERNEL, C=FIG4_SVM_C, class_order=merged.class_order)
        svm_err = float(np.mean([p != t for p, t in zip(svm.predict(X_u), y_u_true)]))
        graph_cfg = _fig4_graph_cfg(np.vstack([X_l, X_u]))
        lap_hi = train_laplacian_svm(
            X_l,
            y_l,
            X_u,
            FIG4_KERNEL,
            LapParams(lam=1e-4, gamma=10000.0),
            graph_cfg,
            class_order=merged.class_order,
        )
        acc_hi = float(np.mean([p == t for p, t in zip(lap_hi.predict(X_u), y_u_true)]))
        rows.append(f"{s},{svm_err!r},{acc_hi!r}")
        svm_bad += svm_err >= 0.10
        lap_good += acc_hi >= 0.95
        if s == 0:
            lap_lo = train_laplacian_svm(
                X_l,
                y_l,
                X_u,
                FIG4_KERNEL,
                LapParams(lam=1e-4, gamma=10.0),
                graph_cfg,
                class_order=merged.class_order,
            )
            for model, fname, title in (
                (svm, "fig4_svm.svg", "SVM (C=2500)"),
                (lap_lo, "fig4_lapsvm_gamma10.svg", "Laplacian SVM (gamma=10)"),
                (lap_hi, "fig4_lapsvm_gamma10000.svg", "Laplacian SVM (gamma=10000)"),
            ):
                fig = boundary_figure(model, merged, title=title)
                path = os.path.join(out_dir, fname)
                save_figure(fig, path)
                summary.files.append(path)
            summary.lines.append(
                f"seed 0: supervised SVM unlabeled error {svm_err:.3f}, "
                f"LapSVM gamma=10000 transductive accuracy {acc_hi:.3f}"
            )
    csv_path = os.path.join(out_dir, "fig4_results.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")
    summary.files.append(csv_path)
    summary.add_check(
        "fig4: supervised SVM misclassifies >= 10% of unlabeled points",
        svm_bad >= min(5, n_seeds),
        f"{svm_bad}/{n_seeds} seeds",
    )
    summary.add_check(
        "fig4: LapSVM gamma=10000 reaches >= 95% transductive accuracy",
        lap_good >= min(8, n_seeds),
        f"{lap_good}/{n_seeds} seeds",
    )
    return summary


def run_fig5(out_dir: str, seed: int = 1) -> ReplicationSummary:
    """Entropy-regularized vs plain logistic regression under the low-density
    assumption (expected Gaussian) and its violation (non-expected Gaussian).

    The original demonstration uses two bespoke artificial datasets; this
    replication substitutes the expected / non-expected Gaussian generators
    and says so in its output.
    """
    os.makedirs(out_dir, exist_ok=True)
    summary = ReplicationSummary("fig5")
    summary.lines.append(
        "note: low-density-valid/-invalid datasets are the expected/"
        "non-expected Gaussians (substitution for the original's unnamed datasets)"
    )
    for index, (name, expected) in enumerate(
        [("low-density", True), ("non-low-density", False)]
    ):
        full = generate_two_class_gaussian(500, 2, expected=expected, seed=derive_seed(seed, 50, index))
        attempt = 0
        while True:
            masked = add_missing_labels_mar(full, 0.98, seed=derive_seed(seed, 51, index, attempt))
            present = {y for y in masked.labels if y is not None}
            if len(present) == 2:
                break
            attempt += 1
        mask = masked.labeled_mask
        X_l = masked.features[mask]
        y_l = [y for y in masked.labels if y is not None]
        X_u = masked.features[~mask]
        lr = train_logistic(X_l, y_l, 0.01, class_order=full.class_order)
        erlr = train_erlr(
            X_l, y_l, X_u, lambda_entropy=1.0, lambda_ridge=0.01, class_order=full.class_order
        )
        err_lr = float(np.mean([p != t for p, t in zip(lr.predict(full.features), full.labels)]))
        err_erlr = float(
            np.mean([p != t for p, t in zip(erlr.predict(full.features), full.labels)])
        )
        summary.lines.append(
            f"{name}: error LR {err_lr:.3f} vs entropy-regularized LR {err_erlr:.3f}"
        )
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4.2))
        scatter_dataset(ax, masked)
        for model, style, label in ((lr, "--", "LR"), (erlr, "-", "ERLR")):
            xs, ys, Z = decision_grid(model, masked.features)
            for (x1, y1), (x2, y2) in marching_squares(xs, ys, Z):
                ax.plot([x1, x2], [y1, y2], style, color="black", linewidth=1.1)
        ax.set_title(f"{name} ({'expected' if expected else 'non-expected'} Gaussian)")
        fig.tight_layout()
        path = os.path.join(out_dir, f"fig5_{name}.svg")
        save_figure(fig, path)
        summary.files.append(path)
    return summary


def losses_for_seed(seed: int, n: int = 1000, ridge: float = LOSSES_RIDGE) -> dict:
    """All-data mean squared losses of the four estimators for one seed."""
    full = generate_two_class_gaussian(n, 2, expected=False, seed=derive_seed(seed, 0))
    attempt = 0
    while True:
        masked = add_missing_labels_mar(full, 0.995, seed=derive_seed(seed, 1, attempt))
        present = {y for y in masked.labels if y is not None}
        if len(present) == 2:
            break
        attempt += 1
    mask = masked.labeled_mask
    X_l = masked.features[mask]
    y_l = [y for y in masked.labels if y is not None]
    X_u = masked.features[~mask]
    order = full.class_order

    sup = train_least_squares(X_l, y_l, ridge, class_order=order)
    self_model = self_learning(
        lambda X, y: train_least_squares(X, y, ridge, class_order=order), X_l, y_l, X_u
    )
    icls = train_icls(X_l, y_l, X_u, lam=ridge, class_order=order)
    proj = train_icls_projection(
        X_l, y_l, X_u, lam=0.0, reference=sup, class_order=order
    )
    return {
        "supervised": measure_loss_all(sup, masked, full),
        "self-learning": measure_loss_all(self_model, masked, full),
        "icls": measure_loss_all(icls, masked, full),
        "icls-projection": measure_loss_all(proj, masked, full),
    }


def run_losses(out_dir: str, seed: int = 1, n_seeds: int = 20) -> ReplicationSummary:
    """Mean surrogate loss on the full training set for the four estimators."""
    os.makedirs(out_dir, exist_ok=True)
    summary = ReplicationSummary("losses")
    names = ["supervised", "self-learning", "icls", "icls-projection"]
    rows = ["seed," + ",".join(names)]
    all_losses = {name: [] for name in names}
    proj_ok = icls_ok = self_worse = 0
    for s in range(n_seeds):
        losses = losses_for_seed(derive_seed(seed, 60, s))
        rows.append(f"{s}," + ",".join(repr(losses[name]) for name in names))
        for name in names:
            all_losses[name].append(losses[name])
        proj_ok += losses["icls-projection"] <= losses["supervised"] + 1e-9
        icls_ok += losses["icls"] <= losses["supervised"]
        self_worse += losses["self-learning"] > losses["supervised"]
    csv_path = os.path.join(out_dir, "losses.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")
    summary.files.append(csv_path)
    summary.lines.append("mean all-data surrogate loss over seeds:")
    for name in names:
        summary.lines.append(f"  {name}: {np.mean(all_losses[name]):.7f}")
    summary.add_check(
        "losses: ICLS-projection never worse than supervised (within 1e-9)",
        proj_ok == n_seeds,
        f"{proj_ok}/{n_seeds} seeds",
    )
    summary.add_check(
        "losses: plain ICLS not worse than supervised on >= 95% of seeds",
        icls_ok >= int(np.ceil(0.95 * n_seeds)),
        f"{icls_ok}/{n_seeds} seeds",
    )
    summary.add_check(
        "losses: self-learning deteriorates the loss on >= 90% of seeds",
        self_worse >= int(np.ceil(0.90 * n_seeds)),
        f"{self_worse}/{n_seeds} seeds",
    )
    return summary


TARGETS = {
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "losses": run_losses,
}
